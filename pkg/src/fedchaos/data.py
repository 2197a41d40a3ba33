"""Dataset loading, non-IID partitioning, and the feature-sharing protocol.

The pipeline order is: load a CSV, cut it into participant shares
(partition), split each share into train/val/test, optionally run the
masked-feature protocol (mask a column, receive the donor's encrypted
train-split distribution, impute its mean), and standardize last with each
participant's own train statistics. A masked-then-imputed column is
constant, so the zero-variance guard in standardize leaves it alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import chaos, wire
from .errors import (
    ConfigError,
    ConsistencyError,
    DomainError,
    FeasibilityError,
    FormatError,
    IntegrityError,
    SchemaError,
)

DEFAULT_MISSING_TOKENS = ("?", "", "NaN", "nan", "NA")
DEFAULT_SPLIT_RATIOS = (0.70, 0.15, 0.15)
SEED_MASK = 2**64 - 1


@dataclass
class Dataset:
    """Feature matrix with binary labels; immutable by convention."""

    feature_names: tuple[str, ...]
    features: np.ndarray  # (n, d) float64
    labels: np.ndarray  # (n,) float64, values in {0, 1}

    def __post_init__(self):
        self.feature_names = tuple(str(n) for n in self.feature_names)
        self.features = np.ascontiguousarray(self.features, dtype=np.float64)
        self.labels = np.ascontiguousarray(self.labels, dtype=np.float64)
        if self.features.ndim != 2:
            raise SchemaError(f"features must be 2-D, got ndim={self.features.ndim}")
        if self.features.shape[1] != len(self.feature_names):
            raise SchemaError(
                f"{len(self.feature_names)} feature names for {self.features.shape[1]} columns"
            )
        if self.labels.shape != (self.features.shape[0],):
            raise SchemaError("labels length does not match feature rows")
        if self.features.shape[0] < 1:
            raise SchemaError("dataset needs at least one row")
        if not np.all(np.isfinite(self.features)):
            raise SchemaError("features contain NaN or Inf after preprocessing")
        if not np.all((self.labels == 0.0) | (self.labels == 1.0)):
            bad = self.labels[(self.labels != 0.0) & (self.labels != 1.0)][0]
            raise SchemaError(f"labels must be 0 or 1, found {bad}")

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def positive_rate(self) -> float:
        return float(self.labels.mean())

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.feature_names, self.features[idx], self.labels[idx])


@dataclass(frozen=True)
class Even:
    """Equal shares; any remainder rows handed out one by one."""


@dataclass(frozen=True)
class Proportions:
    fractions: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "fractions", tuple(float(f) for f in self.fractions))
        if any(f <= 0.0 for f in self.fractions):
            raise ConfigError("partition.proportions: every fraction must be > 0")
        if abs(sum(self.fractions) - 1.0) > 1e-9:
            raise ConfigError(
                f"partition.proportions: fractions sum to {sum(self.fractions)}, need 1"
            )


@dataclass(frozen=True)
class ForcedSmall:
    """Quantity skew: at least n_small participants get <= cap of the rows."""

    n_small: int = 2
    cap: float = 0.10

    def __post_init__(self):
        if self.n_small < 1:
            raise ConfigError("partition.forced_small.n_small: must be >= 1")
        if not 0.0 < self.cap <= 0.10:
            raise ConfigError(f"partition.forced_small.cap={self.cap}: must be in (0, 0.10]")


PartitionMode = Even | Proportions | ForcedSmall


@dataclass(frozen=True)
class MissingFeatureSpec:
    """Mask `feature_name` at one participant; donor shares its distribution.

    donor_id None means the largest other participant volunteers.
    """

    participant_id: int
    feature_name: str
    donor_id: int | None = None

    def __post_init__(self):
        if self.donor_id is not None and self.donor_id == self.participant_id:
            raise ConfigError("missing_feature: donor must differ from the masked participant")


@dataclass(frozen=True)
class PartitionSpec:
    mode: PartitionMode = field(default_factory=Even)
    label_skew: tuple[float, ...] | None = None
    missing_feature: MissingFeatureSpec | None = None
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.mode, (Even, Proportions, ForcedSmall)):
            raise ConfigError(f"partition.mode: unknown mode {type(self.mode).__name__}")
        if self.label_skew is not None:
            object.__setattr__(self, "label_skew", tuple(float(t) for t in self.label_skew))
            if any(not 0.0 <= t <= 1.0 for t in self.label_skew):
                raise ConfigError("partition.label_skew: targets must lie in [0, 1]")


@dataclass(frozen=True)
class FeatureDistribution:
    """What the sharing protocol reveals: a name and (mean, std, n)."""

    name: str
    mean: float
    std: float
    n: int

    def __post_init__(self):
        if not math.isfinite(self.mean) or not math.isfinite(self.std):
            raise DomainError("feature distribution has non-finite statistics")
        if self.std < 0.0:
            raise DomainError(f"feature distribution std={self.std}: must be >= 0")
        if self.n < 1:
            raise DomainError(f"feature distribution n={self.n}: must be >= 1")


@dataclass(frozen=True)
class MaskedFeature:
    name: str
    original_index: int


@dataclass
class ParticipantData:
    """One participant's three splits plus bookkeeping for reports."""

    id: int
    train: Dataset
    val: Dataset
    test: Dataset
    size_fraction: float
    pending_features: tuple[MaskedFeature, ...] = ()
    imputed_features: tuple[str, ...] = ()

    def __post_init__(self):
        if not 0.0 < self.size_fraction <= 1.0:
            raise ConfigError(f"size_fraction={self.size_fraction}: must lie in (0, 1]")
        names = self.train.feature_names
        if self.val.feature_names != names or self.test.feature_names != names:
            raise ConsistencyError("splits disagree on feature names")

    @property
    def n_rows(self) -> int:
        return self.train.n_rows + self.val.n_rows + self.test.n_rows

    @property
    def positive_rate(self) -> float:
        pos = self.train.labels.sum() + self.val.labels.sum() + self.test.labels.sum()
        return float(pos / self.n_rows)


def _is_missing(cell: str, missing_tokens: tuple[str, ...]) -> bool:
    return cell.strip() in missing_tokens


def load_csv(
    path,
    label_column: str,
    missing_tokens: tuple[str, ...] = DEFAULT_MISSING_TOKENS,
) -> Dataset:
    """Parse a headered CSV into a binary-labeled Dataset.

    Columns whose non-missing cells all parse as numbers stay numeric;
    anything else is categorical and is coded by sorted category order.
    Rows missing the label are dropped; remaining missing cells get the
    column median. A label column with more than two distinct values is a
    schema error.
    """
    import csv

    missing_tokens = tuple(missing_tokens)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file, expected a header row") from None
        header = [h.strip() for h in header]
        if label_column not in header:
            raise SchemaError(f"{path}: no column named {label_column!r} in header")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise FormatError(
                    f"{path}: row {lineno} has {len(row)} cells, header has {len(header)}"
                )
            rows.append(row)
    if not rows:
        raise FormatError(f"{path}: no data rows")

    label_idx = header.index(label_column)
    kept = [r for r in rows if not _is_missing(r[label_idx], missing_tokens)]
    if not kept:
        raise FormatError(f"{path}: every row is missing the label")

    n = len(kept)
    feature_cols = [i for i in range(len(header)) if i != label_idx]
    features = np.empty((n, len(feature_cols)), dtype=np.float64)

    for out_c, c in enumerate(feature_cols):
        cells = [r[c] for r in kept]
        missing = np.array([_is_missing(v, missing_tokens) for v in cells])
        present = [v.strip() for v, m in zip(cells, missing) if not m]
        if not present:
            raise SchemaError(f"{path}: column {header[c]!r} has no usable values")
        col = np.full(n, np.nan)
        try:
            parsed = [float(v) for v in present]
        except ValueError:
            categories = {v: k for k, v in enumerate(sorted(set(present)))}
            parsed = [categories[v] for v in present]
        col[~missing] = parsed
        if missing.any():
            col[missing] = np.median(col[~missing])
        features[:, out_c] = col

    label_cells = [r[label_idx].strip() for r in kept]
    try:
        label_vals = [float(v) for v in label_cells]
    except ValueError:
        classes = sorted(set(label_cells))
        if len(classes) != 2:
            raise SchemaError(
                f"{path}: label column {label_column!r} has {len(classes)} classes, need 2"
            ) from None
        coding = {classes[0]: 0.0, classes[1]: 1.0}
        label_vals = [coding[v] for v in label_cells]
    labels = np.array(label_vals, dtype=np.float64)
    bad = labels[(labels != 0.0) & (labels != 1.0)]
    if bad.size:
        raise SchemaError(f"{path}: label value {bad[0]} is not binary (0/1)")

    names = tuple(header[c] for c in feature_cols)
    return Dataset(names, features, labels)


def standardize(train: Dataset, others: list[Dataset]) -> tuple[Dataset, list[Dataset]]:
    """Z-score all splits with the train split's mean/std; constant train
    columns pass through unchanged everywhere."""
    mean = train.features.mean(axis=0)
    std = train.features.std(axis=0)
    live = std > 0.0
    shift = np.where(live, mean, 0.0)
    scale = np.where(live, std, 1.0)

    def apply(d: Dataset) -> Dataset:
        if d.feature_names != train.feature_names:
            raise ConsistencyError("cannot standardize a split with different features")
        return Dataset(d.feature_names, (d.features - shift) / scale, d.labels)

    return apply(train), [apply(d) for d in others]


def largest_remainder(total: int, weights) -> np.ndarray:
    """Integer sizes proportional to weights, summing exactly to total."""
    w = np.asarray(weights, dtype=np.float64)
    if w.sum() <= 0:
        raise DomainError("weights must have positive sum")
    exact = total * w / w.sum()
    sizes = np.floor(exact).astype(np.int64)
    leftover = total - int(sizes.sum())
    if leftover:
        order = np.argsort(-(exact - sizes), kind="stable")
        sizes[order[:leftover]] += 1
    return sizes


def _partition_sizes(
    n: int, mode: PartitionMode, k: int, rng: np.random.Generator
) -> np.ndarray:
    if isinstance(mode, Even):
        base, rem = divmod(n, k)
        return np.array([base + 1] * rem + [base] * (k - rem), dtype=np.int64)
    if isinstance(mode, Proportions):
        if len(mode.fractions) != k:
            raise ConfigError(
                f"partition.proportions: {len(mode.fractions)} fractions for {k} participants"
            )
        fractions = np.asarray(mode.fractions)
        sizes = np.floor(n * fractions).astype(np.int64)
        sizes[int(np.argmax(fractions))] += n - int(sizes.sum())
        if sizes.min() < 3:
            raise FeasibilityError(
                f"partition.proportions: smallest share gets {sizes.min()} rows, need >= 3"
            )
        return sizes
    if isinstance(mode, ForcedSmall):
        if mode.n_small >= k:
            raise ConfigError("partition.forced_small: n_small must leave at least one large participant")
        cap_rows = int(math.floor(mode.cap * n))
        if cap_rows < 10:
            raise FeasibilityError(
                f"partition.forced_small: cap {mode.cap} allows only {cap_rows} rows, "
                "need >= 10 for usable splits"
            )
        # Shares far below the cap leave one-row test splits whose accuracy
        # is all-or-nothing, so keep the draw in the upper band of the cap.
        low = max(10, int(math.floor(0.35 * cap_rows)))
        small = rng.integers(low, cap_rows + 1, size=mode.n_small)
        remaining = n - int(small.sum())
        n_large = k - mode.n_small
        if remaining < 10 * n_large:
            raise FeasibilityError(
                "partition.forced_small: not enough rows left for the large participants"
            )
        # weights in [1, 2) keep the large shares within a factor of two of
        # each other; the quantity skew should come from the capped shares,
        # not from one participant dwarfing the rest
        weights = rng.random(n_large) + 1.0
        large = largest_remainder(remaining, weights)
        while large.min() < 10:
            large[int(np.argmax(large))] -= 1
            large[int(np.argmin(large))] += 1
        sizes = np.concatenate([large, small]).astype(np.int64)
        return sizes[rng.permutation(k)]
    raise ConfigError(f"unknown partition mode {type(mode).__name__}")


def _skewed_positive_counts(
    sizes: np.ndarray, targets: tuple[float, ...], n_pos: int
) -> np.ndarray:
    """Greedy integer positive counts hitting each target rate within 5pp.

    All positives must land somewhere, so counts are first rounded to the
    targets and then rebalanced one row at a time, always adjusting the
    participant whose rate suffers least.
    """
    k = len(sizes)
    pos = np.minimum(sizes, np.rint(np.asarray(targets) * sizes).astype(np.int64))
    deficit = n_pos - int(pos.sum())
    step = 1 if deficit > 0 else -1
    for _ in range(abs(deficit)):
        best, best_cost = -1, None
        for i in range(k):
            cand = pos[i] + step
            if not 0 <= cand <= sizes[i]:
                continue
            cost = abs(cand / sizes[i] - targets[i])
            if best_cost is None or cost < best_cost:
                best, best_cost = i, cost
        if best < 0:
            raise FeasibilityError(
                "label_skew: positive rows cannot be absorbed within the share sizes"
            )
        pos[best] += step
    rates = pos / sizes
    worst = int(np.argmax(np.abs(rates - targets)))
    if abs(rates[worst] - targets[worst]) > 0.05 + 1e-12:
        raise FeasibilityError(
            f"label_skew: participant {worst} can only reach positive rate "
            f"{rates[worst]:.4f} against target {targets[worst]:.4f} "
            f"(share of {sizes[worst]} rows, {n_pos} positives overall)"
        )
    return pos


def partition(dataset: Dataset, spec: PartitionSpec, n_participants: int) -> list[np.ndarray]:
    """Cut the dataset into disjoint, covering row-index shares.

    Returns one index array per participant. With label_skew targets, rows
    are drawn class-stratified to approach each target positive rate;
    otherwise shares are plain shuffled cuts.
    """
    if n_participants < 2:
        raise ConfigError(f"n_participants={n_participants}: must be >= 2")
    if dataset.n_rows < 10 * n_participants:
        raise ConfigError(
            f"dataset has {dataset.n_rows} rows; need at least {10 * n_participants} "
            f"for {n_participants} participants"
        )
    if spec.label_skew is not None and len(spec.label_skew) != n_participants:
        raise ConfigError(
            f"partition.label_skew: {len(spec.label_skew)} targets for {n_participants} participants"
        )
    rng = np.random.default_rng(np.random.SeedSequence(entropy=(spec.seed & SEED_MASK, 4)))
    sizes = _partition_sizes(dataset.n_rows, spec.mode, n_participants, rng)

    if spec.label_skew is None:
        perm = rng.permutation(dataset.n_rows)
        bounds = np.cumsum(sizes)[:-1]
        return [np.sort(part) for part in np.split(perm, bounds)]

    pos_idx = rng.permutation(np.flatnonzero(dataset.labels == 1.0))
    neg_idx = rng.permutation(np.flatnonzero(dataset.labels == 0.0))
    pos_counts = _skewed_positive_counts(sizes, spec.label_skew, len(pos_idx))
    neg_counts = sizes - pos_counts
    if neg_counts.sum() != len(neg_idx):
        raise ConsistencyError("negative rows do not balance after skew assignment")
    out, p_off, n_off = [], 0, 0
    for pc, nc in zip(pos_counts, neg_counts):
        take = np.concatenate([pos_idx[p_off : p_off + pc], neg_idx[n_off : n_off + nc]])
        p_off += pc
        n_off += nc
        out.append(np.sort(take))
    return out


def split_tvt(
    data: Dataset,
    ratios: tuple[float, float, float] = DEFAULT_SPLIT_RATIOS,
    seed: int = 0,
) -> tuple[Dataset, Dataset, Dataset]:
    """Train/val/test split, stratified by label when each class has >= 3
    rows; every split is guaranteed at least one row."""
    if len(ratios) != 3 or any(r <= 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise ConfigError(f"split ratios {ratios}: need three positive values summing to 1")
    if data.n_rows < 3:
        raise ConfigError(f"cannot split {data.n_rows} rows into three non-empty parts")
    rng = np.random.default_rng(int(seed) & SEED_MASK)

    n_pos = int((data.labels == 1.0).sum())
    n_neg = data.n_rows - n_pos
    buckets: list[list[int]] = [[], [], []]
    if min(n_pos, n_neg) >= 3:
        class_pools = [
            rng.permutation(np.flatnonzero(data.labels == v)) for v in (0.0, 1.0)
        ]
    else:
        class_pools = [rng.permutation(data.n_rows)]

    # Per-class quotas can drift from the exact global sizes by a row or two
    # when rounding ties land in the same bucket, so reconcile them against
    # the whole-dataset largest-remainder targets before assigning rows.
    targets = largest_remainder(data.n_rows, ratios)
    quotas = [largest_remainder(len(pool), ratios) for pool in class_pools]
    totals = np.sum(quotas, axis=0)
    while np.any(totals != targets):
        over = int(np.argmax(totals - targets))
        under = int(np.argmin(totals - targets))
        donor_class = int(np.argmax([q[over] for q in quotas]))
        quotas[donor_class][over] -= 1
        quotas[donor_class][under] += 1
        totals = np.sum(quotas, axis=0)

    for pool, counts in zip(class_pools, quotas):
        off = 0
        for b, c in enumerate(counts):
            buckets[b].extend(pool[off : off + c])
            off += c

    sizes = np.array([len(b) for b in buckets])
    while sizes.min() == 0:
        src, dst = int(np.argmax(sizes)), int(np.argmin(sizes))
        buckets[dst].append(buckets[src].pop())
        sizes = np.array([len(b) for b in buckets])

    return tuple(data.subset(np.sort(np.array(b, dtype=np.int64))) for b in buckets)


def mask_feature(participant: ParticipantData, feature: str) -> ParticipantData:
    """Drop the named column from all three splits, remembering its slot."""
    names = participant.train.feature_names
    if feature not in names:
        raise SchemaError(f"no feature named {feature!r} (have {', '.join(names)})")
    idx = names.index(feature)
    kept = [i for i in range(len(names)) if i != idx]
    new_names = tuple(names[i] for i in kept)

    def drop(d: Dataset) -> Dataset:
        return Dataset(new_names, d.features[:, kept], d.labels)

    return replace(
        participant,
        train=drop(participant.train),
        val=drop(participant.val),
        test=drop(participant.test),
        pending_features=participant.pending_features + (MaskedFeature(feature, idx),),
    )


def compute_feature_distribution(donor: ParticipantData, feature: str) -> FeatureDistribution:
    """(mean, population std, n) of the donor's train split only."""
    names = donor.train.feature_names
    if feature not in names:
        raise SchemaError(f"donor has no feature named {feature!r}")
    col = donor.train.features[:, names.index(feature)]
    return FeatureDistribution(
        name=feature, mean=float(col.mean()), std=float(col.std()), n=int(col.size)
    )


def share_distribution_encrypted(dist: FeatureDistribution, key: chaos.ChaosKey) -> chaos.CipherBlob:
    return chaos.encrypt(wire.encode_distribution(dist.name, dist.mean, dist.std, dist.n), key)


def receive_distribution(blob: chaos.CipherBlob | bytes, key: chaos.ChaosKey) -> FeatureDistribution:
    plain = chaos.decrypt(blob, key)
    try:
        name, mean, std, n = wire.decode_distribution(plain)
        return FeatureDistribution(name=name, mean=mean, std=std, n=n)
    except (FormatError, DomainError) as e:
        raise IntegrityError(f"distribution payload failed to parse (wrong key?): {e}") from e


def impute_missing(masked: ParticipantData, dist: FeatureDistribution) -> ParticipantData:
    """Restore the masked column at its original index, filled with dist.mean."""
    match = [m for m in masked.pending_features if m.name == dist.name]
    if not match:
        raise ConsistencyError(f"no pending masked feature named {dist.name!r}")
    mf = match[0]

    def restore(d: Dataset) -> Dataset:
        names = list(d.feature_names)
        names.insert(mf.original_index, mf.name)
        col = np.full((d.n_rows, 1), dist.mean)
        feats = np.concatenate(
            [d.features[:, : mf.original_index], col, d.features[:, mf.original_index :]], axis=1
        )
        return Dataset(tuple(names), feats, d.labels)

    return replace(
        masked,
        train=restore(masked.train),
        val=restore(masked.val),
        test=restore(masked.test),
        pending_features=tuple(m for m in masked.pending_features if m.name != dist.name),
        imputed_features=masked.imputed_features + (dist.name,),
    )


def _default_donor(parts: list[ParticipantData], recipient: int) -> int:
    others = [p for p in parts if p.id != recipient]
    return max(others, key=lambda p: (p.n_rows, -p.id)).id


def prepare_participants(
    dataset: Dataset,
    spec: PartitionSpec,
    n_participants: int,
    ratios: tuple[float, float, float] = DEFAULT_SPLIT_RATIOS,
    standardize_features: bool = True,
    assignments: list[np.ndarray] | None = None,
) -> list[ParticipantData]:
    """Full preparation pipeline: partition, split, share/impute, standardize.

    Pass `assignments` (e.g. reloaded from a manifest) to skip partitioning
    and replay an exact row layout.
    """
    if assignments is None:
        assignments = partition(dataset, spec, n_participants)
    elif len(assignments) != n_participants:
        raise ConfigError(
            f"{len(assignments)} manifest shares for {n_participants} participants"
        )
    parts: list[ParticipantData] = []
    for pid, rows in enumerate(assignments):
        sub = dataset.subset(rows)
        split_seed = int(
            np.random.SeedSequence(entropy=(spec.seed & SEED_MASK, 5, pid)).generate_state(
                1, dtype=np.uint64
            )[0]
        )
        train, val, test = split_tvt(sub, ratios, seed=split_seed)
        parts.append(
            ParticipantData(
                id=pid,
                train=train,
                val=val,
                test=test,
                size_fraction=len(rows) / dataset.n_rows,
            )
        )

    if spec.missing_feature is not None:
        mf = spec.missing_feature
        if not 0 <= mf.participant_id < n_participants:
            raise ConfigError(f"missing_feature.participant_id={mf.participant_id}: out of range")
        donor_id = mf.donor_id if mf.donor_id is not None else _default_donor(parts, mf.participant_id)
        if not 0 <= donor_id < n_participants:
            raise ConfigError(f"missing_feature.donor_id={donor_id}: out of range")
        if donor_id == mf.participant_id:
            raise ConfigError("missing_feature: donor must differ from the masked participant")
        masked = mask_feature(parts[mf.participant_id], mf.feature_name)
        dist = compute_feature_distribution(parts[donor_id], mf.feature_name)
        key = chaos.derive_key(spec.seed, donor_id, mf.participant_id)
        received = receive_distribution(share_distribution_encrypted(dist, key), key)
        parts[mf.participant_id] = impute_missing(masked, received)

    if standardize_features:
        for i, p in enumerate(parts):
            train, (val, test) = standardize(p.train, [p.val, p.test])
            parts[i] = replace(p, train=train, val=val, test=test)
    return parts


def save_manifest(path, assignments: list[np.ndarray], dataset_rows: int) -> None:
    """Write a replayable text manifest: one `p<i>: idx idx ...` line per
    participant."""
    lines = [f"rows {dataset_rows}", f"participants {len(assignments)}"]
    for pid, rows in enumerate(assignments):
        lines.append(f"p{pid}: " + " ".join(str(int(i)) for i in rows))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_manifest(path) -> tuple[list[np.ndarray], int]:
    """Read a manifest back; verifies the shares form an exact partition."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    try:
        rows_total = int(lines[0].split()[1])
        k = int(lines[1].split()[1])
        assignments = []
        for pid in range(k):
            tag, _, rest = lines[2 + pid].partition(":")
            if tag != f"p{pid}":
                raise FormatError(f"{path}: expected line for p{pid}, found {tag!r}")
            assignments.append(np.array([int(t) for t in rest.split()], dtype=np.int64))
    except (IndexError, ValueError) as e:
        raise FormatError(f"{path}: malformed manifest ({e})") from e
    combined = np.concatenate(assignments) if assignments else np.array([], dtype=np.int64)
    if len(np.unique(combined)) != len(combined):
        raise IntegrityError(f"{path}: manifest shares overlap")
    if len(combined) != rows_total or (len(combined) and combined.max() >= rows_total):
        raise IntegrityError(f"{path}: manifest does not cover exactly {rows_total} rows")
    return assignments, rows_total
