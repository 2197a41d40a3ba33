"""Experiment configuration: a strict INI file.

Every key an experiment needs lives in a section below; unknown sections
or keys are errors so typos fail loudly, and every diagnostic carries the
section.key path. See the README for a commented example.

  [dataset]     builtin OR path (+ label_column, missing_tokens)
  [network]     hidden_sizes, dropout_rate, learning_rate, batch_size
  [federation]  n_participants, rounds_max, local_epochs, val_threshold
  [partition]   mode (even|proportions|forced_small) + mode params,
                label_skew, split_ratios
  [missing_feature]  participant, feature, donor (optional section)
  [dp]          clip_norm, noise_scale, lot_size, delta
  [chaos]       r, burn_in
  [run]         modes, seeds, out_dir
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field

from . import datasets
from .data import (
    DEFAULT_MISSING_TOKENS,
    DEFAULT_SPLIT_RATIOS,
    Even,
    ForcedSmall,
    MissingFeatureSpec,
    PartitionMode,
    PartitionSpec,
    Proportions,
)
from .dp import DpConfig
from .errors import ConfigError
from .metrics import MODES

_TOKEN_SEP = "|"


def _parse_int(path: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{path}: expected an integer, got {raw!r}") from None


def _parse_float(path: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{path}: expected a number, got {raw!r}") from None


def _parse_int_list(path: str, raw: str) -> tuple[int, ...]:
    items = [t.strip() for t in raw.split(",") if t.strip()]
    if not items:
        raise ConfigError(f"{path}: expected a comma-separated list of integers")
    return tuple(_parse_int(path, t) for t in items)


def _parse_float_list(path: str, raw: str) -> tuple[float, ...]:
    items = [t.strip() for t in raw.split(",") if t.strip()]
    if not items:
        raise ConfigError(f"{path}: expected a comma-separated list of numbers")
    return tuple(_parse_float(path, t) for t in items)


_SECTION_KEYS = {
    "dataset": {"builtin", "path", "label_column", "missing_tokens"},
    "network": {"hidden_sizes", "dropout_rate", "learning_rate", "batch_size"},
    "federation": {"n_participants", "rounds_max", "local_epochs", "val_threshold"},
    "partition": {"mode", "proportions", "n_small", "cap", "label_skew", "split_ratios"},
    "missing_feature": {"participant", "feature", "donor"},
    "dp": {"clip_norm", "noise_scale", "lot_size", "delta"},
    "chaos": {"r", "burn_in"},
    "run": {"modes", "seeds", "out_dir"},
}


@dataclass(frozen=True)
class RunConfig:
    """Everything the CLI needs to reproduce an experiment."""

    dataset_path: str | None = None
    builtin: str | None = "breast_cancer"
    label_column: str = datasets.LABEL_COLUMN
    missing_tokens: tuple[str, ...] = DEFAULT_MISSING_TOKENS

    hidden_sizes: tuple[int, ...] = (64, 32, 16, 8)
    dropout_rate: float = 0.3
    learning_rate: float = 0.01
    batch_size: int | None = 4

    n_participants: int = 5
    rounds_max: int = 10
    local_epochs: int = 5
    val_threshold: float | None = None

    partition_mode: PartitionMode = field(default_factory=Even)
    label_skew: tuple[float, ...] | None = None
    missing_feature: MissingFeatureSpec | None = None
    split_ratios: tuple[float, float, float] = DEFAULT_SPLIT_RATIOS

    dp: DpConfig = field(default_factory=DpConfig)
    chaos_r: float = 3.8
    chaos_burn_in: int = 1000

    modes: tuple[str, ...] = ("plain",)
    seeds: tuple[int, ...] = (1, 2, 3, 4, 5)
    out_dir: str = "results"

    def __post_init__(self):
        if (self.dataset_path is None) == (self.builtin is None):
            raise ConfigError("dataset: set exactly one of 'path' or 'builtin'")
        if self.builtin is not None and self.builtin not in datasets.BUILTIN_DATASETS:
            raise ConfigError(
                f"dataset.builtin={self.builtin!r}: unknown "
                f"(have {', '.join(sorted(datasets.BUILTIN_DATASETS))})"
            )
        if self.dataset_path is not None and not os.path.exists(self.dataset_path):
            raise ConfigError(f"dataset.path={self.dataset_path!r}: file does not exist")
        if not self.hidden_sizes:
            raise ConfigError("network.hidden_sizes: must not be empty")
        if not self.seeds:
            raise ConfigError("run.seeds: must not be empty")
        for m in self.modes:
            if m not in MODES:
                raise ConfigError(f"run.modes: unknown mode {m!r} (use {', '.join(MODES)})")
        if not self.modes:
            raise ConfigError("run.modes: must not be empty")

    def partition_spec(self, seed: int) -> PartitionSpec:
        return PartitionSpec(
            mode=self.partition_mode,
            label_skew=self.label_skew,
            missing_feature=self.missing_feature,
            seed=seed,
        )


def _check_schema(parser: configparser.ConfigParser, path) -> None:
    for section in parser.sections():
        if section not in _SECTION_KEYS:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key in parser[section]:
            if key not in _SECTION_KEYS[section]:
                raise ConfigError(f"{path}: {section}.{key}: unknown key")


def load_config(path) -> RunConfig:
    """Parse and validate an INI experiment file into a RunConfig."""
    if not os.path.exists(path):
        raise ConfigError(f"config file {path!r} does not exist")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except configparser.Error as e:
        raise ConfigError(f"{path}: {e}") from None
    _check_schema(parser, path)
    kwargs: dict = {}

    if parser.has_section("dataset"):
        sec = parser["dataset"]
        if "path" in sec:
            kwargs["dataset_path"] = sec["path"].strip()
            kwargs["builtin"] = None
        if "builtin" in sec:
            if "path" in sec:
                raise ConfigError("dataset: set exactly one of 'path' or 'builtin'")
            kwargs["builtin"] = sec["builtin"].strip()
        if "label_column" in sec:
            kwargs["label_column"] = sec["label_column"].strip()
        if "missing_tokens" in sec:
            kwargs["missing_tokens"] = tuple(sec["missing_tokens"].split(_TOKEN_SEP))

    if parser.has_section("network"):
        sec = parser["network"]
        if "hidden_sizes" in sec:
            kwargs["hidden_sizes"] = _parse_int_list("network.hidden_sizes", sec["hidden_sizes"])
        if "dropout_rate" in sec:
            kwargs["dropout_rate"] = _parse_float("network.dropout_rate", sec["dropout_rate"])
        if "learning_rate" in sec:
            kwargs["learning_rate"] = _parse_float("network.learning_rate", sec["learning_rate"])
        if "batch_size" in sec:
            raw = sec["batch_size"].strip()
            kwargs["batch_size"] = None if raw == "full" else _parse_int("network.batch_size", raw)

    if parser.has_section("federation"):
        sec = parser["federation"]
        for key in ("n_participants", "rounds_max", "local_epochs"):
            if key in sec:
                kwargs[key] = _parse_int(f"federation.{key}", sec[key])
        if "val_threshold" in sec and sec["val_threshold"].strip():
            kwargs["val_threshold"] = _parse_float("federation.val_threshold", sec["val_threshold"])

    if parser.has_section("partition"):
        sec = parser["partition"]
        mode_name = sec.get("mode", "even").strip()
        if mode_name == "even":
            kwargs["partition_mode"] = Even()
        elif mode_name == "proportions":
            if "proportions" not in sec:
                raise ConfigError("partition.proportions: required when mode=proportions")
            kwargs["partition_mode"] = Proportions(
                _parse_float_list("partition.proportions", sec["proportions"])
            )
        elif mode_name == "forced_small":
            kwargs["partition_mode"] = ForcedSmall(
                n_small=_parse_int("partition.n_small", sec.get("n_small", "2")),
                cap=_parse_float("partition.cap", sec.get("cap", "0.10")),
            )
        else:
            raise ConfigError(
                f"partition.mode={mode_name!r}: use even, proportions, or forced_small"
            )
        if "label_skew" in sec:
            kwargs["label_skew"] = _parse_float_list("partition.label_skew", sec["label_skew"])
        if "split_ratios" in sec:
            ratios = _parse_float_list("partition.split_ratios", sec["split_ratios"])
            if len(ratios) != 3:
                raise ConfigError("partition.split_ratios: expected three numbers")
            kwargs["split_ratios"] = ratios

    if parser.has_section("missing_feature"):
        sec = parser["missing_feature"]
        if "participant" not in sec or "feature" not in sec:
            raise ConfigError("missing_feature: needs 'participant' and 'feature'")
        donor = sec.get("donor", "").strip()
        kwargs["missing_feature"] = MissingFeatureSpec(
            participant_id=_parse_int("missing_feature.participant", sec["participant"]),
            feature_name=sec["feature"].strip(),
            donor_id=_parse_int("missing_feature.donor", donor) if donor else None,
        )

    if parser.has_section("dp"):
        sec = parser["dp"]
        dp_kwargs: dict = {}
        if "clip_norm" in sec:
            dp_kwargs["clip_norm"] = _parse_float("dp.clip_norm", sec["clip_norm"])
        if "noise_scale" in sec:
            dp_kwargs["noise_scale"] = _parse_float("dp.noise_scale", sec["noise_scale"])
        if "lot_size" in sec:
            dp_kwargs["lot_size"] = _parse_int("dp.lot_size", sec["lot_size"])
        if "delta" in sec:
            dp_kwargs["delta"] = _parse_float("dp.delta", sec["delta"])
        kwargs["dp"] = DpConfig(**dp_kwargs)

    if parser.has_section("chaos"):
        sec = parser["chaos"]
        if "r" in sec:
            kwargs["chaos_r"] = _parse_float("chaos.r", sec["r"])
        if "burn_in" in sec:
            kwargs["chaos_burn_in"] = _parse_int("chaos.burn_in", sec["burn_in"])

    if parser.has_section("run"):
        sec = parser["run"]
        if "modes" in sec:
            kwargs["modes"] = tuple(
                t.strip() for t in sec["modes"].split(",") if t.strip()
            )
        if "seeds" in sec:
            kwargs["seeds"] = _parse_int_list("run.seeds", sec["seeds"])
        if "out_dir" in sec:
            kwargs["out_dir"] = sec["out_dir"].strip()

    return RunConfig(**kwargs)
