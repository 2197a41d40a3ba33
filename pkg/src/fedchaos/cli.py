"""Command-line harness.

    fedchaos partition --config exp.ini [--seed N] [--out DIR]
    fedchaos run      --config exp.ini [--seed N] [--mode plain|dp|chaos] [--out DIR]
    fedchaos report   [--out DIR]

`run` executes every configured seed x mode cell, writing per-seed tables
(table_seed<S>.csv/.json), round histories (run_seed<S>.json), partition
manifests, and seed-averaged tables (table_mean.*, table_std.*). All
output files are byte-deterministic for a given config and seed. `report`
re-reads per-seed tables and prints mean +/- std per cell.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, replace

from . import data as data_mod
from . import datasets, metrics
from .config import RunConfig, load_config
from .data import Dataset, prepare_participants, save_manifest
from .dp import PrivacySpent
from .errors import ConfigError, FedChaosError
from .federation import (
    CipherMode,
    DpMode,
    FederationConfig,
    FederationResult,
    PlainMode,
    run_federation,
)
from .nn import NetworkConfig


def load_dataset(cfg: RunConfig) -> Dataset:
    if cfg.builtin is not None:
        return datasets.BUILTIN_DATASETS[cfg.builtin]()
    return data_mod.load_csv(cfg.dataset_path, cfg.label_column, cfg.missing_tokens)


def network_config(cfg: RunConfig, n_features: int) -> NetworkConfig:
    return NetworkConfig(
        layer_sizes=(n_features, *cfg.hidden_sizes, 1),
        dropout_rate=cfg.dropout_rate,
        learning_rate=cfg.learning_rate,
        batch_size=cfg.batch_size,
    )


def privacy_mode(cfg: RunConfig, name: str):
    if name == "plain":
        return PlainMode()
    if name == "dp":
        return DpMode(dp=cfg.dp)
    if name == "chaos":
        return CipherMode(r=cfg.chaos_r, burn_in=cfg.chaos_burn_in)
    raise ConfigError(f"unknown mode {name!r}")


def federation_config(cfg: RunConfig, net: NetworkConfig, mode: str, seed: int) -> FederationConfig:
    return FederationConfig(
        network=net,
        n_participants=cfg.n_participants,
        rounds_max=cfg.rounds_max,
        local_epochs=cfg.local_epochs,
        val_threshold=cfg.val_threshold,
        mode=privacy_mode(cfg, mode),
        seed=seed,
    )


def _spent_dict(spent: PrivacySpent | None):
    return None if spent is None else asdict(spent)


def _run_info(result: FederationResult) -> dict:
    return {
        "rounds_executed": len(result.history),
        "history": [asdict(r) for r in result.history],
        "privacy_spent": _spent_dict(result.privacy_spent),
    }


def cmd_partition(cfg: RunConfig, out_dir: str) -> int:
    dataset = load_dataset(cfg)
    os.makedirs(out_dir, exist_ok=True)
    for seed in cfg.seeds:
        spec = cfg.partition_spec(seed)
        assignments = data_mod.partition(dataset, spec, cfg.n_participants)
        manifest = os.path.join(out_dir, f"manifest_seed{seed}.txt")
        save_manifest(manifest, assignments, dataset.n_rows)
        print(f"seed {seed} -> {manifest}")
        for pid, rows in enumerate(assignments):
            frac = len(rows) / dataset.n_rows
            pos = float(dataset.labels[rows].mean())
            print(
                f"  participant {pid}: {len(rows)} rows "
                f"({100 * frac:.1f}%), positive rate {100 * pos:.1f}%"
            )
    return 0


def cmd_run(cfg: RunConfig, out_dir: str) -> int:
    dataset = load_dataset(cfg)
    net = network_config(cfg, dataset.n_features)
    os.makedirs(out_dir, exist_ok=True)
    tables = []
    for seed in cfg.seeds:
        spec = cfg.partition_spec(seed)
        assignments = data_mod.partition(dataset, spec, cfg.n_participants)
        save_manifest(os.path.join(out_dir, f"manifest_seed{seed}.txt"), assignments, dataset.n_rows)
        parts = prepare_participants(
            dataset, spec, cfg.n_participants, cfg.split_ratios, assignments=assignments
        )
        results: dict[str, FederationResult] = {}
        for mode in cfg.modes:
            results[mode] = run_federation(federation_config(cfg, net, mode, seed), parts)
        table = metrics.build_table(results)
        tables.append(table)
        metrics.export(table, "csv", os.path.join(out_dir, f"table_seed{seed}.csv"))
        metrics.export(table, "json", os.path.join(out_dir, f"table_seed{seed}.json"))
        with open(os.path.join(out_dir, f"run_seed{seed}.json"), "w") as fh:
            json.dump(
                {"seed": seed, "modes": {m: _run_info(r) for m, r in results.items()}},
                fh,
                indent=2,
            )
            fh.write("\n")
        print(f"seed {seed}: wrote table_seed{seed}.csv/.json")

    mean_t, std_t = metrics.aggregate_tables(tables)
    metrics.export(mean_t, "csv", os.path.join(out_dir, "table_mean.csv"))
    metrics.export(mean_t, "json", os.path.join(out_dir, "table_mean.json"))
    metrics.export(std_t, "csv", os.path.join(out_dir, "table_std.csv"))
    metrics.export(std_t, "json", os.path.join(out_dir, "table_std.json"))
    print(f"\nmean over {len(cfg.seeds)} seed(s):")
    print(metrics.format_table(mean_t))
    return 0


def cmd_report(out_dir: str) -> int:
    if not os.path.isdir(out_dir):
        raise ConfigError(f"result directory {out_dir!r} does not exist")
    paths = sorted(
        os.path.join(out_dir, f)
        for f in os.listdir(out_dir)
        if f.startswith("table_seed") and f.endswith(".csv")
    )
    if not paths:
        raise ConfigError(f"no table_seed*.csv files in {out_dir!r}")
    tables = [metrics.load_table(p, "csv") for p in paths]
    mean_t, std_t = metrics.aggregate_tables(tables)
    print(f"aggregated over {len(tables)} seed table(s) in {out_dir}:")
    print(metrics.format_aggregate(mean_t, std_t))
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fedchaos",
        description="Deterministic federated-learning experiments with privacy layers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, needs_config in (("partition", True), ("run", True), ("report", False)):
        p = sub.add_parser(name)
        if needs_config:
            p.add_argument("--config", required=True, help="experiment INI file")
            p.add_argument("--seed", type=int, default=None, help="run only this seed")
            p.add_argument(
                "--mode", choices=metrics.MODES, default=None, help="run only this mode"
            )
        p.add_argument("--out", default=None, help="output directory (default from config)")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "report":
            return cmd_report(args.out if args.out is not None else "results")
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = replace(cfg, seeds=(args.seed,))
        if args.mode is not None:
            cfg = replace(cfg, modes=(args.mode,))
        out_dir = args.out if args.out is not None else cfg.out_dir
        if args.command == "partition":
            return cmd_partition(cfg, out_dir)
        return cmd_run(cfg, out_dir)
    except FedChaosError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
