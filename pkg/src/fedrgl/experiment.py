"""Single experiment: resolve the dataset, run the federation, write artifacts."""

from __future__ import annotations

import json
import logging
from pathlib import Path

from .fed.config import SBM, ConfigError, RunConfig, stream_int
from .fed.federation import FederationResult, run_federation
from .fed.metrics import write_metrics
from .graph import GraphBundle, load_bundle
from .synth import generate_sbm

log = logging.getLogger(__name__)

METRICS_FILE = "metrics.csv"
CONFIG_FILE = "config.resolved.json"
SUMMARY_FILE = "summary.json"


def resolve_dataset(cfg: RunConfig) -> GraphBundle:
    if cfg.bundle is not None:
        path = Path(cfg.bundle)
        if not path.exists():
            raise ConfigError(f"dataset bundle not found: {path}")
        return load_bundle(path)
    if cfg.sbm is not None:
        return generate_sbm(cfg.sbm, seed=stream_int(cfg.seed, SBM))
    raise ConfigError("no dataset: set either 'bundle' or 'sbm' in the config")


def summarize(result: FederationResult) -> dict:
    cfg = result.config
    return {
        "method": cfg.method,
        "seed": cfg.seed,
        "rounds": len(result.records),
        "final_test_accuracy": result.final_accuracy,
        "best_val_round_test_accuracy": result.best_val_accuracy,
        "mean_filter_precision": result.mean_filter_stat("filter_precision"),
        "mean_filter_recall": result.mean_filter_stat("filter_recall"),
        "client_sizes": result.partition.sizes(),
        "noise_rates": [float(r) for r in result.noise_rates],
    }


def summary_line(summary: dict) -> str:
    def fmt(v):
        return "n/a" if v is None else f"{v:.4f}"

    return (
        f"{summary['method']} seed={summary['seed']} final_acc={fmt(summary['final_test_accuracy'])} "
        f"filter_precision={fmt(summary['mean_filter_precision'])} "
        f"filter_recall={fmt(summary['mean_filter_recall'])}"
    )


def run_experiment(cfg: RunConfig, out_dir, bundle: GraphBundle | None = None) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if bundle is None:
        bundle = resolve_dataset(cfg)
    (out / CONFIG_FILE).write_text(json.dumps(cfg.resolved(), indent=2) + "\n", encoding="utf-8")
    result = run_federation(cfg, bundle)
    write_metrics(out / METRICS_FILE, result.records, cfg.n_clients)
    summary = summarize(result)
    (out / SUMMARY_FILE).write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    return summary
