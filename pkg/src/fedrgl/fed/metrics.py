"""Per-round metrics CSV.

One row per communication round.  Fixed leading columns::

    round, phase, aggregation, global_test_accuracy, global_val_accuracy

followed, for every client m = 0..M-1, by the block::

    c{m}_train_loss      total local objective, last local epoch
    c{m}_ce_loss         clean-node cross-entropy, last local epoch
    c{m}_entropy         predictive entropy on val+test nodes after training
    c{m}_weight          aggregation weight the server gave this client
    c{m}_n_clean         |clean set| used this round
    c{m}_n_clean_global  |global-view clean set|
    c{m}_n_clean_struct  |structural-view clean set|
    c{m}_n_noisy         |noisy set|
    c{m}_n_pseudo        |pseudo-label set|, last local epoch
    c{m}_pseudo_conf     mean pseudo-label confidence, last local epoch
    c{m}_pseudo_acc      pseudo-label accuracy vs. uncorrupted labels
    c{m}_filter_precision, c{m}_filter_recall
                         noisy-set precision/recall vs. the injected noise mask

Undefined values (no filter in warm-up, empty pseudo set...) are empty cells.
Floats are written with ``repr`` so a CSV round-trips bit-exactly.
"""

from __future__ import annotations

import csv
from pathlib import Path

FIXED_COLUMNS = ["round", "phase", "aggregation", "global_test_accuracy", "global_val_accuracy"]
CLIENT_COLUMNS = [
    "train_loss",
    "ce_loss",
    "entropy",
    "weight",
    "n_clean",
    "n_clean_global",
    "n_clean_struct",
    "n_noisy",
    "n_pseudo",
    "pseudo_conf",
    "pseudo_acc",
    "filter_precision",
    "filter_recall",
]


def header(n_clients: int) -> list[str]:
    cols = list(FIXED_COLUMNS)
    for m in range(n_clients):
        cols.extend(f"c{m}_{name}" for name in CLIENT_COLUMNS)
    return cols


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def round_row(record) -> list[str]:
    row = [record.round, record.phase, record.aggregation, record.test_accuracy, record.val_accuracy]
    for rep, w in zip(record.reports, record.weights):
        last = rep.epochs[-1]
        row.extend(
            [
                rep.train_loss,
                rep.ce_loss,
                rep.entropy,
                float(w),
                rep.n_clean,
                rep.n_clean_global,
                rep.n_clean_structural,
                rep.n_noisy,
                last.n_pseudo,
                last.pseudo_confidence,
                last.pseudo_accuracy,
                rep.filter_precision,
                rep.filter_recall,
            ]
        )
    return [_cell(v) for v in row]


def write_metrics(path, records, n_clients: int) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header(n_clients))
        for rec in records:
            writer.writerow(round_row(rec))


def read_metrics(path) -> list[dict[str, str]]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
