"""Run artifacts: per-epoch CSV log, summary JSON, pseudo-loss snapshots and
the derived plot-data files.

All writers are deterministic: floats are serialized with repr (shortest
round-trip, '.' decimal), undefined values as 'nan' in CSV and null in JSON,
and no timestamps end up in files.
"""
from __future__ import annotations

import dataclasses
import json
import math
from pathlib import Path

import numpy as np

from .datagen import Dataset, Provenance
from .model import save_checkpoint
from .training import TrainReport

CSV_COLUMNS = ["epoch", "lr", "l_classif", "l_cont", "train_acc", "test_acc",
               "noise_auc", "pseudo_auc", "frac_detected_noisy", "mean_w"]
SNAPSHOT_COLUMNS = ["epoch", "sample", "pseudo_loss", "w", "detected_noisy",
                    "provenance", "pseudo_correct"]
HISTOGRAM_BINS = 30


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_epoch_csv(path, report: TrainReport) -> None:
    lines = [",".join(CSV_COLUMNS)]
    for row in report.epochs:
        values = [getattr(row, col) for col in CSV_COLUMNS]
        lines.append(",".join(_fmt(v) for v in values))
    Path(path).write_text("\n".join(lines) + "\n")


def _jsonable(value):
    if isinstance(value, float) and math.isnan(value):
        return None
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


def write_summary_json(path, report: TrainReport) -> None:
    """Summary sans wall-clock, which would break byte-identical reruns."""
    epochs = [{k: _jsonable(v) for k, v in dataclasses.asdict(row).items()}
              for row in report.epochs]
    payload = {
        "config": dataclasses.asdict(report.config),
        "seed": report.config.seed,
        "best_test_acc": report.best_test_acc,
        "final_test_acc": report.final_test_acc,
        "best_epoch": report.best_epoch,
        "epochs": epochs,
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_snapshots_csv(path, report: TrainReport, dataset: Dataset) -> None:
    """Per-sample pseudo-loss rows at every snapshot epoch.

    pseudo_correct is 1/0 for in-distribution samples and -1 where no correct
    label exists (OOD)."""
    lines = [",".join(SNAPSHOT_COLUMNS)]
    for epoch, state in report.snapshots:
        guesses = state.pseudo_label.argmax(axis=1)
        for i in range(len(dataset)):
            if dataset.provenance[i] == Provenance.OOD_NOISE:
                correct = -1
            else:
                correct = int(guesses[i] == dataset.true_labels[i])
            lines.append(",".join([
                str(epoch), str(i), _fmt(state.pseudo_loss[i]), _fmt(state.w[i]),
                str(int(not state.clean_mask[i])),
                Provenance(dataset.provenance[i]).name, str(correct)]))
    Path(path).write_text("\n".join(lines) + "\n")


def write_run_artifacts(out_dir, report: TrainReport, dataset: Dataset) -> dict[str, str]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "csv_path": str(out / "epochs.csv"),
        "summary_path": str(out / "summary.json"),
        "checkpoint_path": str(out / "model.ckpt"),
        "snapshots_path": str(out / "pseudo_snapshots.csv"),
    }
    write_epoch_csv(paths["csv_path"], report)
    write_summary_json(paths["summary_path"], report)
    save_checkpoint(paths["checkpoint_path"], report.model, report.head)
    write_snapshots_csv(paths["snapshots_path"], report, dataset)
    return paths


def _read_csv(path) -> tuple[list[str], list[list[str]]]:
    lines = Path(path).read_text().strip().splitlines()
    header = lines[0].split(",")
    return header, [line.split(",") for line in lines[1:]]


def build_report_files(run_dir, out_dir) -> dict[str, str]:
    """Plot-data emission for a finished run: detection AUC curves per epoch
    and pseudo-loss histograms (split by guess correctness) per snapshot."""
    run = Path(run_dir)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    header, rows = _read_csv(run / "epochs.csv")
    col = {name: i for i, name in enumerate(header)}
    curve_lines = ["epoch,noise_auc,pseudo_auc"]
    for row in rows:
        curve_lines.append(",".join([row[col["epoch"]], row[col["noise_auc"]],
                                     row[col["pseudo_auc"]]]))
    curves_path = out / "auc_curves.csv"
    curves_path.write_text("\n".join(curve_lines) + "\n")

    header, rows = _read_csv(run / "pseudo_snapshots.csv")
    col = {name: i for i, name in enumerate(header)}
    by_epoch: dict[int, list[tuple[float, int]]] = {}
    for row in rows:
        if row[col["detected_noisy"]] != "1":
            continue
        by_epoch.setdefault(int(row[col["epoch"]]), []).append(
            (float(row[col["pseudo_loss"]]), int(row[col["pseudo_correct"]])))
    hist_lines = ["epoch,bin_left,bin_right,count_correct,count_incorrect,count_ood"]
    for epoch in sorted(by_epoch):
        values = np.array([v for v, _ in by_epoch[epoch]])
        flags = np.array([c for _, c in by_epoch[epoch]])
        edges = np.histogram_bin_edges(values, bins=HISTOGRAM_BINS)
        for lo, hi, is_last in zip(edges[:-1], edges[1:],
                                   [False] * (len(edges) - 2) + [True]):
            in_bin = (values >= lo) & ((values < hi) | (is_last & (values <= hi)))
            hist_lines.append(",".join([
                str(epoch), _fmt(lo), _fmt(hi),
                str(int((flags[in_bin] == 1).sum())),
                str(int((flags[in_bin] == 0).sum())),
                str(int((flags[in_bin] == -1).sum()))]))
    hist_path = out / "pseudo_loss_hist.csv"
    hist_path.write_text("\n".join(hist_lines) + "\n")

    return {"auc_curves_path": str(curves_path), "histogram_path": str(hist_path)}
