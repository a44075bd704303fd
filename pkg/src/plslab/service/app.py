"""FastAPI service wrapping the lab: dataset generation, training runs,
the ablation grid and plot-data reports.

Endpoints execute synchronously and write their artifacts under the
directories named in the request; responses echo the paths plus the key
numbers. Designed for a local, single-user lab process."""
from __future__ import annotations

import dataclasses
import json
from pathlib import Path

from fastapi import FastAPI, HTTPException

from .. import __version__, ablation, artifacts, datagen, training
from . import schemas

app = FastAPI(title="plslab", version=__version__)


def _train_config(settings: schemas.TrainSettings) -> training.TrainConfig:
    if settings.seed is None:
        raise HTTPException(status_code=400, detail="config.seed is required")
    return training.TrainConfig(**settings.model_dump())


def _load_data_dir(data_dir: str) -> tuple[datagen.Dataset, datagen.Dataset]:
    base = Path(data_dir)
    train_path, test_path = base / "train.txt", base / "test.txt"
    for p in (train_path, test_path):
        if not p.exists():
            raise HTTPException(status_code=404, detail=f"missing dataset file {p}")
    return datagen.load_dataset(train_path), datagen.load_dataset(test_path)


@app.get("/health", response_model=schemas.HealthResponse)
def health() -> schemas.HealthResponse:
    return schemas.HealthResponse(status="ok", version=__version__)


@app.post("/generate", response_model=schemas.GenerateResponse)
def generate(req: schemas.GenerateRequest) -> schemas.GenerateResponse:
    try:
        train, test = datagen.make_blobs(req.classes, req.dim, req.n_per_class,
                                         req.separation, req.seed, req.class_std,
                                         req.n_test_per_class)
        train = datagen.inject_id_noise(train, req.r_in, req.id_mode, req.seed + 1)
        train = datagen.inject_ood_noise(train, req.r_out, req.ood_preset, req.seed + 2)
    except datagen.ConfigError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc

    out = Path(req.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    train_path, test_path = out / "train.txt", out / "test.txt"
    sidecar_path = out / "dataset.json"
    datagen.save_dataset(train, train_path)
    datagen.save_dataset(test, test_path)
    n_id = int((train.provenance == datagen.Provenance.ID_NOISE).sum())
    n_ood = int((train.provenance == datagen.Provenance.OOD_NOISE).sum())
    sidecar = req.model_dump()
    sidecar.update(n_train=len(train), n_test=len(test), n_id_noisy=n_id,
                   n_ood_noisy=n_ood,
                   ood_offset_sigmas=datagen.OOD_PRESETS[req.ood_preset].offset_sigmas)
    sidecar_path.write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return schemas.GenerateResponse(train_path=str(train_path), test_path=str(test_path),
                                    sidecar_path=str(sidecar_path), n_train=len(train),
                                    n_test=len(test), n_id_noisy=n_id, n_ood_noisy=n_ood)


@app.post("/train", response_model=schemas.TrainResponse)
def train(req: schemas.TrainRequest) -> schemas.TrainResponse:
    config = _train_config(req.config)
    train_ds, test_ds = _load_data_dir(req.data_dir)
    try:
        report = training.run_training(train_ds, test_ds, config)
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    paths = artifacts.write_run_artifacts(req.out_dir, report, train_ds)
    summary = schemas.RunSummary(seed=config.seed, best_test_acc=report.best_test_acc,
                                 final_test_acc=report.final_test_acc,
                                 best_epoch=report.best_epoch,
                                 n_epochs=len(report.epochs),
                                 wall_clock_s=report.wall_clock_s)
    return schemas.TrainResponse(summary=summary, **paths)


@app.post("/ablate", response_model=schemas.AblateResponse)
def ablate(req: schemas.AblateRequest) -> schemas.AblateResponse:
    settings = req.config.model_copy(update={"seed": req.seeds[0]})
    base = _train_config(settings)
    train_ds, test_ds = _load_data_dir(req.data_dir)
    try:
        rows = ablation.run_ablation(train_ds, test_ds, base, req.seeds)
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc

    out = Path(req.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    resp_rows = []
    for row in rows:
        for seed, report in zip(row.seeds, row.reports):
            artifacts.write_run_artifacts(out / row.name / f"seed{seed}", report,
                                          train_ds)
        resp_rows.append(schemas.AblateRow(name=row.name, seeds=row.seeds,
                                           best_accs=row.best_accs, mean=row.mean,
                                           std=row.std))
    grid = {
        "config": dataclasses.asdict(base),
        "seeds": req.seeds,
        "rows": [r.model_dump() for r in resp_rows],
    }
    grid_path = out / "grid_summary.json"
    grid_path.write_text(json.dumps(grid, indent=2, sort_keys=True) + "\n")
    return schemas.AblateResponse(rows=resp_rows, grid_path=str(grid_path))


@app.post("/report", response_model=schemas.ReportResponse)
def report(req: schemas.ReportRequest) -> schemas.ReportResponse:
    run_dir = Path(req.run_dir)
    if not (run_dir / "epochs.csv").exists():
        raise HTTPException(status_code=404, detail=f"no run artifacts in {run_dir}")
    out_dir = req.out_dir or str(run_dir / "report")
    paths = artifacts.build_report_files(run_dir, out_dir)
    return schemas.ReportResponse(**paths)
