"""Pydantic request/response models for the lab service."""
from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class TrainSettings(BaseModel):
    """Mirror of the training configuration; unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid")

    epochs: int = Field(60, ge=1)
    warmup_epochs: int = Field(10, ge=0)
    batch_size: int = Field(128, ge=1)
    lr0: float = Field(0.05, gt=0)
    weight_decay: float = Field(5e-5, ge=0)
    momentum: float = Field(0.9, ge=0, lt=1)
    gmm_threshold: float = Field(0.95, gt=0, le=1)
    pseudo_exponent: float = Field(2.0, gt=0)
    contrastive_temperature: float = Field(0.2, gt=0)
    enable_correction: bool = True
    enable_contrastive: bool = True
    enable_w: bool = True
    w_in_contrastive: bool = True
    w_selection: Literal["gmm", "threshold"] = "gmm"
    w_threshold: float = Field(0.95, gt=0, le=1)
    class_reg_weight: float = Field(0.0, ge=0)
    hidden_dim: int = Field(64, ge=1)
    proj_dim: int = Field(16, ge=1)
    seed: Optional[int] = None

    @model_validator(mode="after")
    def _check_warmup(self):
        if self.warmup_epochs > self.epochs:
            raise ValueError("warmup_epochs cannot exceed epochs")
        return self


class GenerateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    classes: int = Field(3, ge=2)
    dim: int = Field(2, ge=2)
    n_per_class: int = Field(1000, ge=2)
    n_test_per_class: Optional[int] = Field(None, ge=1)
    separation: float = Field(4.0, gt=0)
    class_std: float = Field(1.0, gt=0)
    r_in: float = Field(0.0, ge=0, le=1)
    r_out: float = Field(0.0, ge=0, le=1)
    id_mode: Literal["SYMMETRIC", "ASYMMETRIC"] = "SYMMETRIC"
    ood_preset: Literal["far", "web"] = "far"
    seed: int
    out_dir: str

    @model_validator(mode="after")
    def _check_rates(self):
        if self.r_in + self.r_out > 1.0:
            raise ValueError("r_in + r_out must not exceed 1")
        return self


class GenerateResponse(BaseModel):
    train_path: str
    test_path: str
    sidecar_path: str
    n_train: int
    n_test: int
    n_id_noisy: int
    n_ood_noisy: int


class TrainRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    data_dir: str
    out_dir: str
    config: TrainSettings = TrainSettings()


class RunSummary(BaseModel):
    seed: int
    best_test_acc: float
    final_test_acc: float
    best_epoch: int
    n_epochs: int
    wall_clock_s: float


class TrainResponse(BaseModel):
    summary: RunSummary
    csv_path: str
    summary_path: str
    checkpoint_path: str
    snapshots_path: str


class AblateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    data_dir: str
    out_dir: str
    seeds: list[int] = Field(min_length=1)
    config: TrainSettings = TrainSettings()


class AblateRow(BaseModel):
    name: str
    seeds: list[int]
    best_accs: list[float]
    mean: float
    std: float


class AblateResponse(BaseModel):
    rows: list[AblateRow]
    grid_path: str


class ReportRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    run_dir: str
    out_dir: Optional[str] = None


class ReportResponse(BaseModel):
    auc_curves_path: str
    histogram_path: str


class HealthResponse(BaseModel):
    status: str
    version: str
