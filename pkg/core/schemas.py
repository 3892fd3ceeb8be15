from enum import StrEnum
from pathlib import Path
from typing import Literal

from django.conf import settings
from pydantic import BaseModel, ConfigDict, Field, model_validator


class Label(StrEnum):
    NORMAL = "normal"
    ROSACEA = "rosacea"


class PreprocessSpec(BaseModel):
    """Image geometry and pixel scaling; stored in every image-trained model."""

    model_config = ConfigDict(frozen=True)

    width: int = Field(512, ge=8, description="Target width in pixels")
    height: int = Field(512, ge=8, description="Target height in pixels")
    channels: Literal[3] = Field(3, description="Colour channels (RGB)")
    pixel_scale: Literal["unit", "raw"] = Field("unit", description="unit divides by 255, raw keeps 0..255")
    resize: Literal["bilinear"] = Field("bilinear", description="Resampling kernel")

    @property
    def dimension(self) -> int:
        return self.width * self.height * self.channels


class TruncationPolicy(BaseModel):
    """Eigenvalue lambda is retained iff lambda > max(rel_tol * lambda_max, abs_tol)."""

    model_config = ConfigDict(frozen=True)

    rel_tol: float = Field(1e-10, ge=0.0, lt=1.0, description="Threshold relative to the largest eigenvalue")
    abs_tol: float = Field(1e-20, ge=0.0, description="Absolute eigenvalue floor")

    def threshold(self, lambda_max: float) -> float:
        return max(self.rel_tol * lambda_max, self.abs_tol)


class SyntheticSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    d: int = Field(..., ge=2, description="Vector dimension")
    n: int = Field(..., ge=1, description="Normal sample count")
    m: int = Field(..., ge=1, description="Rosacea sample count")
    separation: float = Field(..., ge=0.0, description="Distance between the two class means")
    sigma: float = Field(1.0, gt=0.0, description="Per-class isotropic noise standard deviation")
    seed: int = Field(0, ge=0, description="Generator seed")


class ManifestEntry(BaseModel):
    model_config = ConfigDict(frozen=True)

    path: Path
    label: Label


class DatasetManifest(BaseModel):
    entries: list[ManifestEntry]
    split_seed: int | None = None
    split_ratio: float | None = None

    @model_validator(mode="after")
    def check_unique_paths(self):
        seen = set()
        for entry in self.entries:
            if entry.path in seen:
                raise ValueError(f"duplicate manifest path: {entry.path}")
            seen.add(entry.path)
        return self

    def paths_for(self, label: Label) -> list[Path]:
        return [entry.path for entry in self.entries if entry.label == label]

    def count(self, label: Label) -> int:
        return sum(1 for entry in self.entries if entry.label == label)


class RunConfig(BaseModel):
    """Per-invocation knobs; defaults come from settings, flags override them."""

    rank_tol: float = Field(1e-10, ge=0.0, lt=1.0)
    abs_tol: float = Field(1e-20, ge=0.0)
    center_at_predict: bool = False
    knn_k: int = Field(1, ge=1)
    pca_components: int | None = Field(None, ge=1)
    pca_variance: float = Field(0.95, gt=0.0, le=1.0)
    split_ratio: float = Field(5 / 6, gt=0.0, lt=1.0)
    split_seed: int = 0
    output_format: Literal["text", "json", "csv"] = "text"

    @classmethod
    def from_settings(cls, **overrides):
        values = {
            "rank_tol": settings.WCS_RANK_TOL,
            "abs_tol": settings.WCS_ABS_TOL,
            "center_at_predict": settings.WCS_CENTER_AT_PREDICT,
            "knn_k": settings.WCS_KNN_K,
            "pca_variance": settings.WCS_PCA_VARIANCE,
            "split_ratio": settings.WCS_SPLIT_RATIO,
            "split_seed": settings.WCS_SPLIT_SEED,
            "output_format": settings.WCS_REPORT_FORMAT,
        }
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)

    @property
    def truncation(self) -> TruncationPolicy:
        return TruncationPolicy(rel_tol=self.rank_tol, abs_tol=self.abs_tol)


class MetricsRow(BaseModel):
    """One row of a JSON/CSV report; undefined ratios are None."""

    method: str
    accuracy: float | None
    recall: float | None
    precision: float | None
    f1: float | None
    tp: int
    tn: int
    fp: int
    fn: int
