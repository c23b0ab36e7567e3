"""Run configuration models.

A run config is the single input to every pipeline stage: device file,
dataset source (file or synthetic spec), generator / scoring / training
knobs, output directory and the global seed.  The same models back the HTTP
request bodies, the config file on disk, and the CLI.
"""
from __future__ import annotations

import hashlib
import json
from typing import Literal, Optional, Union

from pydantic import BaseModel, Field, model_validator

from .scoring import VARIANTS


class SyntheticSpec(BaseModel):
    d: int = Field(ge=10)
    n_features: int = Field(ge=2)
    imbalance_ratio: float = 6.0
    noise_level: float = 0.2
    train_fraction: float = 0.75


class DatasetConfig(BaseModel):
    task: Literal["classification", "regression"]
    path: Optional[str] = None
    synthetic: Optional[SyntheticSpec] = None
    # raw featurizer output: remap {0,1} labels/bits, normalize regression targets
    preprocess: bool = False

    @model_validator(mode="after")
    def _one_source(self) -> "DatasetConfig":
        if (self.path is None) == (self.synthetic is None):
            raise ValueError("dataset needs exactly one of 'path' or 'synthetic'")
        return self


class GeneratorSpec(BaseModel):
    n_candidates: int = Field(default=250, ge=1)
    gate_budget: int = Field(default=160, ge=1)
    embed_fraction: float = 0.8
    trainable_fraction: float = 0.15
    entangle_fraction: float = 0.05

    @model_validator(mode="after")
    def _fractions(self) -> "GeneratorSpec":
        total = self.embed_fraction + self.trainable_fraction + self.entangle_fraction
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"gate mixture fractions sum to {total}, expected 1")
        return self


class ScoringSpec(BaseModel):
    variants: list[str] = ["eq1"]
    subset_size: int = Field(default=32, ge=2)
    n_param_draws: int = Field(default=4, ge=1)
    alpha: float = 0.25
    n_replicas: int = Field(default=32, ge=1)
    sigma: Union[float, Literal["median"]] = "median"

    @model_validator(mode="after")
    def _known_variants(self) -> "ScoringSpec":
        for v in self.variants:
            if v not in VARIANTS:
                raise ValueError(f"unknown scoring variant {v!r}; choose from {VARIANTS}")
        if not self.variants:
            raise ValueError("at least one scoring variant required")
        return self


class TrainingSpec(BaseModel):
    epochs: int = Field(default=200, ge=1)
    batch_size: int = Field(default=256, ge=1)
    learning_rate: float = Field(default=0.01, gt=0)
    measurement_qubits: list[int] = [0]


class RunConfig(BaseModel):
    seed: int = 0
    out_dir: str
    device: str
    dataset: DatasetConfig
    generator: GeneratorSpec = GeneratorSpec()
    scoring: ScoringSpec = ScoringSpec()
    training: TrainingSpec = TrainingSpec()

    def science_digest(self) -> str:
        """Digest over everything that affects numbers, excluding out_dir.

        Stamped into every output table so artifacts can be traced back to
        the configuration that produced them; reruns into a different
        directory keep the same digest.
        """
        payload = self.model_dump(mode="json")
        payload.pop("out_dir", None)
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]


def load_run_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return RunConfig.model_validate_json(fh.read())
