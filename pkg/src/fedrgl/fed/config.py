"""Run configuration.  Unknown keys are rejected so a config file is a full record of a run."""

from __future__ import annotations

from pathlib import Path
from typing import Literal

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..noise import NoiseSpec
from ..synth import SbmSpec

Component = Literal["global-view", "structural-view", "contrastive", "pseudo", "js", "entropy-weighting"]
COMPONENTS: tuple[str, ...] = Component.__args__


class ConfigError(ValueError):
    pass


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    method: Literal["fedavg", "fedrgl"] = "fedrgl"
    aggregation: Literal["fedavg", "entropy"] = "entropy"
    n_clients: int = Field(default=5, ge=1)
    rounds: int = Field(default=100, ge=1)
    local_epochs: int = Field(default=3, ge=1)
    lr: float = Field(default=1e-2, gt=0.0)
    weight_decay: float = Field(default=5e-4, ge=0.0)
    hidden: int = Field(default=64, ge=1)
    warmup_rounds: int = Field(default=10, ge=0)

    phi1: float = Field(default=1.0, ge=0.0)
    phi2: float = Field(default=1.0, ge=0.0)
    lp_alpha: float = Field(default=0.5, ge=0.0, le=1.0)
    lp_steps: int = Field(default=10, ge=0)
    lp_clamp: bool = True

    gamma: float = Field(default=0.7, ge=0.0, lt=1.0)
    tau: float = Field(default=0.5, gt=0.0)
    p_edge_drop: float = Field(default=0.2, ge=0.0, le=1.0)
    p_feat_mask: float = Field(default=0.2, ge=0.0, le=1.0)
    lambda_cl: float = Field(default=1.0, ge=0.0)
    lambda_p: float = Field(default=1.0, ge=0.0)
    lambda_js: float = Field(default=1.0, ge=0.0)
    epsilon: float = Field(default=1e-9, gt=0.0)

    noise: NoiseSpec = Field(default_factory=NoiseSpec)
    split_ratios: tuple[float, float, float] | None = None
    seed: int = 0
    ablate: list[Component] = Field(default_factory=list)
    workers: int = Field(default=1, ge=1)

    bundle: str | None = None
    sbm: SbmSpec | None = None

    @model_validator(mode="after")
    def _check(self):
        if self.warmup_rounds >= self.rounds:
            raise ValueError(f"warmup_rounds ({self.warmup_rounds}) must be below rounds ({self.rounds})")
        if self.bundle is not None and self.sbm is not None:
            raise ValueError("give either a bundle path or an sbm spec, not both")
        self.ablate = sorted(set(self.ablate), key=COMPONENTS.index)
        return self

    def enabled(self, component: str) -> bool:
        if component not in COMPONENTS:
            raise KeyError(component)
        return component not in self.ablate

    @property
    def uses_entropy_weighting(self) -> bool:
        return self.method == "fedrgl" and self.aggregation == "entropy" and self.enabled("entropy-weighting")

    def phase(self, round_idx: int) -> str:
        if self.method == "fedavg" or round_idx < self.warmup_rounds:
            return "warmup"
        return "main"

    def resolved(self) -> dict:
        return self.model_dump(mode="json")


def parse_config(data: dict) -> RunConfig:
    try:
        return RunConfig.model_validate(data or {})
    except ValidationError as exc:
        problems = []
        for err in exc.errors():
            where = ".".join(str(p) for p in err["loc"]) or "<config>"
            if err["type"] == "extra_forbidden":
                problems.append(f"unknown key '{where}'")
            else:
                problems.append(f"{where}: {err['msg']}")
        raise ConfigError("; ".join(problems)) from None


def load_config(path) -> RunConfig:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: cannot parse ({exc})") from exc
    if data is not None and not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return parse_config(data)


# purposes for keyed random streams
SPLIT, LOUVAIN, NOISE_RATES, NOISE, INIT, VIEW, SBM = range(1, 8)


def stream(seed: int, purpose: int, *keys: int) -> np.random.SeedSequence:
    """Independent random stream per (seed, purpose, keys...)."""
    return np.random.SeedSequence([int(seed), int(purpose), *map(int, keys)])


def stream_int(seed: int, purpose: int, *keys: int) -> int:
    return int(stream(seed, purpose, *keys).generate_state(1)[0])
