"""Built-in defaults and the JSON config file overlay.

Precedence is built-in < config file < command line. The built-in values
for windowing, tolerance grid, tier probabilities and the synthesis cap are
the published protocol settings.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .errors import FormatError, PreconditionError


@dataclass
class Config:
    window: float = 10.0
    stride: float = 9.0
    nms_iou: float = 0.5
    tau_grid: list[float] = field(default_factory=lambda: [0.0, 0.1, 0.2, 0.3, 0.4, 0.5])
    thresholds: dict[str, float] = field(
        default_factory=lambda: {"content": 0.12, "hist": 0.35, "adaptive": 0.08, "threshold": 0.5}
    )
    hist_bins: int = 16
    min_gap_s: float = 0.0
    synth_cap: float = 3.0
    tier_probs: dict[str, float] = field(default_factory=lambda: {"VeryHigh": 0.7, "High": 0.2, "Medium": 0.1})
    jobs: int = 1
    flow_block: int = 16
    flow_radius: int = 7
    external_timeout_s: float = 60.0

    def validate(self) -> "Config":
        if self.window <= 0:
            raise PreconditionError(f"window must be positive, got {self.window}")
        if not 0 < self.stride <= self.window:
            raise PreconditionError(f"stride must satisfy 0 < stride <= window (stride={self.stride}, window={self.window})")
        if not 0 <= self.nms_iou <= 1:
            raise PreconditionError(f"nms_iou must be in [0, 1], got {self.nms_iou}")
        if not self.tau_grid or min(self.tau_grid) < 0:
            raise PreconditionError(f"tau grid must be non-empty and non-negative: {self.tau_grid}")
        for name, t in self.thresholds.items():
            if not 0 <= t <= 1:
                raise PreconditionError(f"threshold for {name} must be in [0, 1], got {t}")
        if not 2 <= self.hist_bins <= 256:
            raise PreconditionError(f"hist_bins must be in [2, 256], got {self.hist_bins}")
        if self.synth_cap <= 0:
            raise PreconditionError(f"synth_cap must be positive, got {self.synth_cap}")
        if any(p < 0 for p in self.tier_probs.values()) or abs(sum(self.tier_probs.values()) - 1.0) > 1e-6:
            raise PreconditionError(f"tier probabilities must be non-negative and sum to 1: {self.tier_probs}")
        if self.jobs < 1:
            raise PreconditionError(f"jobs must be >= 1, got {self.jobs}")
        if self.flow_block < 4 or self.flow_radius < 1:
            raise PreconditionError("flow block must be >= 4 and radius >= 1")
        return self

    def overlay(self, values: dict) -> "Config":
        """New config with ``values`` applied on top; dict fields merge key-wise."""
        known = {f.name for f in fields(self)}
        unknown = set(values) - known
        if unknown:
            raise FormatError(f"unknown config keys: {sorted(unknown)}")
        data = asdict(self)
        for key, value in values.items():
            if value is None:
                continue
            if isinstance(data[key], dict) and isinstance(value, dict):
                data[key] = {**data[key], **value}
            else:
                data[key] = value
        return Config(**data)


def load_config(path=None) -> Config:
    config = Config()
    if path is not None:
        path = Path(path)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: invalid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise FormatError(f"{path}: config must be a JSON object")
        config = config.overlay(raw)
    return config.validate()
