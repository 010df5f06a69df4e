"""Tolerance settings shared by the library and the job runner.

``None`` means "derive from the geometry": each module documents the
relative default it applies.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields

from .errors import ConfigError
from .locator import LocatorConfig


@dataclass(frozen=True)
class ToleranceConfig:
    boundary_band: float | None = None   # 1e-9 * diameter of the curve
    image_band: float | None = None      # 1e-6 * diameter of f(S)
    trace_tol: float | None = None       # 1e-9 * diameter of Gamma
    newton_tol: float = 1e-10
    min_cell: float | None = None        # 1e-8 * search box diagonal
    item1_tol: float = 1e-8
    critical_band: float | None = None   # 1e-6 * diameter of S
    model_band: float = 1e-6
    refine_rounds: int = 20
    max_depth: int = 48
    newton_max_iter: int = 50
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "seed":
                if not isinstance(v, int):
                    raise ConfigError("seed must be an integer")
                continue
            if v is not None and not v > 0:
                raise ConfigError(f"{f.name} must be positive, got {v!r}")

    @property
    def locator(self) -> LocatorConfig:
        return LocatorConfig(min_cell=self.min_cell, max_depth=self.max_depth,
                             newton_tol=self.newton_tol,
                             newton_max_iter=self.newton_max_iter, seed=self.seed)

    def with_overrides(self, **kw) -> "ToleranceConfig":
        data = asdict(self)
        unknown = set(kw) - set(data)
        if unknown:
            raise ConfigError(f"unknown tolerance fields: {sorted(unknown)}")
        data.update(kw)
        return ToleranceConfig(**data)

    def to_dict(self):
        return asdict(self)


DEFAULT_TOLERANCES = ToleranceConfig()
