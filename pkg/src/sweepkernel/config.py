"""Tolerances, grid resolutions and run flags."""
from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, fields


@dataclass(frozen=True)
class Tolerances:
    unit: float = 1e-9
    sharp: float = 1e-6
    g: float = 1e-9
    f: float = 1e-9
    sing: float = 1e-8
    loop: float = 1e-6
    pmc: float = 1e-5

    def __post_init__(self):
        for f in fields(self):
            if not getattr(self, f.name) > 0:
                raise ValueError(f"tolerance {f.name} must be positive")

    def g_rel(self, speed):
        """Dot-product tolerance scaled by the local speed."""
        return self.g * (1.0 + speed)


@dataclass(frozen=True)
class Grids:
    nu: int = 32
    nv: int = 32
    nt: int = 32
    ns: int = 128
    nt_edge: int = 128
    n_vertex: int = 256

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 8:
                raise ValueError(f"grid {f.name} must be >= 8")


@dataclass(frozen=True)
class Config:
    tol: Tolerances = field(default_factory=Tolerances)
    grids: Grids = field(default_factory=Grids)
    dump_funnels: str | None = None
    verify_simple: bool = False
    oracle_checks: bool = False

    @classmethod
    def from_dict(cls, d: dict) -> "Config":
        return cls(
            tol=Tolerances(**d.get("tol", {})),
            grids=Grids(**d.get("grids", {})),
            dump_funnels=d.get("dump_funnels"),
            verify_simple=bool(d.get("verify_simple", False)),
            oracle_checks=bool(d.get("oracle_checks", False)),
        )

    def to_dict(self) -> dict:
        return asdict(self)


def worker_count() -> int:
    """Worker cap from SWEEPKERNEL_THREADS, defaulting to the CPU count."""
    raw = os.environ.get("SWEEPKERNEL_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1
