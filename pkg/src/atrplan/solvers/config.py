from __future__ import annotations

from dataclasses import dataclass

BACKENDS = ("embedded", "external")


@dataclass
class SolverConfig:
    feas_tol: float = 1e-7
    int_tol: float = 1e-6
    gap: float = 1e-6
    node_limit: int = 200000
    time_limit: float = 300.0
    backend: str = "embedded"
    command: str | None = None  # external template with {lp} and {sol}

    def __post_init__(self):
        for name in ("feas_tol", "int_tol", "gap", "time_limit"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.node_limit < 1:
            raise ValueError("node_limit must be at least 1")
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown backend {self.backend!r}")
