"""Per-run result record shared by all iterative estimators."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["EstimateReport"]


@dataclass
class EstimateReport:
    """Outcome of one estimator run.

    ``residual_trace`` holds the relative normal-equation residual
    ||(sigma2^{-1} A^H A + D^{-1}) mu - sigma2^{-1} A^H y||_2 /
    ||sigma2^{-1} A^H y||_2 at initialization and after every iteration,
    so its length is always ``iterations + 1``.  ``variances`` and ``nmse``
    are optional: mean-only estimators report neither posterior variances
    nor (on their own) a reconstruction error.
    """

    mu: np.ndarray
    variances: np.ndarray | None
    residual_trace: list
    iterations: int
    converged: bool
    wall_time: float
    nmse: float | None = None
    seed: int | None = None
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.residual_trace) != self.iterations + 1:
            raise ValueError(
                "residual_trace must have length iterations + 1 "
                f"({len(self.residual_trace)} != {self.iterations} + 1)"
            )
        if self.nmse is not None and self.nmse < 0:
            raise ValueError("nmse must be nonnegative")

    def to_dict(self, include_vectors: bool = True) -> dict:
        """JSON-serializable view of the report."""
        out = {
            "iterations": self.iterations,
            "converged": self.converged,
            "wall_time": self.wall_time,
            "nmse": self.nmse,
            "seed": self.seed,
            "config": dict(self.config),
            "final_residual": float(self.residual_trace[-1]),
            "residual_trace": [float(r) for r in self.residual_trace],
        }
        if include_vectors:
            out["mu_re"] = np.real(self.mu).tolist()
            out["mu_im"] = np.imag(self.mu).tolist()
            if self.variances is not None:
                out["variances"] = np.asarray(self.variances).tolist()
        return out
