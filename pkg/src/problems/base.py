"""
base.py — Stochastic oracle interface shared by every synthetic problem

An oracle exposes
    loss(w)               F(w)
    full_grad(w)          grad F(w)               (not counted)
    sample_grad(w, xi)    grad f(w; xi)           (counted in grad_evals)
    noise(w, xi)          grad f(w; xi) - grad F(w)   (verification only, not counted)
    hvp(w, d)             Hessian-vector product when closed form, else None
and the constants (L, rho, sigma, F*, Delta_F) of its assumptions.
"""

import logging
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from src.linalg import ParamValue, as_param

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ProblemConstants:
    L: float
    rho: float
    sigma: float
    F_star: float
    delta_F: float
    sigma_estimated: bool = False
    """True when sigma is a Monte-Carlo estimate rather than a uniform bound."""

    def __post_init__(self):
        for name in ("L", "rho", "sigma", "delta_F"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative, got {getattr(self, name)}")


class StochasticOracle(ABC):
    name: str = "oracle"

    def __init__(self, w0: ParamValue, seed: int):
        self.seed = int(seed)
        self.w0 = as_param(w0, "w0")
        self._evals = 0
        self._lock = threading.Lock()
        self._constants: ProblemConstants | None = None

    # ── Problem-specific pieces ───────────────────────────────────────────

    @abstractmethod
    def loss(self, w: ParamValue) -> float: ...

    @abstractmethod
    def full_grad(self, w: ParamValue) -> ParamValue: ...

    @abstractmethod
    def _sample_grad(self, w: ParamValue, sample_id: int) -> ParamValue: ...

    @abstractmethod
    def _make_constants(self) -> ProblemConstants: ...

    def hvp(self, w: ParamValue, d: ParamValue) -> ParamValue | None:
        return None

    # ── Shared machinery ──────────────────────────────────────────────────

    @property
    def constants(self) -> ProblemConstants:
        if self._constants is None:
            self._constants = self._make_constants()
        return self._constants

    @property
    def has_hessian(self) -> bool:
        return self.hvp(self.w0, np.zeros_like(self.w0)) is not None

    @property
    def grad_evals(self) -> int:
        return self._evals

    def sample_grad(self, w: ParamValue, sample_id: int) -> ParamValue:
        with self._lock:
            self._evals += 1
        return self._sample_grad(w, sample_id)

    def noise(self, w: ParamValue, sample_id: int) -> ParamValue:
        return self._sample_grad(w, sample_id) - self.full_grad(w)


def sphere_direction(rng: np.random.Generator, shape: tuple[int, ...]) -> ParamValue:
    """Uniform unit vector (Frobenius norm 1) of the given shape."""
    z = rng.standard_normal(shape)
    nz = float(np.linalg.norm(z))
    while nz == 0.0:
        z = rng.standard_normal(shape)
        nz = float(np.linalg.norm(z))
    return z / nz
