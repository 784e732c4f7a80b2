"""
quadratic.py — Noisy diagonal quadratic, the canonical L-smooth testbed

    F(w) = 1/2 w^T diag(a) w,   grad F(w) = a * w,   L = max(a),  rho = 0,  F* = 0

Noise models (both satisfy ||grad f - grad F|| = sigma exactly):
    additive        grad f = grad F + sigma * u(xi),  u uniform on the unit sphere
    coordinatewise  grad f = grad F + (sigma / sqrt(d)) * s(xi),  s_i independent signs

The noise does not depend on w, so the VR difference
grad f(x; xi) - grad f(y; xi) is noise-free on this problem.
"""

import logging
import math
from enum import Enum

import numpy as np

from src.linalg import ParamValue, as_param
from src.problems.base import ProblemConstants, StochasticOracle, sphere_direction
from src.problems.sampling import sample_rng

logger = logging.getLogger(__name__)

_NOISE_TAG = 0x51


class NoiseModel(str, Enum):
    ADDITIVE = "additive"
    COORDINATEWISE = "coordinatewise"


class NoisyQuadratic(StochasticOracle):
    name = "noisy_quadratic"

    def __init__(self, eigenvalues, noise_model: NoiseModel | str = NoiseModel.ADDITIVE,
                 sigma: float = 0.0, seed: int = 0, w0=None):
        a = as_param(eigenvalues, "eigenvalues")
        if a.ndim != 1 or a.size == 0:
            raise ValueError("eigenvalues must be a non-empty list")
        if np.any(a <= 0):
            raise ValueError(f"eigenvalues must be positive, got {a.tolist()}")
        if sigma < 0:
            raise ValueError(f"sigma must be nonnegative, got {sigma}")
        self.eigenvalues = a
        self.noise_model = NoiseModel(noise_model)
        self.sigma = float(sigma)
        super().__init__(np.ones_like(a) if w0 is None else w0, seed)
        if self.w0.shape != a.shape:
            raise ValueError(f"w0 shape {self.w0.shape} does not match dim {a.size}")

    def loss(self, w: ParamValue) -> float:
        return 0.5 * float(np.sum(self.eigenvalues * w * w))

    def full_grad(self, w: ParamValue) -> ParamValue:
        return self.eigenvalues * w

    def _noise_vector(self, sample_id: int) -> ParamValue:
        rng = sample_rng(self.seed, _NOISE_TAG, sample_id)
        if self.noise_model is NoiseModel.ADDITIVE:
            return self.sigma * sphere_direction(rng, self.w0.shape)
        d = self.w0.size
        signs = rng.integers(0, 2, size=self.w0.shape) * 2.0 - 1.0
        return (self.sigma / math.sqrt(d)) * signs

    def _sample_grad(self, w: ParamValue, sample_id: int) -> ParamValue:
        if self.sigma == 0.0:
            return self.full_grad(w)
        return self.full_grad(w) + self._noise_vector(sample_id)

    def hvp(self, w: ParamValue, d: ParamValue) -> ParamValue:
        return self.eigenvalues * d

    def _make_constants(self) -> ProblemConstants:
        return ProblemConstants(
            L=float(np.max(self.eigenvalues)),
            rho=0.0,
            sigma=self.sigma,
            F_star=0.0,
            delta_F=self.loss(self.w0),
        )


def make_noisy_quadratic(dim: int | None = None, eigenvalues=None,
                         noise_model: NoiseModel | str = NoiseModel.ADDITIVE,
                         sigma: float = 0.0, seed: int = 0, w0=None) -> NoisyQuadratic:
    """F(w) = 1/2 w^T diag(eigenvalues) w; dim, when given, must match len(eigenvalues)."""
    if eigenvalues is None:
        raise ValueError("eigenvalues are required")
    if dim is not None and len(eigenvalues) != dim:
        raise ValueError(f"expected {dim} eigenvalues, got {len(eigenvalues)}")
    return NoisyQuadratic(eigenvalues, noise_model=noise_model, sigma=sigma, seed=seed, w0=w0)
