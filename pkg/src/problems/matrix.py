"""
matrix.py — Matrix least squares for the operator-norm geometry

    F(W) = 1/2 ||W - M||_F^2,   grad F(W) = W - M,   L = 1, rho = 0, F* = 0

M is a fixed random m x n target drawn from ``target_seed``; the noise is a
uniform direction on the Frobenius sphere scaled by sigma.
"""

import logging

import numpy as np

from src.linalg import ParamValue, as_param
from src.problems.base import ProblemConstants, StochasticOracle, sphere_direction
from src.problems.sampling import sample_rng

logger = logging.getLogger(__name__)

_NOISE_TAG = 0x53


class MatrixQuadratic(StochasticOracle):
    name = "matrix_quadratic"

    def __init__(self, m: int, n: int, target_seed: int = 0, sigma: float = 0.0,
                 seed: int = 0, target=None, w0=None):
        if m < 1 or n < 1:
            raise ValueError(f"matrix shape must be positive, got ({m}, {n})")
        if sigma < 0:
            raise ValueError(f"sigma must be nonnegative, got {sigma}")
        if target is None:
            target = np.random.default_rng(target_seed).standard_normal((m, n))
        self.target = as_param(target, "target")
        if self.target.shape != (m, n):
            raise ValueError(f"target shape {self.target.shape} is not ({m}, {n})")
        self.sigma = float(sigma)
        super().__init__(np.zeros((m, n)) if w0 is None else w0, seed)
        if self.w0.shape != (m, n):
            raise ValueError(f"w0 shape {self.w0.shape} is not ({m}, {n})")

    def loss(self, W: ParamValue) -> float:
        D = W - self.target
        return 0.5 * float(np.sum(D * D))

    def full_grad(self, W: ParamValue) -> ParamValue:
        return W - self.target

    def _sample_grad(self, W: ParamValue, sample_id: int) -> ParamValue:
        if self.sigma == 0.0:
            return self.full_grad(W)
        rng = sample_rng(self.seed, _NOISE_TAG, sample_id)
        return self.full_grad(W) + self.sigma * sphere_direction(rng, W.shape)

    def hvp(self, W: ParamValue, D: ParamValue) -> ParamValue:
        return D.copy()

    def _make_constants(self) -> ProblemConstants:
        return ProblemConstants(L=1.0, rho=0.0, sigma=self.sigma, F_star=0.0,
                                delta_F=self.loss(self.w0))


def make_matrix_quadratic(m: int, n: int, target_seed: int = 0, sigma: float = 0.0,
                          seed: int = 0, target=None, w0=None) -> MatrixQuadratic:
    return MatrixQuadratic(m, n, target_seed=target_seed, sigma=sigma, seed=seed,
                           target=target, w0=w0)
