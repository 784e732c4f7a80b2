"""
nonconvex.py — Separable nonconvex smooth test function with known L and rho

    F(w) = sum_i phi(w_i) + (c/2) ||w||^2,     phi(x) = x^2 / (1 + x^2)

    phi'(x)   = 2x / (1 + x^2)^2
    phi''(x)  = (2 - 6x^2) / (1 + x^2)^3          max |phi''| = 2 at x = 0
    phi'''(x) = 24 x (x^2 - 1) / (1 + x^2)^4

The Hessian is diagonal, so its operator-norm Lipschitz constant is
max |phi'''|. Setting phi'''' = 0 gives 5x^4 - 10x^2 + 1 = 0; the larger
|phi'''| is at x^2 = 1 - sqrt(0.8), where |phi'''| ~= 4.6686. Hence
L = c + 2 and rho = 4.67. F >= 0 with F(0) = 0, so F* = 0.
"""

import logging

import numpy as np

from src.linalg import ParamValue
from src.problems.base import ProblemConstants, StochasticOracle, sphere_direction
from src.problems.sampling import sample_rng

logger = logging.getLogger(__name__)

PHI_THIRD_DERIV_MAX = 4.67
_NOISE_TAG = 0x52


class NonconvexSmooth(StochasticOracle):
    name = "nonconvex_smooth"

    def __init__(self, dim: int, coupling: float = 0.0, sigma: float = 0.0,
                 seed: int = 0, w0=None):
        if dim < 1:
            raise ValueError(f"dim must be >= 1, got {dim}")
        if coupling < 0:
            raise ValueError(f"coupling must be nonnegative, got {coupling}")
        if sigma < 0:
            raise ValueError(f"sigma must be nonnegative, got {sigma}")
        self.coupling = float(coupling)
        self.sigma = float(sigma)
        super().__init__(np.ones(dim) if w0 is None else w0, seed)
        if self.w0.shape != (dim,):
            raise ValueError(f"w0 shape {self.w0.shape} does not match dim {dim}")

    def loss(self, w: ParamValue) -> float:
        w2 = w * w
        return float(np.sum(w2 / (1.0 + w2))) + 0.5 * self.coupling * float(np.sum(w2))

    def full_grad(self, w: ParamValue) -> ParamValue:
        return 2.0 * w / (1.0 + w * w) ** 2 + self.coupling * w

    def _sample_grad(self, w: ParamValue, sample_id: int) -> ParamValue:
        if self.sigma == 0.0:
            return self.full_grad(w)
        rng = sample_rng(self.seed, _NOISE_TAG, sample_id)
        return self.full_grad(w) + self.sigma * sphere_direction(rng, w.shape)

    def hvp(self, w: ParamValue, d: ParamValue) -> ParamValue:
        w2 = w * w
        return ((2.0 - 6.0 * w2) / (1.0 + w2) ** 3 + self.coupling) * d

    def _make_constants(self) -> ProblemConstants:
        return ProblemConstants(
            L=self.coupling + 2.0,
            rho=PHI_THIRD_DERIV_MAX,
            sigma=self.sigma,
            F_star=0.0,
            delta_F=self.loss(self.w0),
        )


def make_nonconvex_smooth(dim: int, coupling: float = 0.0, sigma: float = 0.0,
                          seed: int = 0, w0=None) -> NonconvexSmooth:
    return NonconvexSmooth(dim, coupling=coupling, sigma=sigma, seed=seed, w0=w0)
