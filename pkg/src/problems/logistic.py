"""
logistic.py — Finite-sum logistic regression on a fixed synthetic dataset

    f(w; xi) = (1/b) sum_{i in B(xi)} log(1 + exp(-y_i x_i^T w))
    F(w)     = (1/n) sum_i   log(1 + exp(-y_i x_i^T w))

B(xi) is a size-b subset drawn without replacement from the sample id, so
grad f depends on w through the minibatch curvature and the VR correction
is not noise-free here.

Constants:
    L     = max ||x_i||^2 / 4                      (also the averaged-smoothness constant)
    rho   = max|l'''| max ||x_i||^3,  max|l'''| = 1 / (6 sqrt 3)
    F*    = 0 (the loss is nonnegative)
    sigma = "bound":     sqrt((n - b) / (b (n - 1))) max ||x_i||   (uniform in w)
            "estimated": Monte-Carlo sqrt(E||grad f - grad F||^2) at w0
"""

import logging
import math
from enum import Enum

import numpy as np

from src.linalg import ParamValue
from src.problems.base import ProblemConstants, StochasticOracle
from src.problems.sampling import SampleStream, sample_rng

logger = logging.getLogger(__name__)

LOGISTIC_THIRD_DERIV_MAX = 1.0 / (6.0 * math.sqrt(3.0))
_BATCH_TAG = 0x54
_SIGMA_PROBES = 2000


class SigmaMode(str, Enum):
    ESTIMATED = "estimated"
    BOUND = "bound"


def _neg_sigmoid(z: np.ndarray) -> np.ndarray:
    """1 / (1 + exp(z)) without overflow."""
    return 0.5 * (1.0 - np.tanh(0.5 * z))


class LogisticFiniteSum(StochasticOracle):
    name = "logistic_finite_sum"

    def __init__(self, num_samples: int, dim: int, batch: int, seed: int = 0,
                 sigma_mode: SigmaMode | str = SigmaMode.ESTIMATED, w0=None):
        if num_samples < 1 or dim < 1:
            raise ValueError(f"num_samples and dim must be positive, got {num_samples}, {dim}")
        if not 1 <= batch <= num_samples:
            raise ValueError(f"batch must lie in [1, num_samples={num_samples}], got {batch}")
        self.num_samples = num_samples
        self.batch = batch
        self.sigma_mode = SigmaMode(sigma_mode)

        rng = np.random.default_rng(seed)
        self.X = rng.standard_normal((num_samples, dim)) / math.sqrt(dim)
        w_true = rng.standard_normal(dim)
        margin = self.X @ w_true + 0.5 * rng.standard_normal(num_samples)
        self.y = np.where(margin >= 0.0, 1.0, -1.0)
        self._all = np.arange(num_samples)
        self._max_row_norm = float(np.max(np.linalg.norm(self.X, axis=1)))

        super().__init__(np.zeros(dim) if w0 is None else w0, seed)
        if self.w0.shape != (dim,):
            raise ValueError(f"w0 shape {self.w0.shape} does not match dim {dim}")

    # ── Finite-sum pieces ─────────────────────────────────────────────────

    def batch_indices(self, sample_id: int) -> np.ndarray:
        if self.batch == self.num_samples:
            return self._all
        rng = sample_rng(self.seed, _BATCH_TAG, sample_id)
        return np.sort(rng.choice(self.num_samples, size=self.batch, replace=False))

    def _loss_on(self, w: ParamValue, idx: np.ndarray) -> float:
        z = self.y[idx] * (self.X[idx] @ w)
        return float(np.mean(np.logaddexp(0.0, -z)))

    def _grad_on(self, w: ParamValue, idx: np.ndarray) -> ParamValue:
        Xb, yb = self.X[idx], self.y[idx]
        coef = -yb * _neg_sigmoid(yb * (Xb @ w))
        return (Xb.T @ coef) / idx.size

    def loss(self, w: ParamValue) -> float:
        return self._loss_on(w, self._all)

    def full_grad(self, w: ParamValue) -> ParamValue:
        return self._grad_on(w, self._all)

    def _sample_grad(self, w: ParamValue, sample_id: int) -> ParamValue:
        return self._grad_on(w, self.batch_indices(sample_id))

    def hvp(self, w: ParamValue, d: ParamValue) -> ParamValue:
        s = _neg_sigmoid(self.y * (self.X @ w))
        curvature = s * (1.0 - s)
        return self.X.T @ (curvature * (self.X @ d)) / self.num_samples

    # ── Constants ─────────────────────────────────────────────────────────

    def sigma_bound(self) -> float:
        n, b = self.num_samples, self.batch
        if n == 1 or b == n:
            return 0.0
        return math.sqrt((n - b) / (b * (n - 1))) * self._max_row_norm

    def sigma_estimate(self, w: ParamValue | None = None, probes: int = _SIGMA_PROBES) -> float:
        if self.batch == self.num_samples:
            return 0.0
        w = self.w0 if w is None else w
        full = self.full_grad(w)
        ids = SampleStream(self.seed ^ 0x5EED).take(probes)
        sq = [float(np.sum((self._sample_grad(w, int(i)) - full) ** 2)) for i in ids]
        return math.sqrt(float(np.mean(sq)))

    def _make_constants(self) -> ProblemConstants:
        if self.sigma_mode is SigmaMode.BOUND:
            sigma, estimated = self.sigma_bound(), False
        else:
            sigma, estimated = self.sigma_estimate(), self.batch < self.num_samples
            if estimated:
                logger.info(f"logistic sigma estimated at w0 from {_SIGMA_PROBES} probes: {sigma:.6g}")
        return ProblemConstants(
            L=0.25 * self._max_row_norm ** 2,
            rho=LOGISTIC_THIRD_DERIV_MAX * self._max_row_norm ** 3,
            sigma=sigma,
            F_star=0.0,
            delta_F=self.loss(self.w0),
            sigma_estimated=estimated,
        )


def make_logistic_finite_sum(num_samples: int, dim: int, batch: int, seed: int = 0,
                             sigma_mode: SigmaMode | str = SigmaMode.ESTIMATED,
                             w0=None) -> LogisticFiniteSum:
    return LogisticFiniteSum(num_samples, dim, batch, seed=seed, sigma_mode=sigma_mode, w0=w0)
