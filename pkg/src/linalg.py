"""
linalg.py — Dense parameter values (vectors / matrices of float64)

Every optimizer quantity (w, x, m, g, v) is a ParamValue: a numpy float64
array of ndim 1 or 2. Operations here are pure; inputs are never mutated.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence, TypeAlias

import numpy as np
from numpy.typing import NDArray

from src.errors import NonFiniteError, ShapeError, SvdConvergenceError

logger = logging.getLogger(__name__)

ParamValue: TypeAlias = NDArray[np.float64]


class NormKind(str, Enum):
    L1 = "l1"
    L2 = "l2"
    LINF = "linf"
    NUCLEAR = "nuclear"
    SPECTRAL = "spectral"


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD ``M = U diag(S) V^T`` with ``S`` descending."""

    U: ParamValue
    S: ParamValue
    V: ParamValue

    def reconstruct(self) -> ParamValue:
        return (self.U * self.S) @ self.V.T


# ── Construction / validation ─────────────────────────────────────────────

def as_param(x, name: str = "value") -> ParamValue:
    """Coerce ``x`` to a contiguous float64 vector or matrix."""
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if arr.ndim not in (1, 2):
        raise ShapeError(f"{name} must be a vector or a matrix, got ndim={arr.ndim}")
    return arr


def require_finite(name: str, x: ParamValue) -> ParamValue:
    if not np.all(np.isfinite(x)):
        raise NonFiniteError(name)
    return x


def _same_shape(a: ParamValue, b: ParamValue) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")


# ── Inner products and norms ──────────────────────────────────────────────

def dot(a: ParamValue, b: ParamValue) -> float:
    """Euclidean inner product (Frobenius for matrices)."""
    _same_shape(a, b)
    return float(np.sum(a * b))


def norm(a: ParamValue, kind: NormKind | str = NormKind.L2) -> float:
    """
    Norm of a vector or matrix.

    L1 / LInf are entrywise for matrices, L2 is the Frobenius norm, and
    Nuclear / Spectral are the sum / max of singular values.
    """
    kind = NormKind(kind)
    if kind is NormKind.L2:
        # np.linalg.norm squares entries directly; dividing by max|a| keeps 1e+-200 in range
        scale = float(np.max(np.abs(a))) if a.size else 0.0
        if scale == 0.0 or not math.isfinite(scale):
            return scale
        return scale * float(np.linalg.norm(a / scale))
    if kind is NormKind.L1:
        return float(np.sum(np.abs(a)))
    if kind is NormKind.LINF:
        return float(np.max(np.abs(a))) if a.size else 0.0
    if a.ndim != 2:
        raise ShapeError(f"{kind.value} norm requires a matrix, got shape {a.shape}")
    s = svd(a).S
    if kind is NormKind.NUCLEAR:
        return float(np.sum(s))
    return float(s[0]) if s.size else 0.0


def svd(M: ParamValue) -> SvdResult:
    """Thin SVD with r = min(m, n); failures surface as SvdConvergenceError."""
    if M.ndim != 2:
        raise ShapeError(f"svd requires a matrix, got shape {M.shape}")
    require_finite("svd input", M)
    try:
        U, S, Vt = np.linalg.svd(M, full_matrices=False)
    except np.linalg.LinAlgError as e:
        raise SvdConvergenceError(f"SVD did not converge for {M.shape} matrix: {e}") from e
    return SvdResult(U=U, S=S, V=Vt.T)


def combine(coeffs: Sequence[float], values: Sequence[ParamValue]) -> ParamValue:
    """Linear combination ``sum_i coeffs[i] * values[i]``."""
    if len(coeffs) != len(values) or not values:
        raise ShapeError(f"combine needs matching non-empty lists, got "
                         f"{len(coeffs)} coefficients and {len(values)} values")
    out = np.zeros_like(values[0], dtype=np.float64)
    for c, v in zip(coeffs, values):
        _same_shape(out, v)
        if c != 0.0:
            out += c * v
    return out
