"""
lmo.py — Linear minimization oracles, support functions and the RSF

Geometries (all centrally symmetric norm balls of radius r around 0):

    Euclidean      C = {v : ||v||_2 <= r}        LMO(g) = -r g / ||g||_2
    LInf           C = {v : ||v||_inf <= r}      LMO(g) = -r sign(g)
    OperatorNorm   C = {V : sigma_1(V) <= r}     LMO(G) = -r U V^T

The support function of such a ball is r times the dual norm:
    h_C(z) = r ||z||_2  |  r ||z||_1  |  r ||z||_nuclear

Regularized support function (stationarity measure):
    Psi_{C,lam}(w) = sup_{v in C} <-grad F(w), v - lam w>
                   = h_C(-grad F(w)) + lam <grad F(w), w>
For lam > 0 this is lam times the Frank-Wolfe gap over P = C / lam.

Only the three balls above are implemented; other compact convex sets
would need their own lmo/support_value pair.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from src.config import cfg
from src.errors import ShapeError
from src.linalg import NormKind, ParamValue, dot, norm, require_finite, svd

logger = logging.getLogger(__name__)

# Quintic Newton-Schulz coefficients (Muon convention).
NS_COEFFS = (3.4445, -4.7750, 2.0315)


class Geometry(str, Enum):
    EUCLIDEAN = "euclidean"
    LINF = "linf"
    OPERATOR_NORM = "operator_norm"


class OpMethod(str, Enum):
    EXACT_SVD = "exact_svd"
    NEWTON_SCHULZ = "newton_schulz"


_GEOMETRY_NORM = {
    Geometry.EUCLIDEAN: NormKind.L2,
    Geometry.LINF: NormKind.LINF,
    Geometry.OPERATOR_NORM: NormKind.SPECTRAL,
}
_DUAL_NORM = {
    Geometry.EUCLIDEAN: NormKind.L2,
    Geometry.LINF: NormKind.L1,
    Geometry.OPERATOR_NORM: NormKind.NUCLEAR,
}


@dataclass(frozen=True)
class LmoSet:
    geometry: Geometry = Geometry.EUCLIDEAN
    radius: float = 1.0
    op_method: OpMethod = OpMethod.EXACT_SVD
    ns_iterations: int = field(default_factory=lambda: cfg.ns_iterations)
    """Quintic steps, used only when op_method is NEWTON_SCHULZ."""

    def __post_init__(self):
        object.__setattr__(self, "geometry", Geometry(self.geometry))
        object.__setattr__(self, "op_method", OpMethod(self.op_method))
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ValueError(f"radius must be positive and finite, got {self.radius}")
        if self.ns_iterations < 1:
            raise ValueError(f"ns_iterations must be positive, got {self.ns_iterations}")

    def check_shape(self, g: ParamValue) -> None:
        if self.geometry is Geometry.OPERATOR_NORM and g.ndim != 2:
            raise ShapeError(f"operator-norm ball requires a matrix, got shape {g.shape}")

    def contains(self, v: ParamValue, rtol: float | None = None) -> bool:
        rtol = cfg.feasibility_tol if rtol is None else rtol
        return geometry_norm(self, v) <= self.radius * (1.0 + rtol)


@dataclass(frozen=True)
class RsfValue:
    value: float
    support_part: float
    decay_part: float


def geometry_norm(lmo_set: LmoSet, v: ParamValue) -> float:
    """Norm whose unit ball (scaled by r) is the set."""
    lmo_set.check_shape(v)
    return norm(v, _GEOMETRY_NORM[lmo_set.geometry])


# ── Oracles ───────────────────────────────────────────────────────────────

def lmo(lmo_set: LmoSet, g: ParamValue) -> ParamValue:
    """
    argmin_{v in C} <g, v> in closed form.

    g = 0 returns the zero element. sign(0) = 0 for the LInf ball. For the
    operator-norm ball, directions with singular value <= tol * max(S)
    contribute zero.
    """
    lmo_set.check_shape(g)
    require_finite("lmo query", g)
    r = lmo_set.radius

    if not np.any(g):
        return np.zeros_like(g, dtype=np.float64)

    if lmo_set.geometry is Geometry.EUCLIDEAN:
        return -r * (g / norm(g))

    if lmo_set.geometry is Geometry.LINF:
        return -r * np.sign(g)

    if lmo_set.op_method is OpMethod.NEWTON_SCHULZ:
        return -r * newton_schulz_orthogonalize(g, lmo_set.ns_iterations)

    res = svd(g)
    keep = res.S > cfg.svd_zero_tol * res.S[0]
    return -r * (res.U[:, keep] @ res.V[:, keep].T)


def support_value(lmo_set: LmoSet, z: ParamValue) -> float:
    """h_C(z) = sup_{v in C} <z, v> = r * dual_norm(z)."""
    lmo_set.check_shape(z)
    require_finite("support_value argument", z)
    return lmo_set.radius * norm(z, _DUAL_NORM[lmo_set.geometry])


def rsf(lmo_set: LmoSet, lam: float, w: ParamValue, grad_F: ParamValue,
        warn_off_p: bool = True) -> RsfValue:
    """Regularized support function Psi_{C,lam}(w) evaluated from the exact gradient."""
    if w.shape != grad_F.shape:
        raise ShapeError(f"w {w.shape} and grad_F {grad_F.shape} differ in shape")
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    if warn_off_p and lam > 0 and not lmo_set.contains(lam * w):
        logger.warning(f"rsf evaluated off P: ||lam*w|| = {geometry_norm(lmo_set, lam * w):.6g} "
                       f"> r = {lmo_set.radius}")
    support_part = support_value(lmo_set, -grad_F)
    decay_part = lam * dot(grad_F, w) if lam > 0 else 0.0
    return RsfValue(value=support_part + decay_part,
                    support_part=support_part, decay_part=decay_part)


def frank_wolfe_gap(lmo_set: LmoSet, lam: float, w: ParamValue, grad_F: ParamValue) -> float:
    """G_P(w) = sup_{u in P} <-grad F(w), u - w> over P = C / lam (lam > 0)."""
    if lam <= 0:
        raise ValueError("the Frank-Wolfe gap over P = C/lambda needs lambda > 0")
    return support_value(lmo_set, -grad_F) / lam + dot(grad_F, w)


def diameter(lmo_set: LmoSet) -> float:
    """Diameter of C in its own norm: 2r."""
    return 2.0 * lmo_set.radius


def euclidean_diameter(lmo_set: LmoSet, shape: tuple[int, ...]) -> float:
    """
    Diameter of C measured in the Euclidean (Frobenius) norm for a parameter
    of the given shape. This is the R entering the convergence bounds.
    """
    r = lmo_set.radius
    if lmo_set.geometry is Geometry.EUCLIDEAN:
        return 2.0 * r
    if lmo_set.geometry is Geometry.LINF:
        return 2.0 * r * math.sqrt(math.prod(shape))
    if len(shape) != 2:
        raise ShapeError(f"operator-norm ball requires a matrix shape, got {shape}")
    return 2.0 * r * math.sqrt(min(shape))


# ── Newton-Schulz orthogonalization ───────────────────────────────────────

def newton_schulz_orthogonalize(
    M: ParamValue,
    iterations: int | None = None,
    polish_iterations: int | None = None,
) -> ParamValue:
    """
    Approximate the polar factor U V^T of M.

    Runs ``iterations`` quintic steps on M / ||M||_F, then up to
    ``polish_iterations`` cubic steps X <- 1.5 X - 0.5 X X^T X. The quintic
    map only pushes singular values into roughly [0.7, 1.2]; the cubic map
    converges quadratically to 1 from there and never leaves [0, 1].
    Tiny singular values (relative to ||M||_F) are inflated slowly, so
    ill-conditioned inputs come back with degraded accuracy.
    """
    if M.ndim != 2:
        raise ShapeError(f"Newton-Schulz requires a matrix, got shape {M.shape}")
    iterations = cfg.ns_iterations if iterations is None else iterations
    polish_iterations = cfg.ns_polish_iterations if polish_iterations is None else polish_iterations
    if iterations < 1:
        raise ValueError(f"iterations must be positive, got {iterations}")
    fro = norm(M)
    if fro == 0.0:
        raise ValueError("Newton-Schulz orthogonalization of the zero matrix is undefined")

    a, b, c = NS_COEFFS
    transposed = M.shape[0] > M.shape[1]
    X = (M.T if transposed else M) / fro

    for _ in range(iterations):
        A = X @ X.T
        B = b * A + c * (A @ A)
        X = a * X + B @ X

    for _ in range(polish_iterations):
        X_next = 1.5 * X - 0.5 * (X @ X.T) @ X
        delta = norm(X_next - X)
        X = X_next
        if delta <= 1e-15 * max(norm(X), 1.0):
            break

    return X.T if transposed else X


# ── Sampling oracle (test reference) ──────────────────────────────────────

def sample_feasible(lmo_set: LmoSet, shape: tuple[int, ...], num_samples: int,
                    rng: np.random.Generator) -> np.ndarray:
    """
    Boundary-biased feasible samples of C, stacked along axis 0.

    Even-indexed samples lie on the boundary (unit-sphere directions, polar
    factors); odd-indexed ones are spread through the interior.
    """
    r = lmo_set.radius
    n = num_samples
    size = math.prod(shape)
    on_boundary = (np.arange(n) % 2 == 0).reshape((n,) + (1,) * len(shape))

    if lmo_set.geometry is Geometry.EUCLIDEAN:
        z = rng.standard_normal((n,) + shape)
        nz = np.linalg.norm(z, axis=tuple(range(1, z.ndim)), keepdims=True)
        nz[nz == 0] = 1.0
        radial = np.where(on_boundary, 1.0, rng.random((n,) + (1,) * len(shape)) ** (1.0 / size))
        return z * (r * radial / nz)

    if lmo_set.geometry is Geometry.LINF:
        vertex = rng.choice([-r, r], size=(n,) + shape)
        interior = rng.uniform(-r, r, size=(n,) + shape)
        return np.where(rng.random((n,) + shape) < 0.5, vertex, interior)

    if len(shape) != 2:
        raise ShapeError(f"operator-norm ball requires a matrix shape, got {shape}")
    U, S, Vt = np.linalg.svd(2.0 * r * rng.standard_normal((n,) + shape), full_matrices=False)
    polar = r * (U @ Vt)
    clipped = (U * np.minimum(S, r)[:, None, :]) @ Vt
    return np.where(on_boundary, polar, clipped)


def lmo_bruteforce(lmo_set: LmoSet, g: ParamValue, num_samples: int, seed: int) -> ParamValue:
    """Best of ``num_samples`` sampled feasible points by <g, .>; deterministic in ``seed``."""
    if num_samples < 1:
        raise ValueError(f"num_samples must be >= 1, got {num_samples}")
    lmo_set.check_shape(g)
    rng = np.random.default_rng(seed)
    candidates = sample_feasible(lmo_set, g.shape, num_samples, rng)
    values = np.tensordot(candidates, g, axes=g.ndim)
    return np.array(candidates[int(np.argmin(values))])
