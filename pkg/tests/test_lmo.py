import math

import numpy as np
import pytest

from src.errors import NonFiniteError, ShapeError
from src.linalg import dot, norm
from src.lmo import (
    Geometry, LmoSet, OpMethod, diameter, euclidean_diameter, frank_wolfe_gap, geometry_norm,
    lmo, lmo_bruteforce, newton_schulz_orthogonalize, rsf, sample_feasible, support_value,
)

EUCLID = LmoSet(Geometry.EUCLIDEAN, 1.0)
LINF = LmoSet(Geometry.LINF, 1.0)
OPNORM = LmoSet(Geometry.OPERATOR_NORM, 1.0)

SETS_AND_SHAPES = [(EUCLID, (5,)), (LINF, (5,)), (OPNORM, (3, 4)), (LmoSet("linf", 0.5), (2, 3))]


def test_lmo_examples():
    np.testing.assert_allclose(lmo(EUCLID, np.array([3.0, 4.0])), [-0.6, -0.8], atol=1e-15)
    np.testing.assert_array_equal(lmo(LINF, np.array([2.0, -3.0, 0.0])), [-1.0, 1.0, 0.0])
    g = np.diag([2.0, -1.0])
    v = lmo(OPNORM, g)
    np.testing.assert_allclose(v, np.diag([-1.0, 1.0]), atol=1e-14)
    assert dot(g, v) == pytest.approx(-3.0, abs=1e-12)


def test_lmo_zero_query_returns_zero():
    for lmo_set, shape in SETS_AND_SHAPES:
        v = lmo(lmo_set, np.zeros(shape))
        assert v.shape == shape and not np.any(v)


def test_lmo_errors():
    with pytest.raises(ShapeError):
        lmo(OPNORM, np.ones(3))
    with pytest.raises(NonFiniteError):
        lmo(EUCLID, np.array([1.0, np.nan]))
    with pytest.raises(ValueError):
        LmoSet(Geometry.EUCLIDEAN, 0.0)


@pytest.mark.parametrize("lmo_set,shape", SETS_AND_SHAPES)
def test_lmo_beats_bruteforce_and_matches_support(rng, lmo_set, shape):
    for k in range(100):
        g = rng.standard_normal(shape)
        v = lmo(lmo_set, g)
        value = dot(g, v)
        assert value == pytest.approx(-support_value(lmo_set, -g), abs=1e-10)
        assert geometry_norm(lmo_set, v) <= lmo_set.radius + 1e-12
        best = lmo_bruteforce(lmo_set, g, num_samples=10_000, seed=k)
        assert value <= dot(g, best) + 1e-9


@pytest.mark.parametrize("lmo_set,shape", SETS_AND_SHAPES)
def test_lmo_scale_equivariance(rng, lmo_set, shape):
    g = rng.standard_normal(shape)
    for c in (1e-3, 0.7, 250.0):
        if lmo_set.geometry is Geometry.LINF:
            np.testing.assert_array_equal(lmo(lmo_set, c * g), lmo(lmo_set, g))
        else:
            np.testing.assert_allclose(lmo(lmo_set, c * g), lmo(lmo_set, g), atol=1e-12)


def test_operator_norm_rank_deficient_query():
    g = np.outer([1.0, 2.0, 0.0], [0.0, 1.0])
    v = lmo(OPNORM, g)
    assert geometry_norm(OPNORM, v) <= 1.0 + 1e-12
    assert np.linalg.matrix_rank(v) == 1
    assert dot(g, v) == pytest.approx(-norm(g, "nuclear"), abs=1e-12)


def test_support_value_examples():
    assert support_value(EUCLID, np.array([3.0, 4.0])) == pytest.approx(5.0)
    assert support_value(LmoSet(Geometry.LINF, 2.0), np.array([1.0, -1.0, 1.0])) == pytest.approx(6.0)
    assert support_value(OPNORM, np.diag([2.0, -1.0])) == pytest.approx(3.0, abs=1e-12)


def test_rsf_examples():
    psi = rsf(EUCLID, 0.0, np.zeros(2), np.array([3.0, 4.0]))
    assert psi.value == pytest.approx(5.0)
    assert psi.value == pytest.approx(diameter(EUCLID) / 2 * 5.0)

    for lam in (0.0, 0.3, 1.0):
        assert rsf(LINF, lam, np.array([0.4, -0.2]), np.zeros(2)).value == 0.0

    psi = rsf(LINF, 0.5, np.array([1.0, 0.0]), np.array([-2.0, 0.0]))
    assert psi.support_part == pytest.approx(2.0)
    assert psi.decay_part == pytest.approx(-1.0)
    assert psi.value == pytest.approx(1.0)
    assert psi.value == psi.support_part + psi.decay_part


def test_rsf_example_against_sampled_supremum():
    w, grad = np.array([1.0, 0.0]), np.array([-2.0, 0.0])
    samples = sample_feasible(LINF, (2,), 20_000, np.random.default_rng(0))
    sampled = float(np.max(samples @ -grad - 0.5 * dot(-grad, w)))
    assert sampled == pytest.approx(rsf(LINF, 0.5, w, grad).value, abs=1e-3)


def test_rsf_off_p_warns(caplog):
    with caplog.at_level("WARNING"):
        rsf(EUCLID, 1.0, np.array([3.0, 0.0]), np.array([1.0, 1.0]))
    assert "off P" in caplog.text


def test_rsf_shape_mismatch():
    with pytest.raises(ShapeError):
        rsf(EUCLID, 0.0, np.zeros(2), np.zeros(3))


@pytest.mark.parametrize("lmo_set,shape", SETS_AND_SHAPES)
def test_rsf_upper_bound(rng, lmo_set, shape):
    R = euclidean_diameter(lmo_set, shape)
    for lam in (0.0, 0.5, 2.0):
        for _ in range(50):
            w = sample_feasible(lmo_set, shape, 1, rng)[0] / lam if lam > 0 else rng.standard_normal(shape)
            grad = rng.standard_normal(shape)
            assert rsf(lmo_set, lam, w, grad).value <= R * norm(grad) + 1e-9


def test_rsf_equals_scaled_frank_wolfe_gap(rng):
    lam = 0.5
    for lmo_set, shape in SETS_AND_SHAPES:
        w = sample_feasible(lmo_set, shape, 1, rng)[0] / lam
        grad = rng.standard_normal(shape)
        assert rsf(lmo_set, lam, w, grad).value == pytest.approx(lam * frank_wolfe_gap(lmo_set, lam, w, grad),
                                                                 abs=1e-12)


def test_rsf_matches_sampled_frank_wolfe_gap(rng):
    lam = 0.5
    w = np.array([0.3, -0.8, 0.1])
    grad = rng.standard_normal(3)
    best = lmo_bruteforce(EUCLID, grad, num_samples=100_000, seed=3)
    sampled_gap = dot(-grad, best / lam - w)
    assert rsf(EUCLID, lam, w, grad).value == pytest.approx(lam * sampled_gap, abs=1e-2)


def test_diameter():
    assert diameter(LmoSet("euclidean", 1.0)) == 2.0
    assert diameter(LmoSet("linf", 0.5)) == 1.0
    assert diameter(LmoSet("operator_norm", 3.0)) == 6.0


def test_euclidean_diameter():
    assert euclidean_diameter(EUCLID, (7,)) == 2.0
    assert euclidean_diameter(LINF, (4,)) == pytest.approx(4.0)
    assert euclidean_diameter(LmoSet("linf", 0.5), (2, 2)) == pytest.approx(2.0)
    assert euclidean_diameter(OPNORM, (3, 5)) == pytest.approx(2 * math.sqrt(3))
    with pytest.raises(ShapeError):
        euclidean_diameter(OPNORM, (3,))


# ── Newton-Schulz ─────────────────────────────────────────────────────────

def test_newton_schulz_orthogonal_fixed_point():
    a = 0.3
    Q = np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])
    np.testing.assert_allclose(newton_schulz_orthogonalize(Q), Q, atol=1e-6)


def test_newton_schulz_diag():
    X = newton_schulz_orthogonalize(np.diag([2.0, 1.0]), iterations=5)
    assert norm(X - np.eye(2), "spectral") <= 1e-2


def test_newton_schulz_ill_conditioned_is_degraded():
    X = newton_schulz_orthogonalize(np.diag([1.0, 1e-6]))
    assert X[0, 0] == pytest.approx(1.0, abs=1e-6)
    assert X[1, 1] < 0.1


@pytest.mark.parametrize("shape", [(4, 4), (6, 3), (3, 6)])
def test_newton_schulz_well_conditioned_matches_svd(rng, shape):
    U, _, Vt = np.linalg.svd(rng.standard_normal(shape), full_matrices=False)
    S = np.linspace(1.0, 0.2, min(shape))
    M = (U * S) @ Vt
    X = newton_schulz_orthogonalize(M)
    assert X.shape == shape
    assert norm(X - U @ Vt, "spectral") <= 1e-2


def test_newton_schulz_errors():
    with pytest.raises(ValueError):
        newton_schulz_orthogonalize(np.zeros((2, 2)))
    with pytest.raises(ShapeError):
        newton_schulz_orthogonalize(np.ones(3))


def test_newton_schulz_lmo_is_feasible_and_close(rng):
    ns_set = LmoSet(Geometry.OPERATOR_NORM, 2.0, op_method=OpMethod.NEWTON_SCHULZ)
    exact_set = LmoSet(Geometry.OPERATOR_NORM, 2.0)
    U, _, Vt = np.linalg.svd(rng.standard_normal((5, 4)), full_matrices=False)
    g = (U * np.array([3.0, 2.0, 1.5, 1.0])) @ Vt
    v = lmo(ns_set, g)
    assert geometry_norm(ns_set, v) <= 2.0 * (1 + 1e-9)
    assert norm(v - lmo(exact_set, g), "spectral") <= 2e-2


# ── Sampling oracle ───────────────────────────────────────────────────────

def test_bruteforce_examples():
    best = lmo_bruteforce(EUCLID, np.array([1.0, 0.0]), num_samples=100_000, seed=0)
    assert dot(np.array([1.0, 0.0]), best) <= -1.0 + 1e-2
    best = lmo_bruteforce(LINF, np.array([1.0, 1.0]), num_samples=10_000, seed=0)
    assert dot(np.array([1.0, 1.0]), best) <= -2.0 + 1e-2
    one = lmo_bruteforce(OPNORM, np.ones((2, 3)), num_samples=1, seed=5)
    assert OPNORM.contains(one)


def test_bruteforce_is_deterministic():
    g = np.array([0.3, -1.2, 2.0])
    np.testing.assert_array_equal(lmo_bruteforce(LINF, g, 500, seed=9), lmo_bruteforce(LINF, g, 500, seed=9))


@pytest.mark.parametrize("lmo_set,shape", SETS_AND_SHAPES)
def test_sampled_points_are_feasible(rng, lmo_set, shape):
    samples = sample_feasible(lmo_set, shape, 200, rng)
    assert samples.shape == (200,) + shape
    assert all(lmo_set.contains(s) for s in samples)


@pytest.mark.parametrize("scale", [1e200, 1e-200])
def test_lmo_extreme_magnitudes(scale):
    g = scale * np.array([3.0, 4.0])
    np.testing.assert_allclose(lmo(EUCLID, g), [-0.6, -0.8], atol=1e-15)
    np.testing.assert_array_equal(lmo(LINF, g), [-1.0, -1.0])
    assert support_value(EUCLID, g) == pytest.approx(5.0 * scale, rel=1e-14)

    M = scale * np.diag([2.0, 1.0])
    np.testing.assert_allclose(lmo(OPNORM, M), -np.eye(2), atol=1e-12)
    X = newton_schulz_orthogonalize(M)
    np.testing.assert_allclose(X, newton_schulz_orthogonalize(np.diag([2.0, 1.0])), atol=1e-12)
    assert norm(X - np.eye(2), "spectral") <= 1e-2
    w = np.array([0.1, 0.2])
    assert rsf(EUCLID, 0.0, w, g).value == pytest.approx(5.0 * scale, rel=1e-14)
