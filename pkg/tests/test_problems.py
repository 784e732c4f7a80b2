import math
import threading

import numpy as np
import pytest

from src.linalg import norm
from src.lmo import Geometry, LmoSet, lmo
from src.problems import (
    PROBLEMS, LogisticFiniteSum, NoiseModel, SampleStream, build_problem, make_logistic_finite_sum,
    make_matrix_quadratic, make_noisy_quadratic, make_nonconvex_smooth, sample_stream,
)
from src.problems.sampling import sample_rng, splitmix64


# ── Noisy quadratic ───────────────────────────────────────────────────────

def test_quadratic_closed_form(quad_sigma0):
    w = np.array([1.0, 1.0])
    assert quad_sigma0.loss(w) == pytest.approx(2.5)
    np.testing.assert_array_equal(quad_sigma0.full_grad(w), [1.0, 4.0])
    assert quad_sigma0.constants.L == 4.0
    assert quad_sigma0.constants.rho == 0.0
    assert quad_sigma0.constants.delta_F == pytest.approx(2.5)


def test_quadratic_sigma0_sample_grad_is_full_grad(quad_sigma0, rng):
    for k in range(20):
        w = rng.standard_normal(2)
        np.testing.assert_array_equal(quad_sigma0.sample_grad(w, k), quad_sigma0.full_grad(w))


def test_quadratic_additive_noise_moments(quad_additive):
    w = np.array([0.3, -1.0, 2.0, 0.5])
    ids = SampleStream(11).take(20_000)
    noise = np.array([quad_additive.noise(w, int(i)) for i in ids])
    np.testing.assert_allclose(np.linalg.norm(noise, axis=1), 0.5, rtol=1e-12)
    mean = noise.mean(axis=0)
    variance = float(np.mean(np.sum((noise - mean) ** 2, axis=1)))
    assert 0.2 <= variance <= 0.3
    assert norm(mean) < 0.02


def test_quadratic_coordinatewise_noise():
    oracle = make_noisy_quadratic(eigenvalues=[1.0, 2.0, 3.0, 4.0],
                                  noise_model=NoiseModel.COORDINATEWISE, sigma=0.8, seed=3)
    w = np.zeros(4)
    for k in range(50):
        n = oracle.noise(w, k)
        assert norm(n) == pytest.approx(0.8, rel=1e-12)
        np.testing.assert_allclose(np.abs(n), 0.4)


def test_quadratic_noise_is_deterministic_and_independent_of_w(quad_additive):
    a = quad_additive.noise(np.zeros(4), 42)
    b = quad_additive.noise(np.ones(4), 42)
    np.testing.assert_allclose(a, b, atol=1e-15)
    c = make_noisy_quadratic(eigenvalues=[1, 2, 3, 4], sigma=0.5, seed=7).noise(np.zeros(4), 42)
    np.testing.assert_array_equal(a, c)
    assert not np.array_equal(a, quad_additive.noise(np.zeros(4), 43))


def test_quadratic_errors():
    with pytest.raises(ValueError):
        make_noisy_quadratic(eigenvalues=[1.0, 0.0])
    with pytest.raises(ValueError):
        make_noisy_quadratic(dim=3, eigenvalues=[1.0, 2.0])
    with pytest.raises(ValueError):
        make_noisy_quadratic(eigenvalues=[1.0], sigma=-1.0)
    with pytest.raises(ValueError):
        make_noisy_quadratic(eigenvalues=[1.0, 2.0], w0=[1.0])


# ── Evaluation counter ────────────────────────────────────────────────────

def test_eval_counter_counts_sample_grads_only(quad_additive):
    w = np.zeros(4)
    assert quad_additive.grad_evals == 0
    quad_additive.sample_grad(w, 1)
    quad_additive.sample_grad(w, 2)
    quad_additive.full_grad(w)
    quad_additive.noise(w, 3)
    quad_additive.loss(w)
    assert quad_additive.grad_evals == 2


def test_eval_counter_is_thread_safe(quad_additive):
    w = np.zeros(4)

    def work():
        for k in range(500):
            quad_additive.sample_grad(w, k)

    threads = [threading.Thread(target=work) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert quad_additive.grad_evals == 4000


# ── Nonconvex smooth ──────────────────────────────────────────────────────

def test_nonconvex_examples():
    oracle = make_nonconvex_smooth(dim=3, coupling=0.5)
    assert oracle.loss(np.zeros(3)) == 0.0
    np.testing.assert_array_equal(oracle.full_grad(np.zeros(3)), np.zeros(3))

    one = make_nonconvex_smooth(dim=1)
    assert one.loss(np.array([1.0])) == pytest.approx(0.5)
    assert one.full_grad(np.array([1.0]))[0] == pytest.approx(0.5)
    assert one.constants.L == 2.0
    assert one.constants.rho == pytest.approx(4.67)


def test_nonconvex_gradient_and_hvp_match_finite_differences(rng):
    oracle = make_nonconvex_smooth(dim=5, coupling=0.3)
    h = 1e-6
    for _ in range(10):
        w = rng.standard_normal(5)
        d = rng.standard_normal(5)
        fd = (oracle.loss(w + h * d) - oracle.loss(w - h * d)) / (2 * h)
        assert fd == pytest.approx(float(oracle.full_grad(w) @ d), abs=1e-6)
        fd_hvp = (oracle.full_grad(w + h * d) - oracle.full_grad(w - h * d)) / (2 * h)
        np.testing.assert_allclose(oracle.hvp(w, d), fd_hvp, atol=1e-5)


def test_nonconvex_constants_hold_on_random_pairs(rng):
    oracle = make_nonconvex_smooth(dim=4, coupling=0.5)
    L, rho = oracle.constants.L, oracle.constants.rho
    for _ in range(500):
        x, y = 2 * rng.standard_normal(4), 2 * rng.standard_normal(4)
        assert norm(oracle.full_grad(x) - oracle.full_grad(y)) <= L * norm(x - y) + 1e-12
        d = rng.standard_normal(4)
        d /= norm(d)
        assert norm(oracle.hvp(x, d) - oracle.hvp(y, d)) <= rho * norm(x - y) + 1e-12


def test_nonconvex_noise_has_norm_sigma():
    oracle = make_nonconvex_smooth(dim=6, coupling=0.5, sigma=0.1, seed=4)
    w = np.linspace(-1, 1, 6)
    for k in range(20):
        assert norm(oracle.noise(w, k)) == pytest.approx(0.1, rel=1e-12)


# ── Matrix quadratic ──────────────────────────────────────────────────────

def test_matrix_examples():
    oracle = make_matrix_quadratic(3, 2, target_seed=1)
    assert oracle.loss(oracle.target) == 0.0
    assert not np.any(oracle.full_grad(oracle.target))

    target = np.diag([2.0, 1.0])
    diag = make_matrix_quadratic(2, 2, target=target)
    grad = diag.full_grad(np.zeros((2, 2)))
    np.testing.assert_array_equal(grad, -target)
    np.testing.assert_allclose(lmo(LmoSet(Geometry.OPERATOR_NORM, 1.0), grad), np.eye(2), atol=1e-14)
    assert diag.constants.L == 1.0


def test_matrix_errors():
    with pytest.raises(ValueError):
        make_matrix_quadratic(0, 2)
    with pytest.raises(ValueError):
        make_matrix_quadratic(2, 2, target=np.ones((3, 2)))


# ── Logistic finite sum ───────────────────────────────────────────────────

@pytest.fixture
def logistic():
    return make_logistic_finite_sum(num_samples=128, dim=5, batch=8, seed=2, sigma_mode="bound")


def test_logistic_full_batch_is_deterministic():
    oracle = make_logistic_finite_sum(num_samples=40, dim=3, batch=40, seed=1)
    w = np.array([0.2, -0.1, 0.4])
    for k in range(5):
        np.testing.assert_array_equal(oracle.sample_grad(w, k), oracle.full_grad(w))
    assert oracle.constants.sigma == 0.0
    assert not oracle.constants.sigma_estimated


def test_logistic_gradient_at_zero_matches_direct_sum(logistic):
    expected = np.zeros(5)
    for x_i, y_i in zip(logistic.X, logistic.y):
        expected += -y_i * x_i / 2
    expected /= logistic.num_samples
    np.testing.assert_allclose(logistic.full_grad(np.zeros(5)), expected, atol=1e-14)
    assert logistic.loss(np.zeros(5)) == pytest.approx(math.log(2.0))


def test_logistic_averaged_smoothness(logistic, rng):
    L = logistic.constants.L
    for k in range(1000):
        x = rng.standard_normal(5)
        y = x + 0.1 * rng.standard_normal(5)
        diff = logistic.sample_grad(x, k) - logistic.sample_grad(y, k)
        assert norm(diff) <= L * norm(x - y) + 1e-12


def test_logistic_hvp_matches_finite_differences(logistic, rng):
    w, d = rng.standard_normal(5), rng.standard_normal(5)
    h = 1e-6
    fd = (logistic.full_grad(w + h * d) - logistic.full_grad(w - h * d)) / (2 * h)
    np.testing.assert_allclose(logistic.hvp(w, d), fd, atol=1e-6)


def test_logistic_sigma_estimate_below_bound(logistic):
    bound = logistic.sigma_bound()
    assert logistic.constants.sigma == bound
    assert 0.0 < logistic.sigma_estimate(probes=500) <= bound


def test_logistic_estimated_sigma_is_flagged():
    oracle = make_logistic_finite_sum(num_samples=64, dim=3, batch=4, seed=0)
    assert oracle.constants.sigma_estimated
    assert oracle.constants.sigma > 0
    assert oracle.grad_evals == 0


def test_logistic_batches_are_subsets(logistic):
    for k in range(20):
        idx = logistic.batch_indices(k)
        assert idx.size == 8 and np.unique(idx).size == 8
        assert idx.min() >= 0 and idx.max() < 128
    np.testing.assert_array_equal(logistic.batch_indices(3), logistic.batch_indices(3))


def test_logistic_errors():
    with pytest.raises(ValueError):
        LogisticFiniteSum(num_samples=10, dim=2, batch=11)
    with pytest.raises(ValueError):
        LogisticFiniteSum(num_samples=10, dim=2, batch=0)


# ── Sample streams ────────────────────────────────────────────────────────

def test_sample_stream_is_deterministic():
    first, second = sample_stream(5), sample_stream(5)
    a = [next(first) for _ in range(10)]
    b = [next(second) for _ in range(10)]
    assert a == b
    stream = SampleStream(5)
    assert [stream.at(k) for k in range(10)] == b


def test_sample_stream_take_matches_at():
    stream = SampleStream(123)
    ids = stream.take(50, start=7)
    assert [int(i) for i in ids] == [stream.at(k) for k in range(7, 57)]


def test_sample_streams_of_distinct_seeds_differ():
    first = {SampleStream(s).at(0) for s in range(100)}
    assert len(first) == 100
    assert len({SampleStream(0).at(k) for k in range(1000)}) == 1000


def test_splitmix_reference_value():
    # first output of the reference SplitMix64 generator seeded with 0
    assert splitmix64(0) == 0xE220A8397B1DCDAF


def test_sample_rng_depends_only_on_key_and_id():
    a = sample_rng(1, 2, 3).standard_normal(4)
    np.testing.assert_array_equal(a, sample_rng(1, 2, 3).standard_normal(4))
    assert not np.array_equal(a, sample_rng(1, 2, 4).standard_normal(4))
    assert not np.array_equal(a, sample_rng(1, 9, 3).standard_normal(4))


# ── Registry ──────────────────────────────────────────────────────────────

def test_build_problem():
    assert set(PROBLEMS) == {"noisy_quadratic", "nonconvex_smooth", "matrix_quadratic",
                             "logistic_finite_sum"}
    oracle = build_problem("noisy_quadratic", {"eigenvalues": [1.0, 4.0], "sigma": 0.1})
    assert oracle.constants.sigma == 0.1
    assert build_problem("matrix_quadratic", {"m": 2, "n": 3}).w0.shape == (2, 3)
    with pytest.raises(ValueError, match="unknown problem"):
        build_problem("rosenbrock", {})
    with pytest.raises(TypeError):
        build_problem("noisy_quadratic", {"eigenvalues": [1.0], "bogus": 1})


def test_sample_stream_long_prefix_and_disjointness():
    np.testing.assert_array_equal(SampleStream(1).take(1_000_000), SampleStream(1).take(1_000_000))
    a, b = SampleStream(1).take(1000), SampleStream(2).take(1000)
    assert np.mean(a != b) >= 0.99
