"""
lemmas.py — Per-step verification of the inequalities behind the RSF bounds

Checks (each reported per problem with its worst margin; margin >= -tol passes):

    step_geometry       ||w_{t+1} - w_t|| <= eta R
    descent             F(w_{t+1}) <= F(w_t) - eta Psi(w_t) + eta R ||eps_hat_t|| + (L/2) eta^2 R^2
    igt_extrapolation   x_{t+1} = w_{t+1} + (b2/(1-b2)) (w_{t+1} - w_t)  and  ||x_t - w_t|| <= (eta1 - eta2) R
    second_order        ||grad F(x) - grad F(y) - H(y)(x - y)|| <= rho ||x - y||^2
    martingale          E||N_t||^2 <= b1^2 b2^(2t-2) s^2 + b1^2 (1-b2) s^2 + (1-b1)^2 s^2
                        N_t = b1 b2^(t-1) e_0 + b1 (1-b2) sum_{s=1}^{t-1} b2^(t-1-s) e_s + (1-b1) e_t
    feasibility         lam w_t in C for every t when lam w_0 in C

R is the Euclidean diameter of C. The trajectories run the unified step.
``step_fault`` multiplies the executed step sizes while every check keeps
the nominal ones, so a value above 1 must make step_geometry fail.
"""

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from src.errors import ParamsError
from src.lmo import Geometry, LmoSet, euclidean_diameter, geometry_norm, rsf
from src.linalg import ParamValue, norm
from src.optimizer import MethodClass, UnifiedParams, init_state, step_unified
from src.problems import (
    LogisticFiniteSum, MatrixQuadratic, NoisyQuadratic, NonconvexSmooth,
)
from src.problems.base import StochasticOracle

logger = logging.getLogger(__name__)

GEOMETRY_TOL = 1e-12
DESCENT_TOL = 1e-9
EXTRAPOLATION_TOL = 1e-10
REMAINDER_TOL = 1e-10
FEASIBILITY_TOL = 1e-9
MARTINGALE_FACTOR = 1.1

_HORIZON = 200
_REMAINDER_PAIRS = 200


@dataclass(frozen=True)
class LemmaCheck:
    lemma: str
    problem: str
    passed: bool
    worst_margin: float
    tolerance: float
    steps_checked: int
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "lemma": self.lemma,
            "problem": self.problem,
            "pass": self.passed,
            "worst_margin": self.worst_margin if math.isfinite(self.worst_margin) else None,
            "tolerance": self.tolerance,
            "steps_checked": self.steps_checked,
            "detail": self.detail,
        }


@dataclass
class VerifyReport:
    checks: list[LemmaCheck] = field(default_factory=list)
    step_fault: float = 1.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "pass": self.passed,
            "step_fault": self.step_fault,
            "checks": [c.to_dict() for c in self.checks],
        }


@dataclass(frozen=True)
class StepRecord:
    t: int
    w: ParamValue
    w_next: ParamValue
    x: ParamValue
    x_next: ParamValue
    psi: float
    eps_hat: float
    sample_id: int


def _check(lemma: str, problem: str, margins: list[float], tol: float, detail: str = "") -> LemmaCheck:
    worst = float(min(margins)) if margins else float("inf")
    return LemmaCheck(lemma=lemma, problem=problem, passed=worst >= -tol, worst_margin=worst,
                      tolerance=tol, steps_checked=len(margins), detail=detail)



def _rejected(lemma: str, problem: str, err: ParamsError) -> LemmaCheck:
    """Failed entry for a trajectory whose executed step sizes are invalid."""
    return LemmaCheck(lemma=lemma, problem=problem, passed=False, worst_margin=-math.inf,
                      tolerance=0.0, steps_checked=0, detail=f"executed params rejected: {err}")

# ── Trajectories ──────────────────────────────────────────────────────────

def trajectory(
    oracle: StochasticOracle,
    lmo_set: LmoSet,
    params: UnifiedParams,
    T: int,
    seed: int,
    step_fault: float = 1.0,
) -> list[StepRecord]:
    """Run the unified step T times, recording what the checks need."""
    executed = params if step_fault == 1.0 else replace(
        params, eta1=params.eta1 * step_fault, eta2=params.eta2 * step_fault)
    state = init_state(oracle.w0, oracle, seed)
    records = []
    for t in range(T):
        grad_F = oracle.full_grad(state.w)
        psi = rsf(lmo_set, params.lam, state.w, grad_F, warn_off_p=False).value
        nxt, diag = step_unified(state, executed, lmo_set, oracle, grad_F_w=grad_F)
        records.append(StepRecord(t=t, w=state.w, w_next=nxt.w, x=state.x, x_next=nxt.x,
                                  psi=psi, eps_hat=diag.epsilon_hat_norm, sample_id=int(diag.sample_id)))
        state = nxt
    return records


# ── Individual checks ─────────────────────────────────────────────────────

def step_geometry_margins(records: list[StepRecord], eta: float, R: float) -> list[float]:
    return [eta * R - norm(r.w_next - r.w) for r in records]


def descent_margins(records: list[StepRecord], oracle: StochasticOracle, eta: float, R: float) -> list[float]:
    L = oracle.constants.L
    out = []
    for r in records:
        rhs = oracle.loss(r.w) - eta * r.psi + eta * R * r.eps_hat + 0.5 * L * eta ** 2 * R ** 2
        out.append(rhs - oracle.loss(r.w_next))
    return out


def extrapolation_margins(records: list[StepRecord], params: UnifiedParams, R: float) -> list[float]:
    """min(identity slack, distance-bound slack) per step."""
    transport = params.beta2 / (1.0 - params.beta2)
    reach = (params.eta1 - params.eta2) * R
    out = []
    for r in records:
        residual = norm(r.x_next - r.w_next - transport * (r.w_next - r.w))
        out.append(min(EXTRAPOLATION_TOL - residual, reach - norm(r.x_next - r.w_next)))
    return out


def remainder_margins(oracle: StochasticOracle, rng: np.random.Generator,
                      pairs: int = _REMAINDER_PAIRS) -> list[float]:
    rho = oracle.constants.rho
    shape = oracle.w0.shape
    out = []
    for k in range(pairs):
        scale = 10.0 ** rng.uniform(-3, 0.5)
        y = oracle.w0 + rng.standard_normal(shape)
        x = y + scale * rng.standard_normal(shape)
        d = x - y
        Z = oracle.full_grad(x) - oracle.full_grad(y) - oracle.hvp(y, d)
        floor = REMAINDER_TOL * (1.0 + norm(oracle.full_grad(x)))
        out.append(rho * norm(d) ** 2 + floor - norm(Z))
    return out


def martingale_bound(beta1: float, beta2: float, sigma: float, t: int) -> float:
    return sigma ** 2 * (beta1 ** 2 * beta2 ** (2 * t - 2) + beta1 ** 2 * (1 - beta2) + (1 - beta1) ** 2)


def martingale_second_moment(
    oracle: StochasticOracle,
    lmo_set: LmoSet,
    params: UnifiedParams,
    t: int,
    seeds: int,
) -> float:
    """Mean of ||N_t||^2 over seeds, N_t rebuilt from the noise at each query point."""
    b1, b2 = params.beta1, params.beta2
    weights = np.array([b1 * b2 ** (t - 1)]
                       + [b1 * (1 - b2) * b2 ** (t - 1 - s) for s in range(1, t)]
                       + [1 - b1])
    sq = []
    for seed in range(seeds):
        records = trajectory(oracle, lmo_set, params, t + 1, seed)
        N = sum(wgt * oracle.noise(r.x, r.sample_id) for wgt, r in zip(weights, records))
        sq.append(norm(N) ** 2)
    return float(np.mean(sq))


# ── Suite ─────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class _Case:
    name: str
    oracle: StochasticOracle
    lmo_set: LmoSet


def _cases() -> list[_Case]:
    eig = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0]
    return [
        _Case("quadratic_sigma0", NoisyQuadratic(eig, sigma=0.0, seed=1), LmoSet(Geometry.EUCLIDEAN, 1.0)),
        _Case("quadratic_additive", NoisyQuadratic(eig, sigma=0.5, seed=2), LmoSet(Geometry.EUCLIDEAN, 1.0)),
        _Case("quadratic_coordinatewise",
              NoisyQuadratic(eig, noise_model="coordinatewise", sigma=0.5, seed=3), LmoSet(Geometry.LINF, 0.5)),
        _Case("nonconvex_smooth", NonconvexSmooth(6, coupling=0.5, sigma=0.1, seed=4), LmoSet(Geometry.LINF, 0.5)),
        _Case("matrix_quadratic", MatrixQuadratic(5, 3, target_seed=5, sigma=0.2, seed=5),
              LmoSet(Geometry.OPERATOR_NORM, 1.0)),
        _Case("logistic_finite_sum", LogisticFiniteSum(256, 6, 16, seed=6, sigma_mode="bound"),
              LmoSet(Geometry.EUCLIDEAN, 1.0)),
    ]


def _method_params() -> dict[MethodClass, UnifiedParams]:
    return {
        MethodClass.STOCHASTIC_LMO: UnifiedParams.stochastic_lmo(0.05, beta1=0.5, beta2=0.9),
        MethodClass.VARIANCE_REDUCED: UnifiedParams.variance_reduced(0.05, beta1=0.5, beta2=0.9,
                                                                     alpha1=0.5, alpha2=0.9),
        MethodClass.IGT: UnifiedParams.igt(0.02, beta1=0.5, beta2=0.9),
    }


def verify_suite(
    step_fault: float = 1.0,
    martingale_seeds: int = 200,
    martingale_t: int = 50,
    horizon: int = _HORIZON,
) -> VerifyReport:
    """
    Run every lemma check on the built-in problem set.

    Args:
        step_fault       : factor applied to the executed step sizes (1.0 = no fault)
        martingale_seeds : Monte-Carlo seeds for the martingale second moment
        martingale_t     : step index t of N_t
        horizon          : steps per trajectory

    Returns:
        VerifyReport; failures are entries, never exceptions.
    """
    if step_fault != 1.0:
        logger.warning(f"verify suite running with injected step fault x{step_fault}")
    report = VerifyReport(step_fault=step_fault)
    rng = np.random.default_rng(2024)

    for case in _cases():
        R = euclidean_diameter(case.lmo_set, case.oracle.w0.shape)
        geometry, descent = [], []
        try:
            for method, params in _method_params().items():
                records = trajectory(case.oracle, case.lmo_set, params, horizon, seed=11, step_fault=step_fault)
                geometry += step_geometry_margins(records, params.eta2, R)
                descent += descent_margins(records, case.oracle, params.eta2, R)
                if method is MethodClass.IGT:
                    report.checks.append(_check("igt_extrapolation", case.name,
                                                extrapolation_margins(records, params, R), 0.0,
                                                f"beta2={params.beta2}, eta1={params.eta1:.6g}, eta2={params.eta2:.6g}"))
        except ParamsError as e:
            report.checks.append(_rejected("step_geometry", case.name, e))
        else:
            report.checks.append(_check("step_geometry", case.name, geometry, GEOMETRY_TOL, f"R={R:.6g}"))
            report.checks.append(_check("descent", case.name, descent, DESCENT_TOL,
                                        f"L={case.oracle.constants.L:.6g}"))
        if case.oracle.has_hessian:
            report.checks.append(_check("second_order", case.name, remainder_margins(case.oracle, rng),
                                        0.0, f"rho={case.oracle.constants.rho:.6g}"))

    report.checks.append(_martingale_check(martingale_seeds, martingale_t))
    report.checks.extend(_feasibility_checks(step_fault, horizon))

    for c in report.checks:
        log = logger.info if c.passed else logger.error
        log(f"{c.lemma:<18} {c.problem:<26} {'PASS' if c.passed else 'FAIL'}  worst margin {c.worst_margin:.3e}")
    return report


def _martingale_check(seeds: int, t: int) -> LemmaCheck:
    oracle = NoisyQuadratic([1.0, 2.0, 4.0, 8.0, 16.0, 32.0], sigma=0.5, seed=2)
    params = UnifiedParams.stochastic_lmo(0.01, beta1=0.9, beta2=0.99)
    bound = martingale_bound(params.beta1, params.beta2, oracle.constants.sigma, t)
    measured = martingale_second_moment(oracle, LmoSet(Geometry.EUCLIDEAN, 1.0), params, t, seeds)
    return LemmaCheck(
        lemma="martingale", problem="quadratic_additive",
        passed=measured <= MARTINGALE_FACTOR * bound,
        worst_margin=MARTINGALE_FACTOR * bound - measured,
        tolerance=0.0, steps_checked=seeds,
        detail=f"t={t}, seeds={seeds}, mean||N_t||^2={measured:.6g}, bound={bound:.6g}",
    )


def _feasibility_checks(step_fault: float, horizon: int) -> list[LemmaCheck]:
    lam = 0.5
    cases = [
        _Case("quadratic_weight_decay", NoisyQuadratic([1.0, 2.0, 4.0, 8.0], sigma=0.3, seed=7,
                                                 w0=np.full(4, 0.25)), LmoSet(Geometry.EUCLIDEAN, 1.0)),
        _Case("matrix_quadratic", MatrixQuadratic(4, 3, target_seed=8, sigma=0.2, seed=8),
              LmoSet(Geometry.OPERATOR_NORM, 1.0)),
    ]
    out = []
    for case in cases:
        margins = []
        try:
            for p in _method_params().values():
                params = replace(p, lam=lam)
                records = trajectory(case.oracle, case.lmo_set, params, horizon, seed=13, step_fault=step_fault)
                r = case.lmo_set.radius
                margins += [r - geometry_norm(case.lmo_set, lam * rec.w_next) for rec in records]
        except ParamsError as e:
            out.append(_rejected("feasibility", case.name, e))
            continue
        out.append(_check("feasibility", case.name, margins, FEASIBILITY_TOL * case.lmo_set.radius,
                          f"lambda={lam}"))
    return out
