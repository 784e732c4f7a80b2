"""
optimizer.py — Unified stochastic LMO update and its specializations

Unified step (one fresh sample xi_t per step, both corrections on that sample):

    d_t     = grad f(x_t; xi_t) - grad f(x_{t-1}; xi_t)          (only when alpha != 0)
    g_t     = beta1 m_{t-1} + (1 - beta1) grad f(x_t; xi_t) + alpha1 d_t
    m_t     = beta2 m_{t-1} + (1 - beta2) grad f(x_t; xi_t) + alpha2 d_t
    v_t     = LMO_C(g_t)
    x_{t+1} = (1 - lam eta1) w_t + eta1 v_t
    w_{t+1} = (1 - lam eta2) w_t + eta2 v_t

Method classes:
    stochastic_lmo     alpha1 = alpha2 = 0, eta1 = eta2        (1 gradient / step)
    variance_reduced   eta1 = eta2, alphas free                (2 gradients / step)
    igt                alpha1 = alpha2 = 0, eta1 = eta2 / (1 - beta2)   (1 gradient / step)

Initialization: m_{-1} = grad f(w_0; xi_0) and x_{-1} = x_0 = w_0. The sample
xi_0 is reused by the t = 0 update, where the correction term is exactly 0.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from src.errors import ParamsError, ShapeError
from src.linalg import ParamValue, as_param, combine, norm, require_finite
from src.lmo import LmoSet, lmo
from src.problems.base import StochasticOracle
from src.problems.sampling import SampleId, SampleStream

logger = logging.getLogger(__name__)

_REL_TOL = 1e-12


def _close(a: float, b: float) -> bool:
    return abs(a - b) <= _REL_TOL * max(abs(a), abs(b), 1.0)


# ── Hyperparameters ───────────────────────────────────────────────────────

@dataclass(frozen=True)
class UnifiedParams:
    """
    Scalars of one unified step.

    Invariants (checked at construction, violations raise ParamsError):
        0 <= beta1 <= beta2 < 1
        0 <= lam * eta1 <= 1  and  0 <= lam * eta2 <= 1
    """

    eta1: float
    eta2: float
    beta1: float = 0.0
    beta2: float = 0.0
    alpha1: float = 0.0
    alpha2: float = 0.0
    lam: float = 0.0

    def __post_init__(self):
        for name in ("eta1", "eta2", "beta1", "beta2", "alpha1", "alpha2", "lam"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ParamsError(f"{name} must be finite, got {value}")
        if not 0.0 <= self.beta1 <= self.beta2 < 1.0:
            raise ParamsError(f"requires 0 <= beta1 <= beta2 < 1, got beta1={self.beta1}, beta2={self.beta2}")
        if self.eta1 <= 0 or self.eta2 <= 0:
            raise ParamsError(f"step sizes must be positive, got eta1={self.eta1}, eta2={self.eta2}")
        if self.lam < 0:
            raise ParamsError(f"lambda must be nonnegative, got {self.lam}")
        for name, eta in (("eta1", self.eta1), ("eta2", self.eta2)):
            if self.lam * eta > 1.0:
                raise ParamsError(f"requires lambda*{name} <= 1, got {self.lam} * {eta} = {self.lam * eta}")

    @property
    def eta(self) -> float:
        """The step size the theorems call eta (eta2, the w-update step)."""
        return self.eta2

    @property
    def uses_correction(self) -> bool:
        return self.alpha1 != 0.0 or self.alpha2 != 0.0

    # Constructors that satisfy the class constraints by construction.

    @classmethod
    def stochastic_lmo(cls, eta: float, beta1: float = 0.0, beta2: float = 0.0,
                       lam: float = 0.0) -> "UnifiedParams":
        return cls(eta1=eta, eta2=eta, beta1=beta1, beta2=beta2, lam=lam)

    @classmethod
    def variance_reduced(cls, eta: float, beta1: float, beta2: float, alpha1: float,
                         alpha2: float, lam: float = 0.0) -> "UnifiedParams":
        return cls(eta1=eta, eta2=eta, beta1=beta1, beta2=beta2,
                   alpha1=alpha1, alpha2=alpha2, lam=lam)

    @classmethod
    def igt(cls, eta: float, beta1: float, beta2: float, lam: float = 0.0) -> "UnifiedParams":
        if not beta2 < 1.0:
            raise ParamsError(f"IGT requires beta2 < 1, got {beta2}")
        return cls(eta1=eta / (1.0 - beta2), eta2=eta, beta1=beta1, beta2=beta2, lam=lam)

    def to_dict(self) -> dict:
        return {
            "eta1": self.eta1, "eta2": self.eta2,
            "beta1": self.beta1, "beta2": self.beta2,
            "alpha1": self.alpha1, "alpha2": self.alpha2,
            "lambda": self.lam,
        }


class MethodClass(str, Enum):
    STOCHASTIC_LMO = "stochastic_lmo"
    VARIANCE_REDUCED = "variance_reduced"
    IGT = "igt"

    @property
    def grads_per_step(self) -> int:
        return 2 if self is MethodClass.VARIANCE_REDUCED else 1

    def check(self, params: UnifiedParams) -> UnifiedParams:
        """Raise ParamsError unless ``params`` satisfies this class's constraints."""
        if self is not MethodClass.VARIANCE_REDUCED and params.uses_correction:
            raise ParamsError(f"{self.value} requires alpha1 = alpha2 = 0, "
                              f"got alpha1={params.alpha1}, alpha2={params.alpha2}")
        if self is MethodClass.IGT:
            expected = params.eta2 / (1.0 - params.beta2)
            if not _close(params.eta1, expected):
                raise ParamsError(f"igt requires eta1 = eta2/(1-beta2) = {expected}, got {params.eta1}")
        elif not _close(params.eta1, params.eta2):
            raise ParamsError(f"{self.value} requires eta1 = eta2, got {params.eta1} != {params.eta2}")
        return params


Schedule = Callable[[int], UnifiedParams]


# ── State ─────────────────────────────────────────────────────────────────

@dataclass
class OptimizerState:
    t: int
    w: ParamValue
    x: ParamValue
    x_prev: ParamValue
    m: ParamValue
    stream: SampleStream
    draws: int = 0
    """Number of sample ids taken from the stream so far."""
    pending_sample: SampleId | None = None

    def next_sample(self) -> tuple[SampleId, "OptimizerState"]:
        """The sample for this step, and the state with it consumed."""
        if self.pending_sample is not None:
            return self.pending_sample, replace(self, pending_sample=None)
        xi = self.stream.at(self.draws)
        return xi, replace(self, draws=self.draws + 1)


@dataclass(frozen=True)
class StepDiagnostics:
    t: int
    sample_id: SampleId
    g: ParamValue
    v: ParamValue
    grad_evals: int
    """Gradient evaluations spent by this step (1 or 2)."""
    epsilon_hat_norm: float | None = None


def init_state(w0: ParamValue, oracle: StochasticOracle, seed: int) -> OptimizerState:
    """m_{-1} = grad f(w0; xi_0), x = x_prev = w0, xi_0 kept pending for step 0."""
    w0 = require_finite("w0", as_param(w0, "w0"))
    stream = SampleStream(seed)
    xi0 = stream.at(0)
    m = require_finite("initial momentum", oracle.sample_grad(w0, xi0))
    return OptimizerState(t=0, w=w0.copy(), x=w0.copy(), x_prev=w0.copy(), m=m,
                          stream=stream, draws=1, pending_sample=xi0)


def epsilon_hat(g: ParamValue, grad_F_at_w: ParamValue) -> float:
    """||g_t - grad F(w_t)||_2, the query error entering the descent rule."""
    if g.shape != grad_F_at_w.shape:
        raise ShapeError(f"g {g.shape} and grad F {grad_F_at_w.shape} differ in shape")
    return norm(g - grad_F_at_w)


def _finish(state: OptimizerState, lmo_set: LmoSet, params: UnifiedParams, g: ParamValue,
            m_new: ParamValue) -> tuple[OptimizerState, ParamValue]:
    require_finite("query g_t", g)
    require_finite("momentum m_t", m_new)
    if not np.any(g):
        logger.debug(f"step {state.t}: g_t = 0, pure weight decay")
    v = lmo(lmo_set, g)
    w, lam = state.w, params.lam
    x_next = require_finite("x_{t+1}", (1.0 - lam * params.eta1) * w + params.eta1 * v)
    w_next = require_finite("w_{t+1}", (1.0 - lam * params.eta2) * w + params.eta2 * v)
    return replace(state, t=state.t + 1, w=w_next, x=x_next, x_prev=state.x, m=m_new), v


def _diagnostics(t: int, xi: SampleId, g: ParamValue, v: ParamValue, evals: int,
                 grad_F_w: ParamValue | None) -> StepDiagnostics:
    eps = None if grad_F_w is None else epsilon_hat(g, grad_F_w)
    return StepDiagnostics(t=t, sample_id=xi, g=g, v=v, grad_evals=evals, epsilon_hat_norm=eps)


# ── Steps ─────────────────────────────────────────────────────────────────

def step_unified(
    state: OptimizerState,
    params: UnifiedParams,
    lmo_set: LmoSet,
    oracle: StochasticOracle,
    grad_F_w: ParamValue | None = None,
) -> tuple[OptimizerState, StepDiagnostics]:
    """
    One step of the unified update.

    Args:
        state    : state entering step t (not modified)
        params   : scalars for this step
        lmo_set  : constraint set C
        oracle   : stochastic gradient oracle
        grad_F_w : exact grad F(w_t); when given, the diagnostics carry ||eps_hat||

    Returns:
        (state for step t+1, diagnostics of step t)
    """
    lmo_set.check_shape(state.w)
    t = state.t
    xi, state = state.next_sample()

    grad_x = require_finite("stochastic gradient at x_t", oracle.sample_grad(state.x, xi))
    coeffs_g = [params.beta1, 1.0 - params.beta1]
    coeffs_m = [params.beta2, 1.0 - params.beta2]
    terms = [state.m, grad_x]
    evals = 1
    if params.uses_correction:
        # at t = 0 x_prev = x, so the difference is exactly zero
        grad_prev = require_finite("stochastic gradient at x_{t-1}",
                                   oracle.sample_grad(state.x_prev, xi))
        terms.append(grad_x - grad_prev)
        coeffs_g.append(params.alpha1)
        coeffs_m.append(params.alpha2)
        evals = 2

    g = combine(coeffs_g, terms)
    m_new = combine(coeffs_m, terms)
    new_state, v = _finish(state, lmo_set, params, g, m_new)
    return new_state, _diagnostics(t, xi, g, v, evals, grad_F_w)


def step_stochastic_lmo(
    state: OptimizerState,
    params: UnifiedParams,
    lmo_set: LmoSet,
    oracle: StochasticOracle,
    grad_F_w: ParamValue | None = None,
) -> tuple[OptimizerState, StepDiagnostics]:
    """Stochastic LMO with two momenta: gradient at w_t, no correction, eta1 = eta2."""
    MethodClass.STOCHASTIC_LMO.check(params)
    lmo_set.check_shape(state.w)
    t = state.t
    xi, state = state.next_sample()
    grad = require_finite("stochastic gradient at w_t", oracle.sample_grad(state.w, xi))

    g = params.beta1 * state.m + (1.0 - params.beta1) * grad
    m_new = params.beta2 * state.m + (1.0 - params.beta2) * grad
    new_state, v = _finish(state, lmo_set, params, g, m_new)
    return new_state, _diagnostics(t, xi, g, v, 1, grad_F_w)


def step_igt(
    state: OptimizerState,
    params: UnifiedParams,
    lmo_set: LmoSet,
    oracle: StochasticOracle,
    grad_F_w: ParamValue | None = None,
) -> tuple[OptimizerState, StepDiagnostics]:
    """
    IGT step: the gradient is taken at the transported point x_t, and the next
    query point is placed by extrapolation,

        x_{t+1} = w_{t+1} + (beta2 / (1 - beta2)) (w_{t+1} - w_t).
    """
    MethodClass.IGT.check(params)
    lmo_set.check_shape(state.w)
    t = state.t
    xi, state = state.next_sample()
    grad = require_finite("stochastic gradient at x_t", oracle.sample_grad(state.x, xi))

    g = require_finite("query g_t", params.beta1 * state.m + (1.0 - params.beta1) * grad)
    m_new = require_finite("momentum m_t", params.beta2 * state.m + (1.0 - params.beta2) * grad)
    if not np.any(g):
        logger.debug(f"step {t}: g_t = 0, pure weight decay")
    v = lmo(lmo_set, g)
    w_next = require_finite("w_{t+1}", (1.0 - params.lam * params.eta2) * state.w + params.eta2 * v)
    transport = params.beta2 / (1.0 - params.beta2)
    x_next = w_next + transport * (w_next - state.w)
    new_state = replace(state, t=t + 1, w=w_next, x=x_next, x_prev=state.x, m=m_new)
    return new_state, _diagnostics(t, xi, g, v, 1, grad_F_w)


def step_nesterov(
    state: OptimizerState,
    params: UnifiedParams,
    lmo_set: LmoSet,
    oracle: StochasticOracle,
    beta1_bar: float,
    grad_F_w: ParamValue | None = None,
) -> tuple[OptimizerState, StepDiagnostics]:
    """
    Approximate-Nesterov query: update the momentum first, then mix it with
    the fresh gradient,

        m_t = beta2 m_{t-1} + (1 - beta2) grad,   g_t = beta1_bar m_t + (1 - beta1_bar) grad.

    This equals the two-momentum query with beta1 = beta1_bar * beta2, so
    ``params.beta1`` is not read here.
    """
    nesterov_reparam(beta1_bar, params.beta2)
    MethodClass.STOCHASTIC_LMO.check(params)
    lmo_set.check_shape(state.w)
    t = state.t
    xi, state = state.next_sample()
    grad = require_finite("stochastic gradient at w_t", oracle.sample_grad(state.w, xi))

    m_new = params.beta2 * state.m + (1.0 - params.beta2) * grad
    g = beta1_bar * m_new + (1.0 - beta1_bar) * grad
    new_state, v = _finish(state, lmo_set, params, g, m_new)
    return new_state, _diagnostics(t, xi, g, v, 1, grad_F_w)


STEP_FUNCTIONS = {
    MethodClass.STOCHASTIC_LMO: step_stochastic_lmo,
    MethodClass.VARIANCE_REDUCED: step_unified,
    MethodClass.IGT: step_igt,
}


# ── Conversions ───────────────────────────────────────────────────────────

def nesterov_reparam(beta1_bar: float, beta2: float) -> float:
    """beta1 of the two-momentum query equivalent to the Nesterov form."""
    if not 0.0 <= beta1_bar <= 1.0:
        raise ParamsError(f"beta1_bar must lie in [0, 1], got {beta1_bar}")
    if not 0.0 <= beta2 < 1.0:
        raise ParamsError(f"beta2 must lie in [0, 1), got {beta2}")
    return beta1_bar * beta2


def muon_scaling_note(beta2: float) -> float:
    """
    1 / (1 - beta2): the factor between normalized momentum (used here) and the
    accumulate-without-damping convention of the original Muon code, i.e.
    the loss scaling that makes the two update rules coincide.
    """
    if not 0.0 <= beta2 < 1.0:
        raise ParamsError(f"beta2 must lie in [0, 1), got {beta2}")
    return 1.0 / (1.0 - beta2)


# ── Parameter groups ──────────────────────────────────────────────────────

@dataclass
class ParamGroup:
    value: ParamValue
    lmo_set: LmoSet
    name: str = ""

    def __post_init__(self):
        self.value = as_param(self.value, self.name or "param group")
        self.lmo_set.check_shape(self.value)


GroupGradFn = Callable[[Sequence[ParamValue], SampleId], Sequence[ParamValue]]
"""(query points per group, sample id) -> stochastic gradient per group."""


@dataclass
class LmoOptimizer:
    """
    Stateful optimizer over several parameter groups sharing one set of scalars.

    Each group carries its own constraint set (e.g. the operator-norm ball for
    matrices and the LInf ball for vectors); all groups see the same sample
    id per step, so the update is the unified step applied on the product set.

    Usage:
        opt = LmoOptimizer(groups, params, MethodClass.IGT, seed=0)
        for _ in range(T):
            opt.step(grad_fn)
        weights = opt.values
    """

    groups: list[ParamGroup]
    params: UnifiedParams | Schedule
    method: MethodClass = MethodClass.STOCHASTIC_LMO
    seed: int = 0
    t: int = field(default=0, init=False)
    _x: list[ParamValue] = field(default_factory=list, init=False, repr=False)
    _x_prev: list[ParamValue] = field(default_factory=list, init=False, repr=False)
    _m: list[ParamValue] | None = field(default=None, init=False, repr=False)
    _pending: SampleId | None = field(default=None, init=False, repr=False)
    _draws: int = field(default=0, init=False, repr=False)

    def __post_init__(self):
        if not self.groups:
            raise ValueError("LmoOptimizer needs at least one parameter group")
        self.method = MethodClass(self.method)
        self._stream = SampleStream(self.seed)
        self._x = [g.value.copy() for g in self.groups]
        self._x_prev = [g.value.copy() for g in self.groups]

    @property
    def values(self) -> list[ParamValue]:
        return [g.value for g in self.groups]

    def params_at(self, t: int) -> UnifiedParams:
        params = self.params(t) if callable(self.params) else self.params
        return self.method.check(params)

    def _init(self, grad_fn: GroupGradFn) -> None:
        xi0 = self._stream.at(0)
        self._draws = 1
        grads = grad_fn(self.values, xi0)
        self._m = [require_finite(f"initial momentum of group {i}", as_param(gr))
                   for i, gr in enumerate(grads)]
        self._pending = xi0

    def step(self, grad_fn: GroupGradFn) -> list[ParamValue]:
        """Apply one update to every group; returns the LMO outputs v_t per group."""
        if self._m is None:
            self._init(grad_fn)
        p = self.params_at(self.t)

        if self._pending is not None:
            xi, self._pending = self._pending, None
        else:
            xi = self._stream.at(self._draws)
            self._draws += 1

        grads = [as_param(gr) for gr in grad_fn(self._x, xi)]
        if len(grads) != len(self.groups):
            raise ShapeError(f"grad_fn returned {len(grads)} gradients for {len(self.groups)} groups")
        terms = [[m, gr] for m, gr in zip(self._m, grads)]
        coeffs_g = [p.beta1, 1.0 - p.beta1]
        coeffs_m = [p.beta2, 1.0 - p.beta2]
        if p.uses_correction:
            prev = [as_param(gr) for gr in grad_fn(self._x_prev, xi)]
            for group_terms, gr, gp in zip(terms, grads, prev):
                group_terms.append(gr - gp)
            coeffs_g.append(p.alpha1)
            coeffs_m.append(p.alpha2)

        outputs = []
        for i, group in enumerate(self.groups):
            g = require_finite(f"query g_t of group {i}", combine(coeffs_g, terms[i]))
            self._m[i] = require_finite(f"momentum m_t of group {i}", combine(coeffs_m, terms[i]))
            v = lmo(group.lmo_set, g)
            w = group.value
            self._x_prev[i] = self._x[i]
            self._x[i] = (1.0 - p.lam * p.eta1) * w + p.eta1 * v
            group.value = (1.0 - p.lam * p.eta2) * w + p.eta2 * v
            outputs.append(v)
        self.t += 1
        return outputs
