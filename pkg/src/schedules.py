"""
schedules.py — Theorem-prescribed constant hyperparameters

    name   class              regime     eta              beta2             1 - beta1
    thm1   stochastic_lmo     sigma > 0  1/(R T^{3/4})    1 - T^{-1/2}      T^{-3/8}  in [T^{-1/2}, T^{-1/4}]
    cor4   stochastic_lmo     sigma = 0  1/(R T^{1/2})    beta (fixed)      1 - beta  (beta1 = beta2)
    cor1   variance_reduced   any        1/(R T^{2/3})    1 - T^{-2/3}      T^{-1/2}  in [T^{-2/3}, T^{-1/3}]
    cor2   igt                sigma > 0  1/(R T^{5/7})    1 - T^{-4/7}      T^{-3/7}  in [T^{-4/7}, T^{-2/7}]
    cor3   igt                sigma = 0  1/(R T^{1/2})    1 - T^{-1/4}      T^{-1/4}  (beta1 = beta2)

Where the theorems allow an interval for 1 - beta1, the default is the
geometric midpoint exponent; ``beta1`` overrides it but must stay inside
the interval. cor1 uses alpha1 = beta1 and alpha2 = beta2. For igt, eta is
the w-step eta2 and eta1 = eta / (1 - beta2).
"""

import logging
from dataclasses import dataclass

from src.errors import ParamsError
from src.optimizer import MethodClass, Schedule, UnifiedParams

logger = logging.getLogger(__name__)

DEFAULT_FIXED_BETA = 0.5


@dataclass(frozen=True)
class _Directive:
    method: MethodClass
    eta_exp: float
    """eta = 1 / (R T^eta_exp)"""
    beta2_exp: float | None
    """beta2 = 1 - T^-beta2_exp; None means a fixed beta independent of T"""
    beta1_interval: tuple[float, float] | None
    """(lo, hi) exponents with 1 - beta1 in [T^-lo, T^-hi]; None means beta1 = beta2"""


_DIRECTIVES: dict[str, _Directive] = {
    "thm1": _Directive(MethodClass.STOCHASTIC_LMO, 3 / 4, 1 / 2, (1 / 2, 1 / 4)),
    "cor4": _Directive(MethodClass.STOCHASTIC_LMO, 1 / 2, None, None),
    "cor1": _Directive(MethodClass.VARIANCE_REDUCED, 2 / 3, 2 / 3, (2 / 3, 1 / 3)),
    "cor2": _Directive(MethodClass.IGT, 5 / 7, 4 / 7, (4 / 7, 2 / 7)),
    "cor3": _Directive(MethodClass.IGT, 1 / 2, 1 / 4, None),
}

SCHEDULE_NAMES = tuple(_DIRECTIVES)


def schedule_method(name: str) -> MethodClass:
    try:
        return _DIRECTIVES[name].method
    except KeyError:
        raise ParamsError(f"unknown schedule '{name}'; expected one of {list(SCHEDULE_NAMES)}") from None


def directive_for(method: MethodClass | str, sigma_positive: bool) -> str:
    """Schedule name the theorems prescribe for a class and noise regime."""
    method = MethodClass(method)
    if method is MethodClass.STOCHASTIC_LMO:
        return "thm1" if sigma_positive else "cor4"
    if method is MethodClass.VARIANCE_REDUCED:
        return "cor1"
    return "cor2" if sigma_positive else "cor3"


def schedule_by_name(
    name: str,
    T: int,
    R: float,
    lam: float = 0.0,
    beta1: float | None = None,
    beta: float = DEFAULT_FIXED_BETA,
) -> UnifiedParams:
    """
    Expand a named schedule into constant parameters.

    Args:
        name  : one of SCHEDULE_NAMES
        T     : horizon (>= 2)
        R     : diameter of C in the Euclidean norm
        lam   : weight decay
        beta1 : override for the interval-valued beta1 (thm1, cor1, cor2)
        beta  : fixed momentum of cor4

    Returns:
        UnifiedParams satisfying the class constraints of the schedule.
    """
    d = _DIRECTIVES.get(name)
    if d is None:
        raise ParamsError(f"unknown schedule '{name}'; expected one of {list(SCHEDULE_NAMES)}")
    if T < 2:
        raise ParamsError(f"theorem schedules need T >= 2, got {T}")
    if not R > 0:
        raise ParamsError(f"diameter R must be positive, got {R}")

    eta = 1.0 / (R * T ** d.eta_exp)
    if d.beta2_exp is None:
        if not 0.0 <= beta < 1.0:
            raise ParamsError(f"cor4 needs a fixed beta in [0, 1), got {beta}")
        beta2 = beta
    else:
        beta2 = 1.0 - T ** (-d.beta2_exp)

    if d.beta1_interval is None:
        if beta1 is not None:
            raise ParamsError(f"schedule '{name}' fixes beta1 = beta2; no beta1 override allowed")
        b1 = beta2
    else:
        lo, hi = d.beta1_interval
        if beta1 is None:
            b1 = 1.0 - T ** (-(lo + hi) / 2)
        else:
            gap = 1.0 - beta1
            if not T ** (-lo) <= gap <= T ** (-hi):
                raise ParamsError(f"beta1 override {beta1} puts 1-beta1 = {gap} outside "
                                  f"[{T ** (-lo):.6g}, {T ** (-hi):.6g}] for schedule '{name}'")
            b1 = beta1

    if d.method is MethodClass.STOCHASTIC_LMO:
        return UnifiedParams.stochastic_lmo(eta, beta1=b1, beta2=beta2, lam=lam)
    if d.method is MethodClass.VARIANCE_REDUCED:
        return UnifiedParams.variance_reduced(eta, beta1=b1, beta2=beta2,
                                              alpha1=b1, alpha2=beta2, lam=lam)
    return UnifiedParams.igt(eta, beta1=b1, beta2=beta2, lam=lam)


def theorem_schedule(
    method: MethodClass | str,
    T: int,
    R: float,
    sigma_positive: bool,
    lam: float = 0.0,
    beta1: float | None = None,
) -> UnifiedParams:
    return schedule_by_name(directive_for(method, sigma_positive), T, R, lam=lam, beta1=beta1)


def constant_schedule(params: UnifiedParams) -> Schedule:
    """Per-step schedule callback returning the same parameters at every t."""
    def schedule(t: int) -> UnifiedParams:
        return params
    return schedule
