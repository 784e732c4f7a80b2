"""
bounds.py — Right-hand sides of the RSF convergence theorems

All three bounds share

    Delta_F / (T eta)
    + R sigma ((1 - b1) + b1 sqrt(1 - b2) + b1 / (T (1 - b2)) + 1/T)

and differ in the drift term:

    stochastic_lmo    L R^2 eta (b1/(1-b2) + 1/2)
    variance_reduced  L R^2 eta (|b1-a1| + b1|b2-a2|/(1-b2) + |a1| + b1|a2|/sqrt(1-b2) + 1/2)
    igt               L R^2 eta ((b2-b1)/(1-b2) + 1/2)
                      + rho R^3 eta^2 (b1/(1-b2) + b2^2/(1-b2)^2)

eta is the w-step eta2. Every term is kept, including the finite-T ones.
"""

import math
from dataclasses import dataclass

from src.optimizer import MethodClass, UnifiedParams
from src.problems.base import ProblemConstants


@dataclass(frozen=True)
class BoundTerms:
    optimization: float
    noise: float
    drift: float
    curvature: float

    @property
    def total(self) -> float:
        return self.optimization + self.noise + self.drift + self.curvature

    def to_dict(self) -> dict:
        return {
            "optimization": self.optimization,
            "noise": self.noise,
            "drift": self.drift,
            "curvature": self.curvature,
            "total": self.total,
        }


def theorem_bound_terms(
    method: MethodClass | str,
    constants: ProblemConstants,
    R: float,
    T: int,
    params: UnifiedParams,
) -> BoundTerms:
    """Term-by-term evaluation of the theorem matching ``method``."""
    method = MethodClass(method)
    method.check(params)
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    if R <= 0:
        raise ValueError(f"R must be positive, got {R}")

    eta = params.eta2
    b1, b2 = params.beta1, params.beta2
    a1, a2 = params.alpha1, params.alpha2
    L, rho, sigma = constants.L, constants.rho, constants.sigma

    optimization = constants.delta_F / (T * eta)
    noise = R * sigma * ((1 - b1) + b1 * math.sqrt(1 - b2) + b1 / (T * (1 - b2)) + 1 / T)

    curvature = 0.0
    if method is MethodClass.STOCHASTIC_LMO:
        drift_coef = b1 / (1 - b2) + 0.5
    elif method is MethodClass.VARIANCE_REDUCED:
        drift_coef = (abs(b1 - a1) + b1 * abs(b2 - a2) / (1 - b2)
                      + abs(a1) + b1 * abs(a2) / math.sqrt(1 - b2) + 0.5)
    else:
        drift_coef = (b2 - b1) / (1 - b2) + 0.5
        curvature = rho * R ** 3 * eta ** 2 * (b1 / (1 - b2) + b2 ** 2 / (1 - b2) ** 2)

    return BoundTerms(optimization=optimization, noise=noise,
                      drift=L * R ** 2 * eta * drift_coef, curvature=curvature)


def theorem_bound(
    method: MethodClass | str,
    constants: ProblemConstants,
    R: float,
    T: int,
    params: UnifiedParams,
) -> float:
    """
    Upper bound on (1/T) sum_{t<T} E[Psi_{C,lam}(w_t)].

    Args:
        method    : class whose theorem applies (params must satisfy its constraints)
        constants : L, rho, sigma, Delta_F of the problem
        R         : Euclidean diameter of C
        T         : horizon
        params    : constant hyperparameters used for every step

    Returns:
        The evaluated right-hand side.
    """
    return theorem_bound_terms(method, constants, R, T, params).total
