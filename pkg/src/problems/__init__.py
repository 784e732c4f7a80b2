"""
Synthetic stochastic problems with exact gradients and known constants.

``build_problem(name, params)`` is the registry used by the config layer.
"""

from src.problems.base import ProblemConstants, StochasticOracle
from src.problems.logistic import LogisticFiniteSum, SigmaMode, make_logistic_finite_sum
from src.problems.matrix import MatrixQuadratic, make_matrix_quadratic
from src.problems.nonconvex import NonconvexSmooth, make_nonconvex_smooth
from src.problems.quadratic import NoiseModel, NoisyQuadratic, make_noisy_quadratic
from src.problems.sampling import SampleId, SampleStream, sample_stream

PROBLEMS = {
    "noisy_quadratic": make_noisy_quadratic,
    "nonconvex_smooth": make_nonconvex_smooth,
    "matrix_quadratic": make_matrix_quadratic,
    "logistic_finite_sum": make_logistic_finite_sum,
}


def build_problem(name: str, params: dict) -> StochasticOracle:
    """Construct a fresh oracle (with its own evaluation counter) by name."""
    try:
        factory = PROBLEMS[name]
    except KeyError:
        raise ValueError(f"unknown problem '{name}'; expected one of {sorted(PROBLEMS)}") from None
    return factory(**params)


__all__ = [
    "PROBLEMS", "build_problem",
    "ProblemConstants", "StochasticOracle", "SampleId", "SampleStream", "sample_stream",
    "NoisyQuadratic", "NoiseModel", "make_noisy_quadratic",
    "NonconvexSmooth", "make_nonconvex_smooth",
    "MatrixQuadratic", "make_matrix_quadratic",
    "LogisticFiniteSum", "SigmaMode", "make_logistic_finite_sum",
]
