"""
runner.py — Experiment runner and trace recorder

A run builds a fresh oracle, resolves the hyperparameters (explicit or a
named theorem schedule), executes T steps of the method's step function and
records, at t = 0, stride, 2 stride, ... and t = T:

    step, loss, grad_norm, rsf, step_norm, eps_hat, grad_evals, wall_ns

rsf is Psi_{C,lam}(w_t) from the exact gradient. eps_hat is ||g_t - grad F(w_t)||
of the step taken from w_t (empty at t = T). grad_evals counts the stochastic
gradients spent before w_t existed (1 at t = 0 for the initial momentum).
Psi is kept for every t so the average over t = 0..T-1 is exact at any stride.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from src.config import cfg
from src.errors import ParamsError, RunError
from src.linalg import ParamValue, norm
from src.lmo import LmoSet, euclidean_diameter, rsf
from src.optimizer import STEP_FUNCTIONS, MethodClass, UnifiedParams, init_state
from src.problems import build_problem
from src.problems.base import ProblemConstants, StochasticOracle
from src.schedules import schedule_by_name, schedule_method

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ["step", "loss", "grad_norm", "rsf", "step_norm", "eps_hat", "grad_evals", "wall_ns"]


@dataclass(frozen=True)
class RunConfig:
    problem: str
    method: MethodClass
    lmo_set: LmoSet
    T: int
    problem_params: dict = field(default_factory=dict)
    params: UnifiedParams | None = None
    schedule: str | None = None
    """Theorem schedule name (thm1, cor1, cor2, cor3, cor4); exclusive with params."""
    schedule_options: dict = field(default_factory=dict)
    """Extra schedule_by_name keywords: beta1 override, fixed beta of cor4."""
    lam: float = 0.0
    """Weight decay applied when the parameters come from a schedule."""
    seed: int = 0
    seeds: int = 1
    stride: int = 1
    store_iterates: bool = False

    def __post_init__(self):
        object.__setattr__(self, "method", MethodClass(self.method))
        if self.T < 1:
            raise ParamsError(f"T must be >= 1, got {self.T}")
        if self.stride < 1:
            raise ParamsError(f"stride must be >= 1, got {self.stride}")
        if self.seeds < 1:
            raise ParamsError(f"seeds must be >= 1, got {self.seeds}")
        if (self.params is None) == (self.schedule is None):
            raise ParamsError("exactly one of params and schedule must be given")
        if self.schedule is not None and schedule_method(self.schedule) is not self.method:
            raise ParamsError(f"schedule '{self.schedule}' belongs to "
                              f"{schedule_method(self.schedule).value}, not {self.method.value}")
        if self.params is not None:
            self.method.check(self.params)

    def build_oracle(self) -> StochasticOracle:
        return build_problem(self.problem, dict(self.problem_params))

    def resolve_params(self, oracle: StochasticOracle) -> UnifiedParams:
        if self.params is not None:
            return self.params
        R = euclidean_diameter(self.lmo_set, oracle.w0.shape)
        return schedule_by_name(self.schedule, self.T, R, lam=self.lam, **self.schedule_options)


@dataclass(frozen=True)
class TraceRow:
    step: int
    loss: float
    grad_norm: float
    rsf: float
    step_norm: float
    eps_hat: float | None
    grad_evals: int
    wall_ns: int


@dataclass
class RunTrace:
    config: RunConfig
    seed: int
    params: UnifiedParams
    constants: ProblemConstants
    R: float
    rows: list[TraceRow]
    rsf_values: np.ndarray
    """Psi(w_t) for t = 0..T."""
    grad_evals: int
    final_loss: float
    iterates: dict[int, ParamValue] | None = None
    elapsed_ns: int = 0

    @property
    def avg_rsf(self) -> float:
        """(1/T) sum_{t=0}^{T-1} Psi(w_t)."""
        return float(np.mean(self.rsf_values[:-1]))

    def to_frame(self) -> pd.DataFrame:
        df = pd.DataFrame([r.__dict__ for r in self.rows], columns=TRACE_COLUMNS)
        return df.astype({"step": "int64", "eps_hat": "float64", "grad_evals": "int64", "wall_ns": "int64"})


def run(config: RunConfig, seed: int | None = None) -> RunTrace:
    """
    Execute one run.

    Args:
        config : run configuration
        seed   : sample-stream seed; defaults to config.seed

    Returns:
        RunTrace with the recorded rows and Psi at every t.
    """
    seed = config.seed if seed is None else seed
    oracle = config.build_oracle()
    params = config.resolve_params(oracle)
    lmo_set, lam = config.lmo_set, params.lam
    R = euclidean_diameter(lmo_set, oracle.w0.shape)
    step_fn = STEP_FUNCTIONS[config.method]
    T, stride = config.T, config.stride
    logger.debug(f"run {oracle.name}/{config.method.value} seed={seed} T={T} params={params.to_dict()}")

    started = time.perf_counter_ns()
    psi = np.empty(T + 1)
    rows: list[TraceRow] = []
    iterates: dict[int, ParamValue] | None = {} if config.store_iterates else None

    t = 0
    try:
        state = init_state(oracle.w0, oracle, seed)
        if lam > 0 and not lmo_set.contains(lam * state.w):
            logger.warning("w0 is outside P = C/lambda; rsf is evaluated off P")
        step_norm = 0.0
        for t in range(T + 1):
            w = state.w
            grad_F = oracle.full_grad(w)
            psi[t] = rsf(lmo_set, lam, w, grad_F, warn_off_p=False).value
            record = t % stride == 0 or t == T
            loss, evals_before = (oracle.loss(w) if record else 0.0), oracle.grad_evals
            eps = None
            if t < T:
                state, diag = step_fn(state, params, lmo_set, oracle, grad_F_w=grad_F)
                eps = diag.epsilon_hat_norm
            if record:
                wall = time.perf_counter_ns() - started if cfg.record_wall_time else 0
                rows.append(TraceRow(step=t, loss=loss, grad_norm=norm(grad_F), rsf=float(psi[t]),
                                     step_norm=step_norm, eps_hat=eps,
                                     grad_evals=evals_before, wall_ns=wall))
                if iterates is not None:
                    iterates[t] = w.copy()
            if t < T:
                step_norm = norm(state.w - w)
    except Exception as e:
        raise RunError(t, e) from e

    final_loss = oracle.loss(state.w)
    elapsed = time.perf_counter_ns() - started
    logger.debug(f"run seed={seed} done: avg_rsf={float(np.mean(psi[:-1])):.6g} final_loss={final_loss:.6g}")
    return RunTrace(config=config, seed=seed, params=params, constants=oracle.constants, R=R,
                    rows=rows, rsf_values=psi, grad_evals=oracle.grad_evals,
                    final_loss=final_loss, iterates=iterates, elapsed_ns=elapsed)


def run_seeds(config: RunConfig, workers: int | None = None) -> list[RunTrace]:
    """Run seeds config.seed .. config.seed + seeds - 1, each on its own oracle; ordered by seed."""
    seeds = [config.seed + k for k in range(config.seeds)]
    workers = cfg.workers if workers is None else workers
    if workers <= 1 or len(seeds) == 1:
        return [run(config, s) for s in seeds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda s: run(config, s), seeds))
