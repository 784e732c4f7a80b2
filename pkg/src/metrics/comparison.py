"""
comparison.py — Side-by-side table of method classes on one problem

One row per configuration: mean / std over seeds of the average RSF and of
the final loss, gradient evaluations per run, and measured wall time. The
wall time is reported as measured; no ratio between classes is asserted.
"""

import logging

import numpy as np
import pandas as pd

from src.runner import RunConfig, RunTrace, run_seeds

logger = logging.getLogger(__name__)

COMPARISON_COLUMNS = [
    "method", "schedule", "seeds", "T",
    "avg_rsf_mean", "avg_rsf_std", "final_loss_mean", "final_loss_std",
    "grad_evals", "wall_s_mean",
]


def _std(x: np.ndarray) -> float:
    return float(x.std(ddof=1)) if x.size > 1 else 0.0


def summarize_traces(traces: list[RunTrace]) -> dict:
    config = traces[0].config
    avg = np.array([tr.avg_rsf for tr in traces])
    final = np.array([tr.final_loss for tr in traces])
    evals = {tr.grad_evals for tr in traces}
    if len(evals) != 1:
        raise RuntimeError(f"gradient-evaluation counts differ across seeds: {sorted(evals)}")
    return {
        "method": config.method.value,
        "schedule": config.schedule or "explicit",
        "seeds": len(traces),
        "T": config.T,
        "avg_rsf_mean": float(avg.mean()),
        "avg_rsf_std": _std(avg),
        "final_loss_mean": float(final.mean()),
        "final_loss_std": _std(final),
        "grad_evals": evals.pop(),
        "wall_s_mean": float(np.mean([tr.elapsed_ns for tr in traces])) / 1e9,
    }


def compare(configs: list[RunConfig]) -> pd.DataFrame:
    """
    Run every configuration and tabulate.

    Args:
        configs : configurations sharing problem, problem parameters and T

    Returns:
        DataFrame with COMPARISON_COLUMNS, one row per configuration.
    """
    if not configs:
        raise ValueError("compare needs at least one configuration")
    ref = configs[0]
    for c in configs[1:]:
        if (c.problem, c.problem_params, c.T) != (ref.problem, ref.problem_params, ref.T):
            raise ValueError(f"compare needs a shared problem and T; got {c.problem} T={c.T} "
                             f"vs {ref.problem} T={ref.T}")

    rows = []
    for c in configs:
        logger.info(f"compare: {c.method.value} ({c.schedule or 'explicit'}) x {c.seeds} seeds")
        rows.append(summarize_traces(run_seeds(c)))
    return pd.DataFrame(rows, columns=COMPARISON_COLUMNS)
