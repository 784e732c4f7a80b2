"""
config.py — Stochastic LMO lab: machine-level configuration (env-var overridable)

Experiment settings live in the JSON config document (see configdoc.py);
this module only carries knobs that belong to the machine running them.
"""

import os
from dataclasses import dataclass


def _float(env, default): return float(os.environ.get(env, default))
def _int(env, default):   return int(os.environ.get(env, default))
def _str(env, default):   return os.environ.get(env, default)
def _bool(env, default):  return os.environ.get(env, str(int(default))).lower() in ("1", "true", "yes")


@dataclass
class Config:
    # ── Output / logging ──────────────────────────────────────────────────
    output_dir: str = _str("LMO_OUTPUT_DIR", "runs")
    """Default directory for trace.csv / summary.json when --out is omitted."""

    log_level: str = _str("LMO_LOG_LEVEL", "INFO")

    record_wall_time: bool = _bool("LMO_RECORD_WALL_TIME", False)
    """Fill the wall_ns trace column. Off by default so traces are byte-reproducible."""

    # ── Execution ─────────────────────────────────────────────────────────
    workers: int = _int("LMO_WORKERS", 1)
    """Thread workers used to run seeds in parallel."""

    # ── Oracles ───────────────────────────────────────────────────────────
    svd_zero_tol: float = _float("LMO_SVD_ZERO_TOL", 1e-12)
    """Singular values <= tol * max(S) contribute nothing to -UV^T."""

    ns_iterations: int = _int("LMO_NS_ITERATIONS", 5)
    ns_polish_iterations: int = _int("LMO_NS_POLISH_ITERATIONS", 6)

    feasibility_tol: float = _float("LMO_FEASIBILITY_TOL", 1e-9)
    """Relative slack when testing lambda * w in C."""

    # ── Certification ─────────────────────────────────────────────────────
    cert_slack: float = _float("LMO_CERT_SLACK", 0.05)
    """Relative slack for stochastic (sigma > 0) certificates."""

    det_abs_tol: float = _float("LMO_DET_ABS_TOL", 1e-9)
    """Absolute tolerance for deterministic (sigma = 0) certificates."""


cfg = Config()
