"""
certificate.py — Empirical check of a run family against its theorem bound

The theorems bound an expectation over the sample sequence, so a certificate
averages (1/T) sum_{t<T} Psi(w_t) over seeds:

    sigma > 0 :  pass  iff  mean <= bound (1 + slack)          default slack 5%
    sigma = 0 :  pass  iff  mean <= bound + det_abs_tol        zero relative slack

A one-sided 95% normal-approximation upper limit on the mean is reported
alongside, for information only.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from src.config import cfg
from src.metrics.bounds import theorem_bound_terms
from src.runner import RunConfig, RunTrace, run_seeds

logger = logging.getLogger(__name__)

MIN_STOCHASTIC_SEEDS = 10
_Z_95 = 1.6448536269514722


@dataclass(frozen=True)
class TheoremCertificate:
    method: str
    schedule: str | None
    T: int
    seeds: int
    R: float
    params: dict
    constants: dict
    bound_terms: dict
    bound_value: float
    empirical_mean: float
    empirical_std: float
    upper_95: float
    slack: float
    abs_tol: float
    sigma_estimated: bool
    passed: bool

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "schedule": self.schedule,
            "T": self.T,
            "seeds": self.seeds,
            "R": self.R,
            "params": self.params,
            "constants": self.constants,
            "bound_terms": self.bound_terms,
            "bound_value": self.bound_value,
            "empirical_mean": self.empirical_mean,
            "empirical_std": self.empirical_std,
            "upper_95": self.upper_95,
            "slack": self.slack,
            "abs_tol": self.abs_tol,
            "sigma_estimated": self.sigma_estimated,
            "pass": self.passed,
        }


def certificate_from_traces(traces: list[RunTrace], slack: float | None = None) -> TheoremCertificate:
    """Certify already-computed runs of one configuration (one trace per seed)."""
    if not traces:
        raise ValueError("certificate needs at least one run")
    first = traces[0]
    config, constants = first.config, first.constants
    deterministic = constants.sigma == 0.0

    if deterministic:
        slack_used, abs_tol = 0.0, cfg.det_abs_tol
    else:
        slack_used = cfg.cert_slack if slack is None else slack
        abs_tol = 0.0
        if len(traces) < MIN_STOCHASTIC_SEEDS:
            logger.warning(f"stochastic certificate from {len(traces)} seeds "
                           f"(< {MIN_STOCHASTIC_SEEDS}); the seed mean is a rough estimate")
    if constants.sigma_estimated:
        logger.warning("certificate uses an estimated sigma; verdict is estimated-sigma only")

    terms = theorem_bound_terms(config.method, constants, first.R, config.T, first.params)
    avg = np.array([tr.avg_rsf for tr in traces])
    mean = float(avg.mean())
    std = float(avg.std(ddof=1)) if avg.size > 1 else 0.0
    upper = mean + _Z_95 * std / math.sqrt(avg.size)
    bound = terms.total
    passed = mean <= bound * (1.0 + slack_used) + abs_tol

    logger.info(f"certificate {config.method.value}/{config.schedule or 'explicit'} T={config.T} "
                f"seeds={avg.size}: mean={mean:.6g} bound={bound:.6g} -> {'PASS' if passed else 'FAIL'}")
    return TheoremCertificate(
        method=config.method.value,
        schedule=config.schedule,
        T=config.T,
        seeds=int(avg.size),
        R=first.R,
        params=first.params.to_dict(),
        constants={"L": constants.L, "rho": constants.rho, "sigma": constants.sigma,
                   "F_star": constants.F_star, "delta_F": constants.delta_F},
        bound_terms=terms.to_dict(),
        bound_value=bound,
        empirical_mean=mean,
        empirical_std=std,
        upper_95=upper,
        slack=slack_used,
        abs_tol=abs_tol,
        sigma_estimated=constants.sigma_estimated,
        passed=bool(passed),
    )


def certify(config: RunConfig, slack: float | None = None) -> TheoremCertificate:
    """Run every seed of ``config`` and compare the seed-mean average RSF with the bound."""
    return certificate_from_traces(run_seeds(config), slack=slack)
