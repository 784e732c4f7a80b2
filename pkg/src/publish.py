"""publish.py — Write traces, summaries, certificates and reports to disk."""

import json
import logging
import platform
from pathlib import Path

import numpy as np
import pandas as pd

import src
from src.runner import RunTrace

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


def _root(out_dir: str | Path) -> Path:
    p = Path(out_dir)
    p.mkdir(parents=True, exist_ok=True)
    return p


def dumps(payload: dict) -> str:
    """Deterministic JSON text: sorted keys, 2-space indent, trailing newline."""
    return json.dumps({"schema_version": SCHEMA_VERSION, **payload},
                      indent=2, sort_keys=True, ensure_ascii=False, allow_nan=False) + "\n"


def _write(payload: dict, path: Path) -> None:
    path.write_text(dumps(payload), encoding="utf-8", newline="\n")
    logger.info(f"Published {path}")


def write_json(out_dir: str | Path, name: str, payload: dict) -> Path:
    path = _root(out_dir) / name
    _write(payload, path)
    return path


def trace_csv(trace: RunTrace) -> str:
    """CSV text of the recorded rows: 17 significant digits, '\\n' line ends, empty eps_hat at t = T."""
    return trace.to_frame().to_csv(index=False, float_format="%.17g", lineterminator="\n", na_rep="")


def write_trace(out_dir: str | Path, trace: RunTrace, name: str = "trace.csv") -> Path:
    path = _root(out_dir) / name
    path.write_text(trace_csv(trace), encoding="utf-8", newline="\n")
    logger.info(f"Published {path}")
    return path


def provenance() -> dict:
    return {
        "package": src.__version__,
        "numpy": np.__version__,
        "pandas": pd.__version__,
        "python": platform.python_version(),
    }


def _mean_std(values: list[float]) -> dict:
    arr = np.asarray(values, dtype=np.float64)
    return {"mean": float(arr.mean()), "std": float(arr.std(ddof=1)) if arr.size > 1 else 0.0}


def summary_record(config_echo: dict, traces: list[RunTrace], certificate: dict | None = None) -> dict:
    """
    Summary of one (method, T) run family over its seeds.

    Args:
        config_echo : normalized config the runs came from
        traces      : one RunTrace per seed, ordered by seed
        certificate : TheoremCertificate.to_dict(), when certification was requested

    Returns:
        Dict ready for write_json.
    """
    first = traces[0]
    record = {
        "config": config_echo,
        "resolved_params": first.params.to_dict(),
        "constants": {"L": first.constants.L, "rho": first.constants.rho,
                      "sigma": first.constants.sigma, "sigma_estimated": first.constants.sigma_estimated,
                      "F_star": first.constants.F_star, "delta_F": first.constants.delta_F},
        "R": first.R,
        "T": first.config.T,
        "seeds": [tr.seed for tr in traces],
        "avg_rsf": _mean_std([tr.avg_rsf for tr in traces]),
        "final_loss": _mean_std([tr.final_loss for tr in traces]),
        "grad_evals": first.grad_evals,
        "versions": provenance(),
    }
    if certificate is not None:
        record["certificate"] = certificate
    return record
