"""
pipeline.py — Command-line entry point for stochastic LMO experiments

Usage:
    python src/pipeline.py run      --config exp.json [--out DIR] [--seeds N]
    python src/pipeline.py sweep    --config sweep.json [--out DIR] [--seeds N]
    python src/pipeline.py certify  --config exp.json [--out DIR] [--seeds N]
    python src/pipeline.py verify   [--out DIR] [--inject-step-fault FACTOR]
    python src/pipeline.py reference

Outputs:
    run      trace.csv (first seed), summary.json
    sweep    summary_<method>_T<T>.json per point, comparison.csv, ratefit.json
    certify  certificate.json, summary.json
    verify   verify_report.json

Exit codes: 0 success / pass, 1 runtime failure or failed check, 2 configuration error.
"""

import argparse
import logging
import sys
from pathlib import Path

import pandas as pd

sys.path.insert(0, str(Path(__file__).parent.parent))

logger = logging.getLogger("lmo-pipeline")

from src.config import cfg
from src.configdoc import ConfigDocument, load_config, reference
from src.errors import ConfigError, ParamsError
from src.metrics.certificate import certificate_from_traces
from src.metrics.comparison import COMPARISON_COLUMNS, summarize_traces
from src.metrics.lemmas import verify_suite
from src.metrics.ratefit import rate_fit
from src.publish import summary_record, write_json, write_trace
from src.runner import run_seeds

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _out_dir(args, doc: ConfigDocument | None = None) -> Path:
    if args.out:
        return Path(args.out)
    if doc is not None and doc.output_dir:
        return Path(doc.output_dir)
    return Path(cfg.output_dir)


def cmd_run(args) -> int:
    doc = load_config(args.config)
    method, T = doc.single()
    config = doc.run_config(method, T, seeds=args.seeds)
    out = _out_dir(args, doc)
    logger.info(f"=== run {doc.problem} / {method.label}  T={T} seeds={config.seeds} ===")

    traces = run_seeds(config)
    write_trace(out, traces[0])
    write_json(out, "summary.json", summary_record(doc.echo(), traces))
    logger.info(f"=== run complete — avg_rsf={traces[0].avg_rsf:.6g} (seed {traces[0].seed}) ===")
    return EXIT_OK


def cmd_sweep(args) -> int:
    doc = load_config(args.config)
    if len(set(doc.horizons)) < 2:
        raise ConfigError(f"sweep needs at least two distinct horizons, got {doc.horizons}", field="run.T")
    out = _out_dir(args, doc)
    logger.info(f"=== sweep {doc.problem}  methods={[m.label for m in doc.methods]} T={doc.horizons} ===")

    rows, fits = [], []
    for method in doc.methods:
        points = []
        for T in doc.horizons:
            config = doc.run_config(method, T, seeds=args.seeds)
            traces = run_seeds(config)
            write_json(out, f"summary_{method.label}_T{T}.json", summary_record(doc.echo(), traces))
            row = summarize_traces(traces)
            rows.append(row)
            points.append((T, row["avg_rsf_mean"]))
            logger.info(f"  {method.label} T={T}: avg_rsf={row['avg_rsf_mean']:.6g}")
        fit = rate_fit(points)
        logger.info(f"  {method.label}: slope={fit.slope:.4f} r2={fit.r2:.4f}")
        fits.append({"method": method.method.value, "schedule": method.schedule, "label": method.label,
                     **fit.to_dict()})

    table = pd.DataFrame(rows, columns=COMPARISON_COLUMNS).drop(columns=["wall_s_mean"])
    out.mkdir(parents=True, exist_ok=True)
    table.to_csv(out / "comparison.csv", index=False, float_format="%.17g", lineterminator="\n")
    write_json(out, "ratefit.json", {"problem": doc.problem, "fits": fits})
    return EXIT_OK


def cmd_certify(args) -> int:
    doc = load_config(args.config)
    method, T = doc.single()
    if method.schedule is None:
        raise ConfigError("certify needs a theorem schedule, not explicit params", field="method.schedule")
    config = doc.run_config(method, T, seeds=args.seeds)
    out = _out_dir(args, doc)
    logger.info(f"=== certify {doc.problem} / {method.label}  T={T} seeds={config.seeds} ===")

    traces = run_seeds(config)
    cert = certificate_from_traces(traces)
    write_json(out, "certificate.json", cert.to_dict())
    write_json(out, "summary.json", summary_record(doc.echo(), traces, certificate=cert.to_dict()))
    return EXIT_OK if cert.passed else EXIT_FAIL


def cmd_verify(args) -> int:
    out = _out_dir(args)
    logger.info(f"=== verify  step_fault={args.inject_step_fault} ===")
    report = verify_suite(step_fault=args.inject_step_fault, martingale_seeds=args.martingale_seeds)
    write_json(out, "verify_report.json", report.to_dict())
    failed = [c for c in report.checks if not c.passed]
    logger.info(f"=== verify complete — {len(report.checks) - len(failed)}/{len(report.checks)} checks passed ===")
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_reference(args) -> int:
    print(reference())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lmo-pipeline", description="Stochastic LMO experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, fn, needs_config in (("run", cmd_run, True), ("sweep", cmd_sweep, True),
                                   ("certify", cmd_certify, True), ("verify", cmd_verify, False)):
        p = sub.add_parser(name)
        if needs_config:
            p.add_argument("--config", required=True, help="JSON config document")
            p.add_argument("--seeds", type=int, default=None, help="override run.seeds")
        p.add_argument("--out", default=None, help="output directory")
        p.set_defaults(func=fn)

    verify = sub.choices["verify"]
    verify.add_argument("--inject-step-fault", type=float, default=1.0,
                        help="multiply executed step sizes (fault injection; 1.0 = none)")
    verify.add_argument("--martingale-seeds", type=int, default=200)

    sub.add_parser("reference", help="print the config reference").set_defaults(func=cmd_reference)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=cfg.log_level,
                        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    if getattr(args, "seeds", None) is not None and args.seeds < 1:
        logger.error(f"--seeds must be >= 1, got {args.seeds}")
        return EXIT_CONFIG
    try:
        return args.func(args)
    except (ConfigError, ParamsError) as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except Exception as e:
        logger.error(f"{args.command} failed: {type(e).__name__}: {e}")
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
