"""Command-line front end.

    enrichfix certify --config problem.yaml --out results/
    enrichfix solve   --config problem.yaml --out results/ [--lambda 0.4]
    enrichfix atlas   [--config problem.yaml] --out results/
    enrichfix bench   --suite paper-examples --out results/
    enrichfix verify  results/certificate.txt --config problem.yaml

Exit codes: 0 pass / converged, 2 certificate failure or divergence (the
report is still written), 1 configuration or input error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from .atlas import classify, diagram_check
from .certify import C, certificate_from_dict, certify, optimize_banach_certificate, recheck
from .config import ProblemConfig, load_config
from .errors import CertificateError, DivergenceError, InputError
from .mappings import PresicWeights
from .reports import read_report, write_report
from .solver import (convex_metric_solve, cyclic_solve, krasnoselskij_solve, maia_solve, presic_solve,
                     solve_with_certificate)

EXIT_OK, EXIT_CONFIG, EXIT_FAIL = 0, 1, 2


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="enrichfix", description="Certify and solve enriched contractions.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="problem file (YAML)")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory")
    common.add_argument("--seed", type=_u64, help="override the sampling seed")
    common.add_argument("--samples", type=_positive, help="override the sample count")
    common.add_argument("--lambda", dest="lam", type=float, help="override the averaging weight")
    common.add_argument("--suite", help="benchmark suite id")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("certify", parents=[common], help="sample a contraction condition")
    sub.add_parser("solve", parents=[common], help="run the averaged iteration and emit a trace")
    sub.add_parser("atlas", parents=[common], help="classify a mapping, or check the class diagram")
    sub.add_parser("bench", parents=[common], help=f"run a built-in suite ({', '.join(bench_mod.SUITES)})")
    v = sub.add_parser("verify", parents=[common], help="re-check a stored certificate without resampling")
    v.add_argument("certificate", type=Path)
    return parser


def _load(args) -> ProblemConfig:
    if args.config is None:
        raise InputError(f"{args.command} needs --config")
    cfg = load_config(args.config)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.samples is not None:
        changes["n_samples"] = args.samples
    if changes:
        cfg.plan = cfg.plan.replace(**changes)
    return cfg


def _certificate(cfg: ProblemConfig):
    if cfg.class_id is None:
        raise InputError("task.class is required")
    if cfg.constants is None and cfg.class_id in (C.ENRICHED_BANACH, C.QUASI_BANACH_ENRICHED):
        return optimize_banach_certificate(cfg.mapping, cfg.space, cfg.b_grid, cfg.plan, cfg.class_id)
    return certify(cfg.class_id, cfg.mapping, cfg.space, cfg.constants, cfg.plan, cfg.fix_set)


def _summary(cert) -> str:
    status = "PASS" if cert.passed else "FAIL"
    line = f"{cert.class_id.value} {status} samples={cert.n_samples} seed={cert.seed} min_margin={cert.min_margin:.6g}"
    if cert.factor is not None:
        line += f" factor={cert.factor:.6g}"
    if cert.witness is not None:
        line += f" witness={cert.witness}"
    return line


def cmd_certify(args) -> int:
    cfg = _load(args)
    cert = _certificate(cfg)
    path = write_report(args.out / "certificate.txt", cert.to_dict())
    print(_summary(cert))
    print(f"wrote {path}")
    return EXIT_OK if cert.passed else EXIT_FAIL


def _run_solver(cfg: ProblemConfig, lam_override):
    T, space, m = cfg.mapping, cfg.space, cfg.method
    if cfg.x0 is None:
        raise InputError("task.solve.x0 is required")
    scfg = cfg.solve
    if lam_override is not None:
        scfg = type(scfg)(scfg.max_iter, scfg.tol, lam_override, scfg.stop, scfg.divergence_window)
    cert = None
    if cfg.class_id is not None and m != "cyclic":
        cert = _certificate(cfg)
        if not cert.passed:
            raise CertificateError(_summary(cert))
    if m == "krasnoselskij":
        if cert is not None:
            return cert, *solve_with_certificate(cert, T, cfg.x0, scfg, space)
        if scfg.lam is None:
            raise InputError("give task.class (to certify) or a lambda")
        return None, *krasnoselskij_solve(T, scfg.lam, cfg.x0, scfg, space.norm)
    if m == "convex-metric":
        lam = scfg.lam if scfg.lam is not None else (cert.lam if cert is not None else None)
        if lam is None:
            raise InputError("convex-metric solve needs a lambda or a CONVEX_METRIC_ENRICHED class")
        return cert, *convex_metric_solve(T, space.structure, space.dist, lam, cfg.x0, scfg, cert, space.region,
                                          cfg.plan)
    if m == "maia":
        return cert, *maia_solve(T, space.norm, space.dist, scfg.lam, cfg.x0, scfg, cert, space.region, cfg.plan)
    if m == "cyclic":
        if cfg.class_id != C.CYCLIC_ENRICHED_PHI or cfg.constants is None or cfg.ccert is None:
            raise InputError("cyclic solve needs class CYCLIC_ENRICHED_PHI with constants and a ccert block")
        return None, *cyclic_solve(T, space.region, cfg.constants["phi"], cfg.ccert, cfg.constants["b"], cfg.x0,
                                   scfg, space.norm, cfg.plan)
    if cert is None:
        raise InputError("Presic solve needs class ENRICHED_PRESIC")
    weights = PresicWeights(cfg.weights) if cfg.weights is not None else None
    method = "diagonal" if m == "presic-diagonal" else "k-step"
    return cert, *presic_solve(T, cert, cfg.x0, scfg, method, weights, space.norm)


def cmd_solve(args) -> int:
    cfg = _load(args)
    out = args.out
    try:
        cert, report, trace = _run_solver(cfg, args.lam)
    except CertificateError as exc:
        write_report(out / "solve_report.txt", {"converged": False, "error": str(exc)})
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except DivergenceError as exc:
        if exc.trace is not None:
            (out / "trace.csv").write_text(exc.trace.to_csv())
        write_report(out / "solve_report.txt", {"converged": False, "error": str(exc)})
        print(f"diverged: {exc}", file=sys.stderr)
        return EXIT_FAIL
    out.mkdir(parents=True, exist_ok=True)
    (out / "trace.csv").write_text(trace.to_csv())
    body = {"report": report.to_dict()}
    if cert is not None:
        body["certificate"] = cert.to_dict()
    write_report(out / "solve_report.txt", body)
    state = "converged" if report.converged else "not converged"
    print(f"{state} after {report.iterations} iterations: x = {np.asarray(report.final_point).tolist()} "
          f"residual={report.final_residual:.3g} bound_violations={report.bound_violations}")
    return EXIT_OK if report.converged and report.bound_violations == 0 else EXIT_FAIL


def cmd_atlas(args) -> int:
    if args.config is None:
        plan = bench_mod._plan(args.seed or 0, args.samples)
        result = diagram_check(plan)
        write_report(args.out / "atlas.txt", result)
        print(f"diagram {'PASS' if result['passed'] else 'FAIL'}; separations: "
              + ", ".join(f"{k}={v}" for k, v in result["separations"].items()))
        return EXIT_OK if result["passed"] else EXIT_FAIL
    cfg = _load(args)
    rep = classify(cfg.mapping, cfg.space, cfg.fix_set, cfg.plan, cfg.b_grid)
    write_report(args.out / "membership.txt", rep.to_dict())
    for name, v in rep.verdicts.items():
        extra = "" if v.constant is None else f" ({'b' if name == 'ENE' else 'k'}={v.constant:.6g})"
        print(f"{name:4s} {v.status}{extra}")
    return EXIT_OK


def cmd_bench(args) -> int:
    suite = args.suite or "paper-examples"
    results = bench_mod.run_suite(suite, args.seed or 0, args.samples)
    write_report(args.out / f"bench_{suite}.txt", {"suite": suite, "seed": args.seed or 0,
                                                  "cases": [r.to_dict() for r in results]})
    print(bench_mod.format_table(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def cmd_verify(args) -> int:
    cfg = _load(args)
    try:
        cert = certificate_from_dict(read_report(args.certificate))
    except (OSError, KeyError, ValueError) as exc:
        raise InputError(f"cannot read certificate: {exc}") from None
    margins = recheck(cert, cfg.mapping, cfg.space)
    slack = cert.tolerance
    ok = abs(margins["argmin_margin"] - cert.min_margin) <= slack * (1 + abs(cert.min_margin))
    if "witness_margin" in margins:
        ok = ok and margins["witness_margin"] < 0
    if "witness_factor" in margins:
        ok = ok and margins["witness_factor"] >= 1.0 - slack
    shown = "".join(f"; {k.replace('_', ' ')} {margins[k]:.6g}" for k in ("witness_margin", "witness_factor")
                    if k in margins)
    print(f"{cert.class_id.value}: stored verdict {'PASS' if cert.passed else 'FAIL'}; "
          f"argmin margin {margins['argmin_margin']:.6g}{shown}"
          + f" -> {'reproduced' if ok else 'NOT reproduced'}")
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {"certify": cmd_certify, "solve": cmd_solve, "atlas": cmd_atlas, "bench": cmd_bench,
            "verify": cmd_verify}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
