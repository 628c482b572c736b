"""Command-line entry point.

Exit codes: 0 all checks pass, 2 a check failed, 1 configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .expr import ParseError
from .gnatural import check_nondegenerate
from .scenarios import (
    ConfigError,
    list_presets,
    load_text,
    parse_json,
    report_text,
    resolve_metric,
    verify,
)

EXIT_OK, EXIT_CONFIG, EXIT_FAIL = 0, 1, 2


def _error(exc: Exception) -> int:
    print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
    return EXIT_CONFIG


def cmd_verify(args) -> int:
    try:
        header, body = verify(args.scenario, tol=args.tol, samples=args.samples, seed=args.seed)
    except (ConfigError, ParseError) as exc:
        return _error(exc)
    if args.report:
        Path(args.report).write_text(report_text(header, body), encoding="utf-8")
    for r in body["records"]:
        if r["index"] == -1:
            mark = "PASS" if r["pass"] else "FAIL"
            v = r["values"]
            print(f"{mark} {r['check']:<26} {r['run']:<40} expect={v['expect']} observed={v['observed']} "
                  f"max_residual={r['residual']:.3e}")
    s = body["summary"]
    print(f"verdict: {s['verdict']} ({s['n_failed']} failing records, {header['wall_time']:.2f} s)")
    return EXIT_OK if s["verdict"] == "pass" else EXIT_FAIL


def cmd_presets(args) -> int:
    for name in list_presets():
        text, _ = load_text(name)
        checks = json.loads(text)["checks"]
        names = ", ".join(c if isinstance(c, str) else c["name"] for c in checks)
        print(f"{name:<34} {names}")
    return EXIT_OK


def _metric_spec(spec: str):
    p = Path(spec)
    if p.is_file():
        obj = parse_json(p.read_text(encoding="utf-8"), str(p))
        return obj.get("metric", obj) if isinstance(obj, dict) else obj
    return spec


def cmd_check_metric(args) -> int:
    try:
        gen = resolve_metric(_metric_spec(args.spec))
    except (ConfigError, ParseError) as exc:
        return _error(exc)
    rep = check_nondegenerate(gen, args.tmax, args.n)
    print(f"metric: {gen.name}  t in [{rep.t_values[0]:g}, {rep.t_values[-1]:g}]")
    print(f"a(t): min {np.min(rep.a_values):.6g}  max {np.max(rep.a_values):.6g}")
    print(f"F(t): min {np.min(rep.F_values):.6g}  max {np.max(rep.F_values):.6g}")
    if rep.passed:
        print("non-degenerate: pass")
        return EXIT_OK
    print(f"non-degenerate: fail (first failing t = {rep.first_failure:.17g})")
    return EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tangeo", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", help="run a scenario file or bundled preset")
    v.add_argument("--scenario", required=True, help="path to a scenario JSON, or a preset name")
    v.add_argument("--report", help="write the JSON report here")
    v.add_argument("--tol", type=float, help="override the totally-geodesic threshold on |II|")
    v.add_argument("--samples", type=int, help="override sampling.n_points")
    v.add_argument("--seed", type=int, help="override sampling.seed")
    v.set_defaults(fn=cmd_verify)
    p = sub.add_parser("presets", help="list bundled scenarios")
    p.set_defaults(fn=cmd_presets)
    c = sub.add_parser("check-metric", help="non-degeneracy of a generator set")
    c.add_argument("--spec", required=True,
                   help="preset name, 'a1=...,a2=...' assignments, or a JSON file with a metric spec")
    c.add_argument("--tmax", type=float, required=True)
    c.add_argument("--n", type=int, default=1000, help="number of t samples")
    c.set_defaults(fn=cmd_check_metric)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
