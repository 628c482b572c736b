"""Run every bundled preset scenario and write one JSON report per preset.

    python3 scripts/run_presets.py [--out reports] [--samples N] [--seed S]

Prints one line per preset with its verdict, worst residual and run time;
the exit status is 0 when every preset meets its expectations.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from tangeo.scenarios import list_presets, report_text, verify


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("reports"))
    ap.add_argument("--samples", type=int)
    ap.add_argument("--seed", type=int)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    ok = True
    for name in list_presets():
        header, body = verify(name, samples=args.samples, seed=args.seed)
        (args.out / f"{name}.json").write_text(report_text(header, body))
        s = body["summary"]
        ok &= s["verdict"] == "pass"
        print(f"{name:34s} {s['verdict']:4s}  max residual {s['max_residual']:.2e}  "
              f"{s['n_records']:4d} records  {header['wall_time']:6.1f} s")
    return 0 if ok else 2


if __name__ == "__main__":
    sys.exit(main())
