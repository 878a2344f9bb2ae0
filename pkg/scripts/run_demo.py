#!/usr/bin/env python3
"""Solve every shipped configuration and print a one-line summary each.

Usage:  python3 scripts/run_demo.py [--out DIR]

Outputs land in DIR/<config-name>/ (solution.csv, report.json,
convergence.csv), ready for any plotter.
"""

import argparse
import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from fracsolve import cli  # noqa: E402

CONFIGS = ("interval_1d", "interval_1d_pure", "disk_2d")


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="demo_out", help="base output directory")
    args = ap.parse_args()
    base = Path(args.out)

    worst = 0
    for name in CONFIGS:
        out = base / name
        code = cli.main(
            ["solve", "--config", str(ROOT / "configs" / f"{name}.json"), "--out", str(out)]
        )
        worst = max(worst, code)
        report = json.loads((out / "report.json").read_text())
        u = report["u"]
        print(
            f"{name:18s} exit={code} converged={report['converged']} "
            f"outer={report['outer_iterations']:2d} "
            f"residual={report['final_residual']:.3e} "
            f"hopf_ratio={report['hopf_ratio']:.3f} "
            f"max_u={max(u):.4f}"
        )
    print(f"outputs under {base}/")
    return worst


if __name__ == "__main__":
    sys.exit(main())
