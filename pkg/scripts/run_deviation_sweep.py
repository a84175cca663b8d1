"""Sweep overlap and gradient magnitude across center deviations.

Slides one box past a fixed one along an axis and records, at every
deviation, the overlap and the loss gradient magnitude for the actual
boxes and for auxiliary boxes at each alternative scale. Writes the
curves as CSV plus a JSON report of the three trend conclusions; the
exit code is 0 only if all three hold.
"""

import argparse
from pathlib import Path

from ioulab.cli import main as ioulab_main


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="experiments/sweep", metavar="DIR")
    parser.add_argument("--box-side", type=float, default=10.0)
    parser.add_argument("--aux-sides", default="8,12", metavar="S[,S...]")
    parser.add_argument("--samples", type=int, default=601)
    parser.add_argument("--axis", choices=("x", "y"), default="x")
    args = parser.parse_args()

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    return ioulab_main(
        [
            "sweep",
            "--box-side",
            str(args.box_side),
            "--aux-sides",
            args.aux_sides,
            "--samples",
            str(args.samples),
            "--axis",
            args.axis,
            "--out",
            str(out_dir / "sweep.csv"),
            "--report",
            str(out_dir / "report.json"),
        ]
    )


if __name__ == "__main__":
    raise SystemExit(main())
