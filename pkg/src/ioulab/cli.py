"""Command-line front end: single evaluations, regression runs, sweeps.

Exit codes are a stable contract: 0 on success, 1 when a checked property
fails (a sweep conclusion does not hold), 2 on usage or config errors.
All CSV output has a header row, LF line endings, and floats serialized
with 17 significant digits so values round-trip exactly.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from dataclasses import asdict
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .geometry import Box
from .losses import BASE_NAMES, LossSpec, evaluate
from .simlab import SimConfig, run_simulation
from .sweep import AXES, SweepConfig, check_conclusions, run_sweep

LOSS_CHOICES = tuple(BASE_NAMES) + tuple(f"inner-{b}" for b in BASE_NAMES)

_SCENARIOS = {
    # (radius, auxiliary ratio): clustered anchors that mostly overlap the
    # target versus distant anchors that mostly miss it.
    "high": ((0.0, 3.0), 0.8),
    "low": ((6.0, 9.0), 1.2),
}


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _box_arg(text: str) -> Box:
    parts = text.split(",")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError(f"expected X,Y,W,H, got {text!r}")
    try:
        return Box(*(float(p) for p in parts))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _sides_arg(text: str) -> tuple[float, ...]:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise argparse.ArgumentTypeError("expected a comma-separated list of sides")
    try:
        return tuple(float(p) for p in parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _bases_arg(text: str) -> tuple[str, ...]:
    names = tuple(p.strip().lower() for p in text.split(",") if p.strip())
    if not names:
        raise argparse.ArgumentTypeError("expected a comma-separated list of base losses")
    for name in names:
        if name not in BASE_NAMES:
            raise argparse.ArgumentTypeError(
                f"unknown base loss {name!r} (choose from {', '.join(BASE_NAMES)})"
            )
    return names


def _config_digest(cfg: SimConfig) -> str:
    canonical = json.dumps(cfg.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def cmd_eval(args: argparse.Namespace) -> int:
    name = args.loss
    if name.startswith("inner-"):
        if args.ratio is None:
            raise ValueError(f"--loss {name} requires --ratio")
        spec = LossSpec(name[len("inner-") :], inner=args.ratio)
    else:
        if args.ratio is not None:
            raise ValueError("--ratio only applies to inner-* losses")
        spec = LossSpec(name)
    value = evaluate(spec, args.anchor, args.gt)
    payload = {
        "loss": value.loss,
        "iou": value.iou,
        "inner_iou": value.inner_iou,
        "terms": asdict(value.terms) if value.terms is not None else {},
    }
    if args.grad:
        g = value.grad
        payload["grad"] = {"x": g.dx, "y": g.dy, "w": g.dw, "h": g.dh}
    print(json.dumps(payload))
    return 0


def _resolve_sim_config(args: argparse.Namespace) -> SimConfig:
    if args.config is not None:
        for flag in ("bases", "points", "iterations"):
            if getattr(args, flag) is not None:
                raise ValueError(f"--{flag} only applies to --scenario runs")
        try:
            raw = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise ValueError(f"cannot read config: {exc}") from exc
        try:
            data = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ValueError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ValueError("config must be a JSON object")
        if args.seed is not None:
            data = dict(data)
            data["seed"] = args.seed
        return SimConfig.from_dict(data)

    radius, ratio = _SCENARIOS[args.scenario]
    specs = []
    for base in args.bases or ("ciou",):
        specs.append(LossSpec(base))
        specs.append(LossSpec(base, inner=ratio))
    kwargs: dict = {"specs": tuple(specs), "radius": radius}
    if args.points is not None:
        kwargs["n_points"] = args.points
    if args.iterations is not None:
        kwargs["iterations"] = args.iterations
    if args.seed is not None:
        kwargs["seed"] = args.seed
    return SimConfig(**kwargs)


def cmd_sim(args: argparse.Namespace) -> int:
    cfg = _resolve_sim_config(args)
    summaries = run_simulation(cfg, threads=args.threads, per_case=args.per_case)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    with open(out / "summary.csv", "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["spec", "iteration", "total_error"])
        for s in summaries:
            for it, err in enumerate(s.total_error_curve):
                w.writerow([s.label, str(it), _fmt(err)])

    if args.per_case:
        with open(out / "cases.csv", "w", encoding="utf-8", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["spec", "case_id", "initial_error", "final_error", "final_iou", "clamps"])
            for s in summaries:
                for i in range(len(s.case_final_error)):
                    w.writerow(
                        [
                            s.label,
                            str(i),
                            _fmt(s.case_initial_error[i]),
                            _fmt(s.case_final_error[i]),
                            _fmt(s.case_final_iou[i]),
                            str(int(s.case_clamps[i])),
                        ]
                    )

    manifest = {
        "config_digest": _config_digest(cfg),
        "seed": cfg.seed,
        "spec_list": [s.label() for s in cfg.specs],
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "tool_version": __version__,
        "n_cases": cfg.case_count,
        "error_metric": "corner_l1",
    }
    with open(out / "manifest.json", "w", encoding="utf-8", newline="") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")

    for s in summaries:
        print(
            f"{s.label}: mean final error {s.mean_final_error:.6g}, "
            f"error-curve area {s.auc:.6g}"
        )
    print(f"wrote {out / 'summary.csv'} ({len(summaries)} specs, {cfg.case_count} cases)")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = SweepConfig(
        box_side=args.box_side,
        aux_sides=args.aux_sides,
        deviation_range=(args.dev_min, args.dev_max),
        samples=args.samples,
        axis=args.axis,
    )
    records = run_sweep(cfg)
    report = check_conclusions(
        records,
        actual_side=cfg.box_side,
        high_iou_threshold=args.high_iou_threshold,
        low_iou_threshold=args.low_iou_threshold,
    )

    if args.out is not None:
        sides = cfg.sides()
        header = ["deviation"]
        for s in sides:
            header += [f"iou_{s:g}", f"absgrad_{s:g}"]
        with open(args.out, "w", encoding="utf-8", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(header)
            for rec in records:
                row = [_fmt(rec.deviation)]
                for s in sides:
                    row += [_fmt(rec.iou_per_side[s]), _fmt(rec.absgrad_per_side[s])]
                w.writerow(row)

    doc = report.to_dict()
    if args.report is not None:
        with open(args.report, "w", encoding="utf-8", newline="") as f:
            json.dump(doc, f, indent=2, sort_keys=True)
            f.write("\n")
    print(json.dumps(doc, indent=2))
    return 0 if report.all_passed else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ioulab",
        description="Overlap-based box regression losses, their gradients, and experiments.",
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    pe = sub.add_parser("eval", help="evaluate one loss on one box pair")
    pe.add_argument("--anchor", type=_box_arg, required=True, metavar="X,Y,W,H")
    pe.add_argument("--gt", type=_box_arg, required=True, metavar="X,Y,W,H")
    pe.add_argument("--loss", required=True, choices=LOSS_CHOICES)
    pe.add_argument("--ratio", type=float, help="auxiliary box scale for inner-* losses")
    pe.add_argument("--grad", action="store_true", help="include the four partials")
    pe.set_defaults(func=cmd_eval)

    ps = sub.add_parser("sim", help="run a gradient-descent regression experiment")
    src = ps.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", metavar="FILE", help="JSON file mirroring SimConfig")
    src.add_argument(
        "--scenario",
        choices=tuple(_SCENARIOS),
        help="preset: 'high' = radius 0-3 with ratio 0.8, 'low' = radius 6-9 with ratio 1.2",
    )
    ps.add_argument("--out", required=True, metavar="DIR")
    ps.add_argument(
        "--bases",
        type=_bases_arg,
        metavar="NAME[,NAME...]",
        help="base losses for --scenario runs; each adds the plain and auxiliary variant (default: ciou)",
    )
    ps.add_argument("--points", type=int, help="sample points per target aspect (--scenario only)")
    ps.add_argument("--iterations", type=int, help="descent iterations (--scenario only)")
    ps.add_argument("--per-case", action="store_true", help="also write cases.csv")
    ps.add_argument("--seed", type=int, help="override the config or preset seed")
    ps.add_argument("--threads", type=int, default=0, help="worker threads, 0 = one per CPU")
    ps.set_defaults(func=cmd_sim)

    pw = sub.add_parser("sweep", help="sweep overlap gradients across center deviations")
    pw.add_argument("--box-side", type=float, default=10.0)
    pw.add_argument(
        "--aux-sides", type=_sides_arg, default=(8.0, 12.0), metavar="S[,S...]"
    )
    pw.add_argument("--dev-min", type=float, default=-15.0)
    pw.add_argument("--dev-max", type=float, default=15.0)
    pw.add_argument("--samples", type=int, default=601)
    pw.add_argument("--axis", choices=AXES, default="x")
    pw.add_argument("--high-iou-threshold", type=float, default=0.7)
    pw.add_argument("--low-iou-threshold", type=float, default=0.0)
    pw.add_argument("--out", metavar="FILE", help="write the sweep curves as CSV")
    pw.add_argument("--report", metavar="FILE", help="also write the conclusions report JSON")
    pw.set_defaults(func=cmd_sweep)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
