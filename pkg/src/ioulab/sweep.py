"""Single-axis deviation sweeps of the overlap gradient at several box sizes.

A sweep slides a square anchor along one center axis across an identical
square target and records, at every sampled deviation, the overlap and the
magnitude of its derivative with respect to that deviation. Auxiliary
curves repeat the sweep with both squares resized about their centers,
which is exactly what evaluating the overlap on center-rescaled boxes
computes, so larger or smaller stand-in pairs can be compared against the
actual pair point by point.

``check_conclusions`` tests three qualitative claims about those curves:

1. every curve's overlap decays as the deviation grows, so the auxiliary
   trends are consistent with the actual pair,
2. in the high-overlap regime a smaller auxiliary pair has the steeper
   gradient than the actual pair,
3. once the actual pair has (near) zero overlap, a larger auxiliary pair
   that still overlaps keeps a nonzero, steeper gradient.

The zero-deviation sample is skipped in 1 and 2. It is the shared maximum
of every overlap curve, and coincident boxes sit at a symmetric stationary
point under the tie-splitting subgradient convention, so every curve
reports a zero gradient there by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .batch import eval_batch
from .losses import BaseLoss, LossSpec

AXES = ("x", "y")

# Slack for the monotone-decay comparisons, float noise only.
_TREND_SLACK = 1e-12


@dataclass(frozen=True)
class SweepConfig:
    """A family of square-box pairs swept along one center axis.

    The target square of side ``box_side`` sits at the origin; the anchor
    is the same square displaced by each sampled deviation along ``axis``.
    Each entry of ``aux_sides`` adds a curve for the pair rescaled to that
    side about both centers.
    """

    box_side: float = 10.0
    aux_sides: tuple[float, ...] = (8.0, 12.0)
    deviation_range: tuple[float, float] = (-15.0, 15.0)
    samples: int = 601
    axis: str = "x"

    def __post_init__(self) -> None:
        side = float(self.box_side)
        if not math.isfinite(side) or side <= 0.0:
            raise ValueError(f"box_side must be positive and finite, got {self.box_side}")
        object.__setattr__(self, "box_side", side)
        aux = tuple(float(s) for s in self.aux_sides)
        if not aux:
            raise ValueError("aux_sides must not be empty")
        if any(not math.isfinite(s) or s <= 0.0 for s in aux):
            raise ValueError(f"aux_sides must be positive finite numbers, got {self.aux_sides}")
        object.__setattr__(self, "aux_sides", aux)
        rng = tuple(float(v) for v in self.deviation_range)
        if len(rng) != 2 or any(not math.isfinite(v) for v in rng) or rng[0] >= rng[1]:
            raise ValueError(
                f"deviation_range must be an increasing pair, got {self.deviation_range}"
            )
        object.__setattr__(self, "deviation_range", rng)
        samples = int(self.samples)
        if samples < 2:
            raise ValueError(f"samples must be >= 2, got {self.samples}")
        object.__setattr__(self, "samples", samples)
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {AXES}, got {self.axis!r}")

    def sides(self) -> tuple[float, ...]:
        """All curve sides: the actual one first, then the auxiliaries."""
        return (self.box_side,) + tuple(s for s in self.aux_sides if s != self.box_side)


@dataclass(frozen=True)
class SweepRecord:
    """Overlap and gradient magnitude at one deviation, keyed by side."""

    deviation: float
    iou_per_side: dict[float, float]
    absgrad_per_side: dict[float, float]


@dataclass(frozen=True)
class ConclusionResult:
    statement: str
    passed: bool
    vacuous: bool  # no sample satisfied the precondition
    checked: int
    violations: int
    regions: tuple[tuple[float, float], ...]  # deviation spans that were checked

    def to_dict(self) -> dict:
        return {
            "statement": self.statement,
            "passed": self.passed,
            "vacuous": self.vacuous,
            "checked": self.checked,
            "violations": self.violations,
            "regions": [list(r) for r in self.regions],
        }


@dataclass(frozen=True)
class ConclusionsReport:
    c1: ConclusionResult
    c2: ConclusionResult
    c3: ConclusionResult
    high_iou_threshold: float
    low_iou_threshold: float

    @property
    def all_passed(self) -> bool:
        return self.c1.passed and self.c2.passed and self.c3.passed

    def to_dict(self) -> dict:
        return {
            "thresholds": {
                "high_iou": self.high_iou_threshold,
                "low_iou": self.low_iou_threshold,
            },
            "conclusions": {
                "c1": self.c1.to_dict(),
                "c2": self.c2.to_dict(),
                "c3": self.c3.to_dict(),
            },
            "all_passed": self.all_passed,
        }


def run_sweep(cfg: SweepConfig) -> list[SweepRecord]:
    """Evaluate every curve of ``cfg`` at every sampled deviation."""
    devs = np.linspace(cfg.deviation_range[0], cfg.deviation_range[1], cfg.samples)
    n = cfg.samples
    targets = np.zeros((n, 4))
    targets[:, 2] = cfg.box_side
    targets[:, 3] = cfg.box_side
    anchors = targets.copy()
    col = 0 if cfg.axis == "x" else 1
    anchors[:, col] = devs

    iou_cols: dict[float, np.ndarray] = {}
    grad_cols: dict[float, np.ndarray] = {}
    for side in cfg.sides():
        ratio = side / cfg.box_side
        if ratio == 1.0:
            ev = eval_batch(LossSpec(BaseLoss.IOU), anchors, targets)
            iou_cols[side] = ev.iou
            grad_cols[side] = np.abs(ev.iou_grad[:, col])
        else:
            ev = eval_batch(LossSpec(BaseLoss.IOU, inner=ratio), anchors, targets)
            iou_cols[side] = ev.inner_iou
            grad_cols[side] = np.abs(ev.inner_iou_grad[:, col])

    sides = cfg.sides()
    return [
        SweepRecord(
            deviation=float(devs[i]),
            iou_per_side={s: float(iou_cols[s][i]) for s in sides},
            absgrad_per_side={s: float(grad_cols[s][i]) for s in sides},
        )
        for i in range(n)
    ]


def _mask_regions(devs: np.ndarray, mask: np.ndarray) -> tuple[tuple[float, float], ...]:
    regions = []
    start = None
    for i in range(len(devs)):
        if mask[i] and start is None:
            start = i
        elif not mask[i] and start is not None:
            regions.append((float(devs[start]), float(devs[i - 1])))
            start = None
    if start is not None:
        regions.append((float(devs[start]), float(devs[-1])))
    return tuple(regions)


def check_conclusions(
    records: list[SweepRecord],
    *,
    actual_side: float,
    high_iou_threshold: float = 0.7,
    low_iou_threshold: float = 0.0,
) -> ConclusionsReport:
    """Test the three gradient-behavior claims against sweep records.

    ``actual_side`` names the curve of the unscaled pair; every other side
    in the records is an auxiliary curve, compared as smaller or larger
    than the actual one. A claim whose precondition never holds is
    reported vacuous, which does not count as passing.
    """
    if not records:
        raise ValueError("records must not be empty")
    high = float(high_iou_threshold)
    low = float(low_iou_threshold)
    if not (math.isfinite(high) and math.isfinite(low)):
        raise ValueError("thresholds must be finite")
    if low >= high:
        raise ValueError(
            f"low_iou_threshold must be below high_iou_threshold, got {low} >= {high}"
        )
    actual = float(actual_side)
    sides = tuple(records[0].iou_per_side)
    if actual not in sides:
        raise ValueError(f"records carry no curve for actual_side {actual:g}")
    smaller = tuple(s for s in sides if s < actual)
    larger = tuple(s for s in sides if s > actual)
    if not smaller:
        raise ValueError("need an auxiliary side smaller than the actual one")
    if not larger:
        raise ValueError("need an auxiliary side larger than the actual one")

    ordered = sorted(records, key=lambda r: r.deviation)
    devs = np.array([r.deviation for r in ordered])
    iou = {s: np.array([r.iou_per_side[s] for r in ordered]) for s in sides}
    grad = {s: np.array([r.absgrad_per_side[s] for r in ordered]) for s in sides}

    nonzero = devs != 0.0

    # 1: every curve's overlap is non-increasing in the deviation size, so
    # the auxiliary trends are consistent with the actual pair. The
    # coincident sample is the shared maximum of all curves and is skipped
    # here as in conclusion 2.
    by_abs = np.argsort(np.abs(devs), kind="stable")
    idx = by_abs[nonzero[by_abs]]
    checked = 0
    violations = 0
    for s in sides:
        seq = iou[s][idx]
        if len(seq) > 1:
            violations += int(((seq[1:] - seq[:-1]) > _TREND_SLACK).sum())
            checked += len(seq) - 1
    c1 = ConclusionResult(
        statement="overlap decays consistently with deviation at every scale",
        passed=checked > 0 and violations == 0,
        vacuous=checked == 0,
        checked=checked,
        violations=violations,
        regions=_mask_regions(devs, nonzero),
    )

    # 2: where the actual pair overlaps strongly, every smaller curve is
    # strictly steeper than the actual one.
    mask2 = (iou[actual] >= high) & nonzero
    checked = int(mask2.sum()) * len(smaller)
    violations = sum(int((grad[s][mask2] <= grad[actual][mask2]).sum()) for s in smaller)
    c2 = ConclusionResult(
        statement="smaller auxiliary boxes steepen the gradient on high-overlap pairs",
        passed=checked > 0 and violations == 0,
        vacuous=checked == 0,
        checked=checked,
        violations=violations,
        regions=_mask_regions(devs, mask2),
    )

    # 3: where the actual overlap has collapsed but a larger curve still
    # overlaps, that larger curve is strictly steeper.
    checked = 0
    violations = 0
    union = np.zeros(len(devs), dtype=bool)
    for s in larger:
        mask3 = (iou[actual] <= low) & (iou[s] > 0.0)
        checked += int(mask3.sum())
        violations += int((grad[s][mask3] <= grad[actual][mask3]).sum())
        union |= mask3
    c3 = ConclusionResult(
        statement="larger auxiliary boxes keep a nonzero gradient after overlap is lost",
        passed=checked > 0 and violations == 0,
        vacuous=checked == 0,
        checked=checked,
        violations=violations,
        regions=_mask_regions(devs, union),
    )

    return ConclusionsReport(
        c1=c1, c2=c2, c3=c3, high_iou_threshold=high, low_iou_threshold=low
    )
