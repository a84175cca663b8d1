"""Box-regression losses built on overlap, enclosure, and center-distance terms.

Every loss maps an (anchor, gt) pair of boxes to a scalar that is zero iff
the boxes coincide. A :class:`LossSpec` selects the base loss, an optional
center-scaled auxiliary ("inner") ratio, and the numerical knobs. Evaluation
returns the loss together with its analytic gradient with respect to the
anchor parameters (x, y, w, h); the gt box is treated as constant.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, fields

import numpy as np

from .geometry import RATIO_RANGE, Box

THETA_RANGE = (2.0, 6.0)


class BaseLoss(str, enum.Enum):
    IOU = "iou"
    GIOU = "giou"
    DIOU = "diou"
    CIOU = "ciou"
    EIOU = "eiou"
    SIOU = "siou"


BASE_NAMES: tuple[str, ...] = tuple(b.value for b in BaseLoss)


@dataclass(frozen=True)
class LossSpec:
    """Fully resolved description of one loss variant.

    ``inner`` scales both boxes about their centers before the overlap term;
    ``None`` means the plain base loss. ``epsilon`` guards the denominators
    that can otherwise vanish (the center-angle term and the aspect-weight
    denominator). The two ``siou_*`` switches select between the bounded
    shape-cost exponent used by default and the raw printed form, and between
    keeping or dropping the extra one-half factor inside the distance and
    shape sums. ``freeze_angle`` treats the center-angle term as a constant
    when differentiating.
    """

    base: BaseLoss
    inner: float | None = None
    epsilon: float = 1e-7
    theta: float = 4.0
    siou_half_terms: bool = True
    siou_positive_shape_exp: bool = False
    freeze_angle: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "base", BaseLoss(self.base))
        if self.inner is not None:
            ratio = float(self.inner)
            if not math.isfinite(ratio) or ratio <= 0.0:
                raise ValueError(f"inner ratio must be a positive finite number, got {self.inner}")
            lo, hi = RATIO_RANGE
            if not (lo <= ratio <= hi):
                warnings.warn(
                    f"inner ratio {ratio:g} is outside the typical range [{lo:g}, {hi:g}]",
                    stacklevel=3,
                )
            object.__setattr__(self, "inner", ratio)
        eps = float(self.epsilon)
        if not math.isfinite(eps) or eps <= 0.0:
            raise ValueError(f"epsilon must be a positive finite number, got {self.epsilon}")
        object.__setattr__(self, "epsilon", eps)
        theta = float(self.theta)
        if not (THETA_RANGE[0] <= theta <= THETA_RANGE[1]):
            raise ValueError(f"theta must lie in [{THETA_RANGE[0]:g}, {THETA_RANGE[1]:g}], got {self.theta}")
        if self.siou_positive_shape_exp and not theta.is_integer():
            # the shape base 1 - e^omega is negative under this flag, so a
            # fractional exponent would leave the reals
            raise ValueError(
                f"siou_positive_shape_exp requires an integer theta, got {theta:g}"
            )
        object.__setattr__(self, "theta", theta)

    def label(self) -> str:
        """Short stable name, e.g. ``ciou`` or ``inner-ciou(0.8)``."""
        if self.inner is None:
            return self.base.value
        return f"inner-{self.base.value}({self.inner:g})"

    def to_dict(self) -> dict:
        return {
            "base": self.base.value,
            "inner": self.inner,
            "epsilon": self.epsilon,
            "theta": self.theta,
            "siou_half_terms": self.siou_half_terms,
            "siou_positive_shape_exp": self.siou_positive_shape_exp,
            "freeze_angle": self.freeze_angle,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LossSpec":
        if not isinstance(data, dict):
            raise ValueError(f"loss spec must be an object, got {type(data).__name__}")
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ValueError(f"unknown loss spec field '{key}'")
        if "base" not in data:
            raise ValueError("loss spec is missing required field 'base'")
        try:
            return cls(**data)
        except (TypeError, ValueError) as exc:
            raise ValueError(f"invalid loss spec: {exc}") from exc


@dataclass(frozen=True)
class Grad4:
    """Partial derivatives of a loss with respect to the anchor (x, y, w, h)."""

    dx: float
    dy: float
    dw: float
    dh: float

    def as_array(self) -> np.ndarray:
        return np.array([self.dx, self.dy, self.dw, self.dh], dtype=np.float64)


@dataclass(frozen=True)
class CiouTerms:
    """Aspect-consistency term and its weight at the evaluation point."""

    v: float
    alpha: float


@dataclass(frozen=True)
class SiouTerms:
    """Intermediate quantities of the angle/distance/shape decomposition.

    ``angle_cost`` is 0 with axis-aligned centers and 1 at a 45-degree
    diagonal; ``gamma = 2 - angle_cost`` steers the distance falloff.
    ``rho_x``/``rho_y`` are squared center offsets normalized by the
    enclosing box, ``omega_w``/``omega_h`` relative side differences.
    """

    angle_cost: float
    gamma: float
    distance_cost: float
    shape_cost: float
    rho_x: float
    rho_y: float
    omega_w: float
    omega_h: float
    theta: float


@dataclass(frozen=True)
class LossValue:
    """Loss with its overlap diagnostics, optional terms, and gradient."""

    loss: float
    iou: float
    inner_iou: float | None
    terms: CiouTerms | SiouTerms | None
    grad: Grad4


def _box_array(box: Box) -> np.ndarray:
    return np.array([box.x, box.y, box.w, box.h], dtype=np.float64)


def evaluate(spec: LossSpec, anchor: Box, gt: Box) -> LossValue:
    """Evaluate ``spec`` on a box pair, including the analytic gradient."""
    from .batch import eval_batch

    res = eval_batch(spec, _box_array(anchor), _box_array(gt), with_grad=True)
    terms: CiouTerms | SiouTerms | None = None
    if spec.base == BaseLoss.CIOU:
        terms = CiouTerms(v=float(res.terms["v"]), alpha=float(res.terms["alpha"]))
    elif spec.base == BaseLoss.SIOU:
        t = res.terms
        terms = SiouTerms(
            angle_cost=float(t["angle_cost"]),
            gamma=float(t["gamma"]),
            distance_cost=float(t["distance_cost"]),
            shape_cost=float(t["shape_cost"]),
            rho_x=float(t["rho_x"]),
            rho_y=float(t["rho_y"]),
            omega_w=float(t["omega_w"]),
            omega_h=float(t["omega_h"]),
            theta=spec.theta,
        )
    assert res.grad is not None
    return LossValue(
        loss=float(res.loss),
        iou=float(res.iou),
        inner_iou=None if res.inner_iou is None else float(res.inner_iou),
        terms=terms,
        grad=Grad4(*(float(g) + 0.0 for g in res.grad)),  # normalizes -0.0
    )


def loss_iou(anchor: Box, gt: Box) -> LossValue:
    return evaluate(LossSpec(BaseLoss.IOU), anchor, gt)


def loss_giou(anchor: Box, gt: Box) -> LossValue:
    return evaluate(LossSpec(BaseLoss.GIOU), anchor, gt)


def loss_diou(anchor: Box, gt: Box) -> LossValue:
    return evaluate(LossSpec(BaseLoss.DIOU), anchor, gt)


def loss_ciou(anchor: Box, gt: Box, *, epsilon: float = 1e-7) -> LossValue:
    return evaluate(LossSpec(BaseLoss.CIOU, epsilon=epsilon), anchor, gt)


def loss_eiou(anchor: Box, gt: Box) -> LossValue:
    return evaluate(LossSpec(BaseLoss.EIOU), anchor, gt)


def loss_siou(
    anchor: Box,
    gt: Box,
    *,
    epsilon: float = 1e-7,
    theta: float = 4.0,
    half_terms: bool = True,
    positive_shape_exp: bool = False,
) -> LossValue:
    spec = LossSpec(
        BaseLoss.SIOU,
        epsilon=epsilon,
        theta=theta,
        siou_half_terms=half_terms,
        siou_positive_shape_exp=positive_shape_exp,
    )
    return evaluate(spec, anchor, gt)


def loss_inner(spec: LossSpec, anchor: Box, gt: Box) -> LossValue:
    """Evaluate the auxiliary-box composition; ``spec.inner`` must be set."""
    if spec.inner is None:
        raise ValueError("loss_inner requires a spec with an inner ratio")
    return evaluate(spec, anchor, gt)
