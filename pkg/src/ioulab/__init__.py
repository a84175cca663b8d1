"""Overlap-based box regression losses, analytic gradients, experiments.

The scalar API works on :class:`Box` pairs through :func:`evaluate` and
the ``loss_*`` helpers; :mod:`ioulab.batch` evaluates whole populations as
(n, 4) arrays. :mod:`ioulab.simlab` and :mod:`ioulab.sweep` drive the
regression-convergence and gradient-sweep experiments the ``ioulab`` CLI
exposes.
"""

__version__ = "0.1.0"

from .batch import BatchEval, eval_batch, inner_iou_batch, iou_batch
from .geometry import Box, enclosing, inner_iou, iou, scale_about_center, to_corners
from .gradients import grad_analytic, grad_fd, grad_fd_batch, grad_magnitude_1d
from .losses import (
    BASE_NAMES,
    BaseLoss,
    CiouTerms,
    Grad4,
    LossSpec,
    LossValue,
    SiouTerms,
    evaluate,
    loss_ciou,
    loss_diou,
    loss_eiou,
    loss_giou,
    loss_inner,
    loss_iou,
    loss_siou,
)
from .simlab import (
    CaseResult,
    ConvergenceSummary,
    SimConfig,
    generate_case_arrays,
    generate_cases,
    run_case,
    run_simulation,
)
from .sweep import (
    ConclusionResult,
    ConclusionsReport,
    SweepConfig,
    SweepRecord,
    check_conclusions,
    run_sweep,
)

__all__ = [
    "__version__",
    "BASE_NAMES",
    "BaseLoss",
    "BatchEval",
    "Box",
    "CaseResult",
    "CiouTerms",
    "ConclusionResult",
    "ConclusionsReport",
    "ConvergenceSummary",
    "Grad4",
    "LossSpec",
    "LossValue",
    "SimConfig",
    "SiouTerms",
    "SweepConfig",
    "SweepRecord",
    "check_conclusions",
    "enclosing",
    "eval_batch",
    "evaluate",
    "generate_case_arrays",
    "generate_cases",
    "grad_analytic",
    "grad_fd",
    "grad_fd_batch",
    "grad_magnitude_1d",
    "inner_iou",
    "inner_iou_batch",
    "iou",
    "iou_batch",
    "loss_ciou",
    "loss_diou",
    "loss_eiou",
    "loss_giou",
    "loss_inner",
    "loss_iou",
    "loss_siou",
    "run_case",
    "run_simulation",
    "run_sweep",
    "scale_about_center",
    "to_corners",
]
