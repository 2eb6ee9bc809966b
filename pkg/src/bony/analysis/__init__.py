"""Measurements on the skew product: bones, graph fibers, dimension, limit sets."""

from .bones import (
    BoneCertificate,
    BoneCheckFailed,
    FiberClass,
    LeafPoint,
    PropagatedBone,
    PropagationError,
    ball_sample,
    bone_check,
    bone_persistence,
    bone_propagate,
    classify_fiber,
    decay_against_lipschitz,
    decay_rate,
    pullback_inside,
)
from .dimension import (
    BoxCount,
    DeviationFit,
    DimensionReport,
    HypothesisError,
    box_count,
    choose_delta,
    dimension_bound,
    dimension_report,
    large_deviation_beta,
    violation_fractions,
)
from .limit import LimitReport, forward_orbits, likely_limit_sample

__all__ = [
    "BoneCertificate",
    "BoneCheckFailed",
    "BoxCount",
    "DeviationFit",
    "DimensionReport",
    "FiberClass",
    "HypothesisError",
    "LeafPoint",
    "LimitReport",
    "PropagatedBone",
    "PropagationError",
    "ball_sample",
    "bone_check",
    "bone_persistence",
    "bone_propagate",
    "box_count",
    "choose_delta",
    "classify_fiber",
    "decay_against_lipschitz",
    "decay_rate",
    "dimension_bound",
    "dimension_report",
    "forward_orbits",
    "large_deviation_beta",
    "likely_limit_sample",
    "pullback_inside",
    "violation_fractions",
]
