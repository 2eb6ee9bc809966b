"""Bony attractors of skew products over linear Anosov maps of the 2-torus."""

from .fiber import Blend, ConstantBlend, FiberMapFamily, make_family
from .skew import (
    AttractorSample,
    SkewSystem,
    SliceCover,
    attractor_sample,
    build_system,
    diameter_sequence,
    iterate_fiber,
    slice_cover,
    step,
)
from .torus import AnosovMap, MarkovPartition, TorusPoint, build_partition, make_anosov, select_marked_rectangles

__all__ = [
    "AnosovMap",
    "AttractorSample",
    "Blend",
    "ConstantBlend",
    "FiberMapFamily",
    "MarkovPartition",
    "SkewSystem",
    "SliceCover",
    "TorusPoint",
    "attractor_sample",
    "build_partition",
    "build_system",
    "diameter_sequence",
    "iterate_fiber",
    "make_anosov",
    "make_family",
    "select_marked_rectangles",
    "slice_cover",
    "step",
]
