"""Base dynamics: the Anosov automorphism, its Markov partition, periodic orbits."""

from .anosov import (
    AnosovMap,
    FloatBudgetError,
    NotHyperbolicError,
    TorusPoint,
    UnstableSegment,
    iterate_point,
    make_anosov,
    torus_distance,
    torus_step,
    unstable_segment,
)
from .partition import (
    MarkovPartition,
    MarkovRectangle,
    PartitionError,
    SelectionError,
    build_partition,
    rectangle_distance,
    select_marked_rectangles,
)

__all__ = [
    "AnosovMap",
    "FloatBudgetError",
    "MarkovPartition",
    "MarkovRectangle",
    "NotHyperbolicError",
    "PartitionError",
    "SelectionError",
    "TorusPoint",
    "UnstableSegment",
    "build_partition",
    "iterate_point",
    "make_anosov",
    "rectangle_distance",
    "select_marked_rectangles",
    "torus_distance",
    "torus_step",
    "unstable_segment",
]

from .periodic import (  # noqa: E402
    SymbolicWord,
    WordNotRealized,
    enumerate_periodic_words,
    fixed_point_count,
    fixed_points,
    periodic_point_from_word,
    repellor_words,
)

__all__ += [
    "SymbolicWord",
    "WordNotRealized",
    "enumerate_periodic_words",
    "fixed_point_count",
    "fixed_points",
    "periodic_point_from_word",
    "repellor_words",
]
