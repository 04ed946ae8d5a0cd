"""Adaptive random testing engines with a small-world-graph accelerated
nearest-neighbor backend, plus the benchmark harness around them."""

from .failures import (
    BlockRegion,
    CalibrationError,
    ExternalCommandOracle,
    FailurePattern,
    PlacementError,
    PointRegion,
    StripRegion,
    TrialRecord,
    make_block,
    make_point_pattern,
    make_region,
    make_strip,
    region_from_text,
    region_to_text,
    run_trial,
)
from .generators import (
    GeneratorConfig,
    GeneratorState,
    Strategy,
    new_generator,
    next_test_case,
    record_outcome,
)
from .geometry import (
    InputDomain,
    Metric,
    TestPoint,
    as_point,
    distance,
    sample_many,
    sample_uniform,
)
from .hnsw import (
    CapacityError,
    EmptyIndexError,
    HnswParams,
    SmallWorldIndex,
    assign_level,
    construction_breadth,
)
from .kdtree import KdTree
from .metrics import (
    RankSumResult,
    SampleSummary,
    TimingRow,
    discrepancy,
    f_ratio,
    timing_harness,
    wilcoxon_rank_sum,
)

__version__ = "0.1.0"
