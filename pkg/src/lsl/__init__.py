"""Line search for an escaping target of unknown speed.

Simulates alternating-sweep search strategies, computes their catch
times and competitive ratios in closed form, cross-validates them
against an exact piecewise-linear intersection oracle, and numerically
certifies the growth bounds the analysis rests on -- all in
configurable-precision arithmetic.
"""

from .errors import (
    DomainError,
    HorizonExhausted,
    PrecisionError,
    SearchError,
    SequenceError,
    TrajectoryError,
)
from .numerics import (
    DEFAULT_BITS,
    Log2Real,
    log2,
    log_sum,
    pow2,
    render_real,
    to_real,
    with_precision,
)
from .engine import (
    DEFAULT_HORIZON,
    RoundLedger,
    Target,
    ZigzagSpec,
    catch_round,
    catch_time,
    competitive_ratio,
    compute_rounds,
    side_ratio,
    target,
    trajectory,
)
from .catalog import (
    TRUE_DISTANCE,
    CatalogEntry,
    algorithm1,
    algorithm2,
    custom_sequence,
    resolve_strategy,
)
from .oracle import (
    CatchResult,
    Trajectory,
    intersect,
    read_trajectory_csv,
    verify_strategy_validity,
    write_trajectory_csv,
)
from .bounds import (
    BeckNewmanState,
    BoundSpec,
    CheckRecord,
    DiffOracle,
    RefutationWitness,
    beck_newman_check,
    beck_newman_state,
    check_abel_decomposition,
    check_diff_bounds,
    check_diff_positivity,
    check_unknown_d_bound,
    check_upper_bound,
    default_envelope,
    finite_difference,
    phi,
    refute_polynomial_bound,
)

__version__ = "0.1.0"
