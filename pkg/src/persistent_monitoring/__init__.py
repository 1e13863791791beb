"""Speed controllers for persistent monitoring along fixed closed paths.

Typical flow: describe a :class:`PersistentTask`, compute coverage with
:func:`prepare`, solve a program with :func:`synthesize`, then check the
result with :mod:`steady_state` or :func:`simulate`.
"""

from .controller import (
    FunctionBasis,
    RectBasis,
    ReciprocalProfile,
    average_controllers,
    coverage_time,
    cycle_time,
    eval_reciprocal,
    multi_stability_margin,
    stability_margin,
    travel_time,
)
from .coverage import (
    CoverageSet,
    CoveredTask,
    EmptyCoverage,
    FullCircle,
    compute_coverage_set,
    coverage_sets,
    decompose,
    point_in_footprint,
    prepare,
)
from .lp import LinearProgram, LPSolution, solve, to_lp_text
from .simulator import (
    SimConfig,
    SimTrace,
    analytic_threshold,
    corollary_bound,
    epsilon_threshold,
    noise_sweep,
    parameter_sweep,
    simulate,
)
from .steady_state import (
    DivergentFieldError,
    SteadyStateProfile,
    analyze,
    endpoint_values,
    field_profile,
    peak_field,
    peak_field_all,
    reduction,
)
from .synthesis import (
    SynthesisResult,
    build_feasibility_lp,
    build_margin_lp,
    build_minmax_lp,
    build_multi_lp,
    multi_stability_coefficients,
    peak_coefficients,
    robustness_bound,
    stability_coefficients,
    synthesize,
    synthesize_sampled,
)
from .task_model import (
    DiskFootprint,
    InterestPoint,
    PathSpec,
    PersistentTask,
    PolygonFootprint,
    RobotModel,
    validate,
)

__version__ = "0.1.0"
