"""Derivative-free superiorization toolkit.

Feasibility-seeking Kaczmarz/ART sweeps interleaved with component-wise
target-reducing perturbations, a fan-beam tomography constraint generator,
an exterior-penalty coordinate-search baseline, and proximity-target curve
machinery for comparing runs.
"""

from ._backend import available_backends, backend_name, use_backend
from .curves import (
    NonMonotoneError,
    ProximityTargetCurve,
    TraceRecord,
    Verdict,
    better_targeted,
    build_curve,
    curve_value,
    epsilon_output,
    is_monotone_proximity,
)
from .kaczmarz import FeasibilityConfig, RowOrdering, art_run, kaczmarz_sweep, make_ordering
from .penalty import PenalizedObjective, WorkCounters, ep_coordinate_search
from .superiorize import (
    DirectionSequence,
    GradientDescentProvider,
    ProbeEvent,
    StepSchedule,
    SuperiorizationConfig,
    ZeroProvider,
    superiorize_cw,
    superiorize_nonascent,
)
from .system import (
    ConstraintSystem,
    ImageVector,
    SparseRow,
    build_system,
    proximity,
    read_system,
    residuals,
    write_system,
)
from .target import (
    DomainSpec,
    HalfSquaredNorm,
    MedianRoughnessTarget,
    TargetCache,
    in_domain,
)
from .tomo import (
    Ellipse,
    EllipsePhantom,
    FanGeometry,
    NoiseModel,
    PixelGrid,
    generate,
    rasterize,
    trace_ray,
    write_pgm,
)
from .trace import IterateTrace, read_trace_csv, write_trace_csv

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
