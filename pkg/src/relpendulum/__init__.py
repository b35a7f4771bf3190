"""Periodic solutions of the forced relativistic pendulum via its Poincare map."""

from .autonomous import (
    EnergyClass,
    classify_energy,
    libration_period,
    min_libration_period_scan,
    running_time,
    solve_running_energy,
)
from .integrate import (
    IntegratorConfig,
    TangentFlowResult,
    flow,
    flow_with_tangent,
    sample_trajectory,
)
from .model import (
    CylinderState,
    ForcingSeries,
    LabState,
    PendulumParams,
    admissible,
    drift_speed,
    energy,
    hamiltonian,
    to_momentum,
    to_velocity,
    vector_field,
)
from .poincare import (
    StripBound,
    boundary_twist_check,
    curve_intersection_count,
    generating_function,
    poincare_map,
    strip_bound,
    twist_margin,
)
from .solver import (
    DegenerateContinuum,
    PeriodicOrbit,
    ReducedCurve,
    SolverConfig,
    build_reduced_curve,
    classify_stability,
    find_fixed_points,
    fixed_point_index,
    reconstruct_lab_solution,
    reduced_point,
)

__version__ = "0.1.0"
