"""Matrix gain-scheduling of QSR-dissipative systems.

Composition results for parallel banks of QSR-dissipative subsystems under
pseudo-commuting scheduling matrices, certification tools, and a three-link
manipulator testbed.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DimensionError,
    InfeasibleError,
    InvalidParameterError,
    PreconditionError,
    QsrError,
    RankZeroError,
    SimulationDiverged,
    SolverError,
)
from .qsr_core import Kind, QsrTriple, SampledSignal, SpecialCase, classify, make_special, supply_integral
from .scheduling import (
    FactorBlocks,
    SchedulingFamily,
    activity,
    build_pseudo_commuting,
    stacked_sigma,
    sv_bounds,
    verify_pseudo_commute,
)
from .composition import CompositionReport, compose, compose_special, compose_theorem1, compose_theorem2, verify_dissipation
from .certification import (
    LtiSystem,
    certify_controller,
    certify_storage,
    dissipativity_residual,
    solve_are,
    solve_lyapunov,
    stability_check,
)
from .plant import PlantModel
from .synthesis import LqrWeights, Subcontroller, synthesize_bank, synthesize_controller
