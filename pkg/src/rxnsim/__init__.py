"""Deterministic simulation of mass-action reaction networks.

Typical use::

    from rxnsim import load_network, compile_network, integrate, SolverOptions

    spec = load_network("enzyme.rxn")
    net = compile_network(spec)
    traj = integrate(net, spec.initial, 0.0, 100.0, SolverOptions(method="rosenbrock4"))
"""
from .conservation import ConservationBasis, conservation_laws
from .errors import (
    DomainError,
    EmptyNetwork,
    MaxStepsExceeded,
    ModifierOnZeroEntry,
    NegativeCoefficient,
    NetworkError,
    NewtonDivergence,
    NonIntegerOrderInStrictMode,
    NonPositiveFactor,
    RxnSimError,
    SingularIterationMatrix,
    SolverError,
    StepSizeUnderflow,
    UnknownSpecies,
)
from .integrate import SolverOptions, Trajectory, integrate
from .kinetics import (
    Workspace,
    eval_jacobian,
    eval_rates,
    eval_rhs,
    eval_rhs_dense_oracle,
    jacobian_pattern,
)
from .network import (
    GENERALIZED,
    STRICT,
    CompiledNetwork,
    NetworkSpec,
    ReactionSpec,
    SparseStoichiometry,
    apply_modifiers,
    compile_network,
)
from .parser import (
    NetworkParseError,
    ParseDiagnostic,
    load_network,
    parse_network,
    parse_with_diagnostics,
    serialize_network,
)
from .steppers import Scratch, SolverStats, StepResult, step_explicit, step_stiff

__version__ = "0.1.0"
