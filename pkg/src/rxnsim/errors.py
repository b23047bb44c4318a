"""Exception hierarchy shared by the network, kinetics and solver layers."""


class RxnSimError(Exception):
    """Base class for all errors raised by rxnsim."""


class NetworkError(RxnSimError, ValueError):
    """A network description violates a structural invariant."""


class UnknownSpecies(NetworkError):
    def __init__(self, species):
        super().__init__(f"unknown species {species!r}")
        self.species = species


class NegativeCoefficient(NetworkError):
    pass


class NonIntegerOrderInStrictMode(NetworkError):
    def __init__(self, species, reaction):
        super().__init__(
            f"species {species!r} has a non-integer coefficient in reaction {reaction} "
            "(strict mass-action mode requires integers)"
        )
        self.species = species
        self.reaction = reaction


class EmptyNetwork(NetworkError):
    """Raised by compile() for a network without reactions."""


class ModifierOnZeroEntry(NetworkError):
    def __init__(self, species, reaction):
        super().__init__(
            f"modifier addresses a structurally zero step-change entry "
            f"(species {species}, reaction {reaction})"
        )
        self.species = species
        self.reaction = reaction


class NonPositiveFactor(NetworkError):
    pass


class DomainError(RxnSimError, ArithmeticError):
    """A state lies outside the domain of the rate law (negative base with a
    non-integer order, or a singular derivative at zero)."""


class SolverError(RxnSimError, RuntimeError):
    """Base class for integration failures. ``t`` is the time reached."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class StepSizeUnderflow(SolverError):
    pass


class MaxStepsExceeded(SolverError):
    pass


class NewtonDivergence(SolverError):
    pass


class SingularIterationMatrix(SolverError):
    pass
