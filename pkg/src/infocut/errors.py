"""Exception hierarchy.

Each error carries an ``exit_code`` used by the command-line front end:
2 for invalid input, 3 for domain errors, 4 for non-convergence.
"""


class InfocutError(Exception):
    exit_code = 2


class InvalidInput(InfocutError):
    exit_code = 2


class OutOfRangeNode(InvalidInput):
    pass


class SelfLoop(InvalidInput):
    pass


class SizeMismatch(InvalidInput):
    pass


class EmptyCluster(InvalidInput):
    pass


class ZeroVolumeCluster(InvalidInput):
    pass


class DegenerateBisection(InvalidInput):
    pass


class DegenerateInit(DegenerateBisection):
    pass


class InfeasibleSpec(InvalidInput):
    """SBM parameters with no valid intra-block probability."""


class DomainError(InfocutError):
    exit_code = 3


class SamplingExhausted(DomainError):
    pass


class DisconnectedGraph(DomainError):
    pass


class DisconnectedStart(DisconnectedGraph):
    pass


class IsolatedNode(DomainError):
    pass


class CorrelationZeroCrossing(DomainError):
    pass


class InformationUnderflow(DomainError):
    pass


class NonConvergence(InfocutError):
    exit_code = 4
