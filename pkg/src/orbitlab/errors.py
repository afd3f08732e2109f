"""Exception hierarchy shared by all orbitlab modules.

Every error carries an ``exit_code`` so the command-line front end can map
failures to process status without a lookup table of its own.
"""


class OrbitlabError(Exception):
    exit_code = 1


class ConfigError(OrbitlabError):
    exit_code = 2


class HypothesisViolation(OrbitlabError):
    exit_code = 3


class ResourceCapExceeded(OrbitlabError):
    exit_code = 4


class PrecisionExhausted(OrbitlabError):
    exit_code = 5


# numfield
class DegenerateInput(ConfigError):
    pass


class NotIrreducible(ConfigError):
    pass


class NotTotallyReal(ConfigError):
    pass


class NotABasis(ConfigError):
    pass


class BadScalar(ConfigError):
    pass


class NotSquarefree(ConfigError):
    pass


# lattice
class DimensionTooLarge(ResourceCapExceeded):
    pass


class BoundaryUndecidable(PrecisionExhausted):
    pass


class NotExact(ConfigError):
    pass


# bestapprox
class RationalCoordinate(ConfigError):
    pass


class NotSpanning(ConfigError):
    pass


class NotPrimitive(ConfigError):
    pass


class TieUnresolvable(PrecisionExhausted):
    pass


# orbitflow
class ScheduleViolation(HypothesisViolation):
    pass


# padic
class OutsideConvergenceDomain(ConfigError):
    pass


class PrecisionBelowResolution(PrecisionExhausted):
    pass


class EnumerationTooLarge(ResourceCapExceeded):
    pass


class NoWitnessAtResolution(PrecisionExhausted):
    pass


class PreconditionViolation(HypothesisViolation):
    pass


# stats
class SchemaMismatch(ConfigError):
    pass
