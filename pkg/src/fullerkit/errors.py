"""Error taxonomy.

Two families: DomainError for computations that fail for mathematical or
numerical reasons (CLI exit code 2), UsageError for malformed requests
(unknown scenario, bad flags; CLI exit code 3).
"""

from __future__ import annotations


class FullerkitError(Exception):
    """Base class; `code` is a stable machine-readable identifier."""

    code = "error"

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details

    def payload(self) -> dict:
        return {"code": self.code, "message": str(self), "details": self.details}


class DomainError(FullerkitError):
    code = "domain_error"


class UsageError(FullerkitError):
    code = "usage_error"


# geometry
class OffManifold(DomainError):
    code = "off_manifold"


class ParamOutOfRange(UsageError):
    code = "param_out_of_range"


class EmptyNet(UsageError):
    code = "empty_net"


# flow
class StepSizeUnderflow(DomainError):
    code = "step_size_underflow"


# orbits
class NoConvergence(DomainError):
    code = "no_convergence"


class DegenerateSection(DomainError):
    code = "degenerate_section"


# index
class MissingIndex(DomainError):
    code = "missing_index"


class DegenerateUnresolved(DomainError):
    code = "degenerate_unresolved"


class NotReebOrbit(DomainError):
    code = "not_reeb_orbit"


# correspondence
class MultiplicityTooHigh(DomainError):
    code = "multiplicity_too_high"


class ShiftMismatch(DomainError):
    code = "shift_mismatch"


class DegenerateLift(DomainError):
    code = "degenerate_lift"


# reeb
class DegenerateContact(DomainError):
    code = "degenerate_contact"


class MuTooLarge(DomainError):
    code = "mu_too_large"


class NotReebBranch(DomainError):
    code = "not_reeb_branch"


# continuation
class StartInvalid(DomainError):
    code = "start_invalid"


# scenarios
class ParseError(UsageError):
    code = "parse_error"


class SchemaViolation(UsageError):
    code = "schema_violation"


class UnknownBuiltin(UsageError):
    code = "unknown_builtin"
