"""Exception types shared across the matcher."""


class MatchError(Exception):
    """Base class for all errors raised by this package."""


class InputParseError(MatchError):
    """Malformed input file (JSON/CSV syntax). Carries a position when known."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}" + (f", column {column})" if column is not None else ")")
        super().__init__(message)


class ValidationError(MatchError):
    """Structurally well-formed input that violates a contract
    (unknown entity, arity mismatch, duplicate id, out-of-range value, ...)."""


class InconsistencyError(MatchError):
    """Axiom closure derived that an entity is disjoint with itself."""

    def __init__(self, entity_name, chain):
        self.entity_name = entity_name
        self.chain = list(chain)
        steps = "\n  ".join(self.chain)
        super().__init__(
            f"ontology is inconsistent: {entity_name} is disjoint with itself; derivation:\n  {steps}"
        )


class InfeasibleProblemError(MatchError):
    """The hard clauses of a ground problem admit no assignment."""

    def __init__(self, core):
        self.core = list(core)
        super().__init__(
            f"hard constraints are unsatisfiable ({len(self.core)} clauses in unsat core)"
        )


class BudgetExceededError(MatchError):
    """A solver was asked for more atoms than its enumeration budget allows."""
