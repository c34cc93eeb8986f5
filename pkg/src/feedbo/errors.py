"""Exception types shared across the package."""


class SchemaError(ValueError):
    """Raised when a structured text file cannot be parsed or has an
    unexpected layout (unknown column, missing section, bad literal)."""


class ValidationError(ValueError):
    """Raised when parsed data is structurally fine but semantically
    inconsistent (dimension mismatch, crossed bounds, infeasible data)."""
