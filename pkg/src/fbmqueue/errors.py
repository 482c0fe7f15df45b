"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Malformed or schema-violating experiment configuration."""

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class AcceptanceStarvationError(RuntimeError):
    """Too few replicates satisfied the conditioning event."""

    def __init__(self, accepted, required, u):
        self.accepted = accepted
        self.required = required
        self.u = u
        super().__init__(
            f"only {accepted} of the replicates met the conditioning event at u={u} "
            f"(need {required}); lower u or increase reps"
        )


class ResourceCapError(MemoryError):
    """A requested grid or matrix exceeds the configured size cap."""


class SpecMismatchError(ValueError):
    """An estimate was produced for different parameters than the formula needs."""
