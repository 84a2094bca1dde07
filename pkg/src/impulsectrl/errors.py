"""Exception types shared across the package."""


class ImpulseCtrlError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(ImpulseCtrlError):
    """A system, control, or model violates a structural invariant."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class ConfigError(ImpulseCtrlError):
    """A configuration or input file is malformed; the message names the field."""
