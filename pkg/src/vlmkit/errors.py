"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: validation problems exit 1, numeric
failures exit 2, I/O and integrity failures exit 3.
"""


class VlmkitError(Exception):
    """Base class for all package errors."""


class ValidationError(VlmkitError, ValueError):
    """Invalid input data, configuration, or API usage."""


class DimensionError(ValidationError):
    """Tensor or component shapes are incompatible."""


class RegistryError(ValidationError):
    """Unknown component name or conflicting registration."""


class ConfigError(ValidationError):
    """One or more problems in a run configuration.

    Collects every message so a bad config is reported in full, not
    first-error-only.
    """

    def __init__(self, messages):
        if isinstance(messages, str):
            messages = [messages]
        self.messages = list(messages)
        super().__init__("; ".join(self.messages))


class NumericError(VlmkitError, ArithmeticError):
    """Non-finite loss or other numeric failure during training."""


class IntegrityError(VlmkitError):
    """Checkpoint manifest/blob mismatch or unreadable artifact."""
