"""Exception types shared across the package."""


class ConfigError(Exception):
    """Invalid or unknown configuration input. CLI exit code 2."""


class NumericalError(RuntimeError):
    """A numerical method failed to meet its accuracy contract. CLI exit code 3."""


class DegenerateStateError(NumericalError):
    """Singular nullifier block: the state has no overlap with the vacuum."""
