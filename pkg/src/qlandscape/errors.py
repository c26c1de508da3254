"""Exception types shared across the package."""


class ContractError(ValueError):
    """An argument violates the documented contract of an operation."""


class InvalidGateError(ContractError):
    """A gate description is malformed (e.g. CZ acting twice on one qubit)."""


class ConfigError(ValueError):
    """An experiment configuration is malformed or contains unknown keys."""
