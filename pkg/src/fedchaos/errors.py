"""Exception types shared across the package."""


class FedChaosError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(FedChaosError):
    """Invalid configuration value or violated precondition."""


class DimensionError(FedChaosError):
    """Array shapes do not line up."""


class DomainError(FedChaosError):
    """Argument outside the mathematical domain of an operation."""


class NumericalError(FedChaosError):
    """Non-finite value where a finite one is required."""


class ConsistencyError(FedChaosError):
    """Cached state does not match the call that should have produced it."""


class FormatError(FedChaosError):
    """Unparseable input file."""


class SchemaError(FedChaosError):
    """Parsed data violates the expected schema (labels, column names)."""


class FeasibilityError(FedChaosError):
    """Partition targets cannot be satisfied by the available rows."""


class IntegrityError(FedChaosError):
    """Encrypted payload fails structural checks (wrong key or corruption)."""
