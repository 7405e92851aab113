class DomainError(ValueError):
    """A model input lies outside the domain where the physics is defined."""


class ConfigError(ValueError):
    """An experiment profile or CLI override is malformed."""


class ReconciliationError(RuntimeError):
    """Error correction could not bring the two keys into agreement."""
