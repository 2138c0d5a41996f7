"""Exception types shared across the package."""


class TopologyError(ValueError):
    """Invalid or disconnected gossip topology."""


class ConfigError(ValueError):
    """Invalid run configuration (unknown key, missing key, bad combination)."""


class InputError(ValueError):
    """Invalid numeric input (non-finite entries, wrong shape)."""


class InfeasibleError(ValueError):
    """Theoretical precondition violated (step size / compression budget)."""


class DivergedError(RuntimeError):
    """Iterate left the finite range; the run should stop with status 'diverged'."""
