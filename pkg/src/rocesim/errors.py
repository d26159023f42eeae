"""Exception types shared across the simulator."""


class ConfigError(Exception):
    """Invalid run configuration (bad key, bad unit, inconsistent topology).

    Carries an optional source location so the CLI can point at the line.
    """

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        if path is not None and line is not None:
            message = f"{path}:{line}: {message}"
        super().__init__(message)


class SimulationError(RuntimeError):
    """Internal simulator invariant violated (a bug, not a user error)."""
