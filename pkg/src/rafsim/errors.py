"""Exception types shared across the package."""


class ConfigError(Exception):
    """Invalid or inconsistent configuration (file schema, parameter ranges)."""


class SimulationError(RuntimeError):
    """Numerical failure during simulation (non-finite state, divergence)."""


class TrainingDivergedError(SimulationError):
    """Training loss became non-finite; carries the epoch and loss value."""

    def __init__(self, message, epoch=None, loss=None):
        super().__init__(message)
        self.epoch = epoch
        self.loss = loss
