"""Exception types shared across the package."""


class ParameterError(ValueError):
    """An argument is outside the operation's domain."""


class ContractError(RuntimeError):
    """An operation was called in a state its contract does not allow."""


class LoadError(OSError):
    """A file on disk is missing, malformed, or incompatible."""


class CorruptFileError(LoadError):
    """A file failed validation; carries the path and the byte offset."""

    def __init__(self, path, offset: int, reason: str):
        self.path = str(path)
        self.offset = offset
        self.reason = reason
        super().__init__(f"{self.path}: corrupt at byte offset {offset}: {reason}")


class TrainingAborted(ArithmeticError):
    """A loss became non-finite during training."""

    def __init__(self, step: int, epoch: int, loss: float):
        self.step = step
        self.epoch = epoch
        self.loss = loss
        super().__init__(f"non-finite loss {loss!r} at epoch {epoch}, step {step}")
