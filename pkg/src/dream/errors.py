"""Exception types shared across the package."""


class DreamError(Exception):
    """Base class for all domain errors raised by this package."""

    category = "error"

    def one_line(self) -> str:
        return f"error: {self.category}: {self}"


class ValidationError(DreamError):
    """Malformed input data or configuration."""

    category = "validation"


class OrderingError(DreamError):
    """Event applied out of time order."""

    category = "ordering"


class UnsatisfiableControlError(DreamError):
    """Risk set too small to draw the requested controls."""

    category = "sampling"

    def __init__(self, event_index: int, risk_size: int, m: int):
        self.event_index = event_index
        self.risk_size = risk_size
        self.m = m
        super().__init__(
            f"event {event_index}: risk set holds {risk_size} dyads, "
            f"cannot draw {m} controls besides the case"
        )


class NonFiniteScoreError(DreamError):
    """A subnet produced a non-finite output."""

    category = "nam"

    def __init__(self, subnet: int, detail: str = ""):
        self.subnet = subnet
        msg = f"non-finite score in subnet {subnet}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class TrainingDivergedError(DreamError):
    """Loss became non-finite during training."""

    category = "training"

    def __init__(self, epoch: int, batch: int, subnet: int | None):
        self.epoch = epoch
        self.batch = batch
        self.subnet = subnet
        where = f"epoch {epoch}, batch {batch}"
        if subnet is not None:
            where += f", subnet {subnet}"
        super().__init__(f"non-finite loss at {where}")


class BootstrapRefitError(DreamError):
    """A bootstrap refit failed; carries the refit index."""

    category = "bootstrap"

    def __init__(self, refit_index: int, cause: Exception):
        self.refit_index = refit_index
        self.cause = cause
        super().__init__(f"refit {refit_index}: {cause}")


class FactorizationError(DreamError):
    """Kernel matrix factorization failed."""

    category = "gpr"
