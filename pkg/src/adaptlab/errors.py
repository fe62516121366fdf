"""Exception hierarchy shared by every adaptlab module."""

import numpy as np


class AdaptlabError(Exception):
    """Base class for all library errors."""


class NonFiniteDynamics(AdaptlabError):
    def __init__(self, x, message="plant derivative is not finite"):
        self.x = np.array(x, dtype=float, copy=True)
        super().__init__(f"{message} at x={self.x.tolist()}")


class NonFiniteUpdate(AdaptlabError):
    def __init__(self, x, theta_hat, message="estimator derivative is not finite"):
        self.x = np.array(x, dtype=float, copy=True)
        self.theta_hat = np.array(theta_hat, dtype=float, copy=True)
        super().__init__(f"{message} at x={self.x.tolist()}, theta_hat={self.theta_hat.tolist()}")


class NonFiniteStage(AdaptlabError):
    """Raised by the integrator; ``stage`` is 1..4."""

    def __init__(self, stage, t, cause=None):
        self.stage = stage
        self.t = t
        self.cause = cause
        detail = f": {cause}" if cause is not None else ""
        super().__init__(f"RK4 stage {stage} at t={t:g} produced a non-finite derivative{detail}")


class NotPositiveDefinite(AdaptlabError):
    pass


class DegenerateTransform(AdaptlabError):
    pass


class ProbeDomainError(AdaptlabError):
    pass


class RankDeficient(AdaptlabError):
    pass


class NotHurwitz(AdaptlabError):
    pass


class SolveSingular(AdaptlabError):
    pass


class NotControllable(AdaptlabError):
    pass


class CertificateFailed(AdaptlabError):
    pass


class ClfViolation(AdaptlabError):
    pass


class MissingAuxState(AdaptlabError):
    pass


class ValidationError(AdaptlabError):
    """Config/scenario validation failure.

    ``errors`` maps a field name (``section.key``) to a message.
    """

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = {"config": errors}
        self.errors = dict(errors)
        text = "; ".join(f"{k}: {v}" for k, v in self.errors.items())
        super().__init__(text)
