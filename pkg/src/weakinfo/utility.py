"""Utility families: log, power and exponential.

Each family exposes the utility U, its marginal U', the inverse marginal
I = (U')^-1 and the convex conjugate of U.  The inverse marginal is the
workhorse of the dual solvers: optimal terminal wealth always has the form
I(multiplier * state-price ratio).

Log and power require positive wealth and have infinite marginal utility at
zero; exponential accepts any real wealth.  All operations accept floats or
numpy arrays and raise `DomainError` on out-of-domain input instead of
letting NaNs propagate into the root-finders.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

LOG = "log"
POWER = "power"
EXPONENTIAL = "exponential"


def _as_array(x):
    return np.asarray(x, dtype=float)


def _maybe_scalar(value, like):
    if np.isscalar(like) or getattr(like, "ndim", 1) == 0:
        return float(value)
    return value


@dataclass(frozen=True)
class Utility:
    """One member of the supported utility families.

    kind   -- "log", "power" or "exponential"
    gamma  -- power exponent, gamma < 1 and gamma != 0 (power only)
    alpha  -- absolute risk aversion, alpha > 0 (exponential only)
    """

    kind: str
    gamma: float | None = None
    alpha: float | None = None

    def __post_init__(self):
        if self.kind == LOG:
            if self.gamma is not None or self.alpha is not None:
                raise ValueError("log utility takes no parameters")
        elif self.kind == POWER:
            if self.gamma is None:
                raise ValueError("power utility requires gamma")
            if not (self.gamma < 1.0) or self.gamma == 0.0:
                raise ValueError(
                    "power exponent must satisfy gamma < 1 and gamma != 0, got %r"
                    % (self.gamma,)
                )
        elif self.kind == EXPONENTIAL:
            if self.alpha is None or not self.alpha > 0.0:
                raise ValueError("exponential utility requires alpha > 0")
        else:
            raise ValueError("unknown utility kind %r" % (self.kind,))

    # -- constructors ------------------------------------------------------

    @classmethod
    def log(cls) -> "Utility":
        return cls(LOG)

    @classmethod
    def power(cls, gamma: float) -> "Utility":
        return cls(POWER, gamma=float(gamma))

    @classmethod
    def exponential(cls, alpha: float) -> "Utility":
        return cls(EXPONENTIAL, alpha=float(alpha))

    # -- domain ------------------------------------------------------------

    @property
    def requires_positive_wealth(self) -> bool:
        return self.kind in (LOG, POWER)

    def _check_wealth(self, x):
        if self.requires_positive_wealth and np.any(x <= 0.0):
            raise DomainError(
                "%s utility is defined for wealth > 0 only" % self.kind
            )

    @staticmethod
    def _check_positive(y, what: str):
        if np.any(_as_array(y) <= 0.0):
            raise DomainError("%s requires a strictly positive argument" % what)

    # -- operations --------------------------------------------------------

    def evaluate(self, x):
        """U(x): ln x, x^gamma / gamma, or -exp(-alpha x)."""
        xs = _as_array(x)
        self._check_wealth(xs)
        if self.kind == LOG:
            out = np.log(xs)
        elif self.kind == POWER:
            out = xs ** self.gamma / self.gamma
        else:
            out = -np.exp(-self.alpha * xs)
        return _maybe_scalar(out, x)

    def marginal(self, x):
        """U'(x): 1/x, x^(gamma-1), or alpha exp(-alpha x)."""
        xs = _as_array(x)
        self._check_wealth(xs)
        if self.kind == LOG:
            out = 1.0 / xs
        elif self.kind == POWER:
            out = xs ** (self.gamma - 1.0)
        else:
            out = self.alpha * np.exp(-self.alpha * xs)
        return _maybe_scalar(out, x)

    def inverse_marginal(self, y):
        """I(y) with U'(I(y)) = y, for y > 0."""
        self._check_positive(y, "inverse marginal utility")
        ys = _as_array(y)
        if self.kind == LOG:
            out = 1.0 / ys
        elif self.kind == POWER:
            out = ys ** (1.0 / (self.gamma - 1.0))
        else:
            out = -np.log(ys / self.alpha) / self.alpha
        return _maybe_scalar(out, y)

    def inverse_marginal_prime(self, y):
        """dI/dy, strictly negative on y > 0."""
        self._check_positive(y, "inverse marginal utility")
        ys = _as_array(y)
        if self.kind == LOG:
            out = -1.0 / ys**2
        elif self.kind == POWER:
            e = 1.0 / (self.gamma - 1.0)
            out = e * ys ** (e - 1.0)
        else:
            out = -1.0 / (self.alpha * ys)
        return _maybe_scalar(out, y)

    def conjugate(self, y):
        """Convex conjugate sup_x [U(x) - x y], evaluated at y > 0.

        Closed forms: -ln y - 1 (log), (1/gamma - 1) y^(gamma/(gamma-1))
        (power), (y/alpha)(ln(y/alpha) - 1) (exponential).
        """
        self._check_positive(y, "convex conjugate")
        ys = _as_array(y)
        if self.kind == LOG:
            out = -np.log(ys) - 1.0
        elif self.kind == POWER:
            out = (1.0 / self.gamma - 1.0) * ys ** (self.gamma / (self.gamma - 1.0))
        else:
            z = ys / self.alpha
            out = z * (np.log(z) - 1.0)
        return _maybe_scalar(out, y)

    def describe(self) -> str:
        if self.kind == LOG:
            return "log"
        if self.kind == POWER:
            return "power(gamma=%g)" % self.gamma
        return "exponential(alpha=%g)" % self.alpha
