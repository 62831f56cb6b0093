"""The bounded solution of the Gaussian Stein equation.

For a threshold ``x`` the function

    f_x(w) = exp(w^2/2) int_{-inf}^w (1(y <= x) - Phi(x)) exp(-y^2/2) dy

solves ``f'(w) - w f(w) = 1(w <= x) - Phi(x)``. With the scaled Mills ratio
``R(t) = sqrt(pi/2) erfcx(t/sqrt(2)) = (1 - Phi(t)) / phi(t)`` it reads

    f_x(w) = (1 - Phi(x)) R(-w)   for w <= x,
    f_x(w) = Phi(x) R(w)          for w > x,

which is evaluated without overflow for any finite ``w``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfcx, ndtr

__all__ = [
    "SteinFunction",
    "stein_solution",
    "stein_derivative",
    "stein_residual",
    "SUP_BOUND",
    "increment_margin",
]

SUP_BOUND = math.sqrt(2.0 * math.pi) / 4.0
_SQRT_HALF_PI = math.sqrt(math.pi / 2.0)


@dataclass(frozen=True)
class SteinFunction:
    """Stein solution for the indicator test function ``1(. <= x)``."""

    x: float

    def __post_init__(self):
        if not math.isfinite(self.x):
            raise ValueError("threshold must be finite")

    def __call__(self, w):
        return stein_solution(self, w)

    def derivative(self, w):
        return stein_derivative(self, w)


def _mills(t: np.ndarray) -> np.ndarray:
    return _SQRT_HALF_PI * erfcx(t / math.sqrt(2.0))


def _scalar_or_array(w, out):
    return float(out) if np.ndim(w) == 0 else out


def stein_solution(s: SteinFunction, w):
    """``f_x(w)``; vectorised in ``w``."""
    w = np.asarray(w, dtype=float)
    upper = 1.0 - ndtr(s.x)
    lower = ndtr(s.x)
    out = np.where(w <= s.x, upper * _mills(-w), lower * _mills(w))
    return _scalar_or_array(w, out)


def stein_derivative(s: SteinFunction, w):
    """``f_x'(w)`` from the closed form.

    At ``w = x`` the one-sided value ``1 - Phi(x) + x f_x(x)`` is returned,
    so the Stein equation holds with the indicator evaluated as ``1``.
    """
    w = np.asarray(w, dtype=float)
    upper = 1.0 - ndtr(s.x)
    lower = ndtr(s.x)
    left = upper * (w * _mills(-w) + 1.0)
    right = lower * (w * _mills(w) - 1.0)
    at = upper + s.x * upper * _mills(-np.full_like(w, s.x))
    out = np.where(w < s.x, left, np.where(w > s.x, right, at))
    return _scalar_or_array(w, out)


def stein_residual(s: SteinFunction, w):
    """``f_x'(w) - w f_x(w) - (1(w <= x) - Phi(x))``; zero up to rounding."""
    w = np.asarray(w, dtype=float)
    rhs = (w <= s.x).astype(float) - ndtr(s.x)
    out = np.asarray(stein_derivative(s, w)) - w * np.asarray(stein_solution(s, w)) - rhs
    return _scalar_or_array(w, out)


def increment_margin(s: SteinFunction, w, u, v):
    """Slack in ``|(w+u)f(w+u) - (w+v)f(w+v)| <= (|w| + sqrt(2 pi)/4)(|u| + |v|)``.

    Nonnegative values mean the inequality holds.
    """
    w, u, v = (np.asarray(a, dtype=float) for a in (w, u, v))
    lhs = np.abs((w + u) * np.asarray(stein_solution(s, w + u)) - (w + v) * np.asarray(stein_solution(s, w + v)))
    out = (np.abs(w) + SUP_BOUND) * (np.abs(u) + np.abs(v)) - lhs
    return _scalar_or_array(w, out)
