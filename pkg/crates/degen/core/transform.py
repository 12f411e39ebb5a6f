"""Scalar nonlinear maps: truncation, the flux-linearizing transform and test-function maps.

Every map is odd in its argument and is evaluated as ``sign(u) * g(|u|)`` so the
symmetry holds bit for bit. Powers go through ``log1p``/``expm1`` which keeps
them finite for |u| far beyond 1e8 and accurate as theta approaches 1.
"""
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike

from .errors import DomainError


def _check_theta(theta: float) -> float:
    theta = float(theta)
    if not 0.0 <= theta <= 1.0:
        raise DomainError(f"theta must lie in [0, 1], got {theta}")
    return theta


# ThetaTransform carries the flux-linearizing map for one value of theta.
@dataclass(frozen=True)
class ThetaTransform:
    """Psi_theta, the primitive of (1+|u|)^-theta, with its inverse and derivative"""

    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", _check_theta(self.theta))

    def forward(self, u: ArrayLike):
        """Psi_theta(u); satisfies grad Psi(u) = grad u / (1+|u|)^theta"""
        u = np.asarray(u, dtype=float)
        a = np.abs(u)
        if self.theta == 1.0:
            g = np.log1p(a)
        else:
            e = 1.0 - self.theta
            g = np.expm1(e * np.log1p(a)) / e
        return np.sign(u) * g

    def inverse(self, w: ArrayLike):
        """Inverse of forward.

        For theta < 1 the range of Psi is the whole real line, since
        (1+|u|)^(1-theta) grows without bound, so every w is admissible.
        """
        w = np.asarray(w, dtype=float)
        a = np.abs(w)
        if self.theta == 1.0:
            g = np.expm1(a)
        else:
            e = 1.0 - self.theta
            g = np.expm1(np.log1p(e * a) / e)
        return np.sign(w) * g

    def derivative(self, u: ArrayLike):
        """(1+|u|)^-theta, the degenerate coercivity factor"""
        return flux_factor(self.theta, u)


def flux_factor(theta: float, u: ArrayLike):
    """Coefficient (1+|u|)^-theta multiplying a(x) grad u in the flux"""
    theta = _check_theta(theta)
    u = np.asarray(u, dtype=float)
    return np.exp(-theta * np.log1p(np.abs(u)))


def truncate(k: float, s: ArrayLike):
    """T_k(s): s inside [-k, k], k*sign(s) outside"""
    if k < 0:
        raise DomainError(f"truncation level must be nonnegative, got {k}")
    return np.clip(np.asarray(s, dtype=float), -k, k)


def psi(theta: float, u: ArrayLike):
    """Psi_theta(u) = sign(u)((1+|u|)^(1-theta) - 1)/(1-theta), log form at theta = 1"""
    return ThetaTransform(theta).forward(u)


def psi_inverse(theta: float, w: ArrayLike):
    """Inverse of psi; (1+(1-theta)|w|)^(1/(1-theta)) - 1 with odd extension"""
    return ThetaTransform(theta).inverse(w)


def power_test(p: float, u: ArrayLike):
    """((1+|u|)^p - 1) sign(u)"""
    if p <= 0:
        raise DomainError(f"power test exponent must be positive, got {p}")
    u = np.asarray(u, dtype=float)
    return np.sign(u) * np.expm1(p * np.log1p(np.abs(u)))


def shifted_power_test(p: float, k: float, u: ArrayLike):
    """[(1+|u|)^p - (1+k)^p]^+ sign(u); vanishes for |u| <= k"""
    if p <= 0:
        raise DomainError(f"power test exponent must be positive, got {p}")
    if k < 0:
        raise DomainError(f"threshold must be nonnegative, got {k}")
    u = np.asarray(u, dtype=float)
    a = np.abs(u)
    # (1+a)^p - (1+k)^p = (1+k)^p * expm1(p * log((1+a)/(1+k)))
    shift = p * (np.log1p(a) - np.log1p(k))
    g = np.exp(p * np.log1p(k)) * np.expm1(np.maximum(shift, 0.0))
    return np.sign(u) * g


def log_test(k: float, u: ArrayLike):
    """[log(1+|u|) - log(1+k)]^+ sign(u)"""
    if k < 0:
        raise DomainError(f"threshold must be nonnegative, got {k}")
    u = np.asarray(u, dtype=float)
    g = np.maximum(np.log1p(np.abs(u)) - np.log1p(k), 0.0)
    return np.sign(u) * g


def energy_variable(beta: float, u: ArrayLike):
    """(1/beta)((1+|u|)^beta - 1) sign(u).

    Its gradient is grad u / (1+|u|)^(1-beta). beta = (N-2)/(2(N-1)) gives the
    variable bounded in W^{1,2} on the borderline curve, beta = (1-theta)/2 the
    one for the L log L case. Shifted to vanish at u = 0.
    """
    if not 0.0 < beta < 1.0:
        raise DomainError(f"energy exponent must lie in (0, 1), got {beta}")
    u = np.asarray(u, dtype=float)
    return np.sign(u) * np.expm1(beta * np.log1p(np.abs(u))) / beta
