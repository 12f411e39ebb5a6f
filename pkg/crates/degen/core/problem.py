"""Problem data for the radial model problems"""
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy import integrate, special

from .errors import ConfigurationError, DomainError
from .transform import psi_inverse

logger = logging.getLogger(__name__)

BOUND_SAMPLES = 10_000


def sphere_area(N: int) -> float:
    """omega_{N-1} = 2 pi^(N/2) / Gamma(N/2), the area of the unit sphere in R^N"""
    return 2.0 * math.pi ** (N / 2.0) / special.gamma(N / 2.0)


def power_integral(lo, hi, s):
    """Elementwise integral of r^s over [lo, hi]; s == -1 gives the log primitive"""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if s == -1.0:
        with np.errstate(divide="ignore"):
            return np.log(hi) - np.log(lo)
    e = s + 1.0
    with np.errstate(divide="ignore"):
        return (np.power(hi, e) - np.power(lo, e)) / e


# Coefficient a(r) with declared bounds alpha <= a <= beta.
@dataclass(frozen=True)
class Coefficient:
    """Radial coefficient: constant(c) or sinusoidal base + amplitude*sin(frequency*r)"""

    kind: str = "constant"
    base: float = 1.0
    amplitude: float = 0.0
    frequency: float = 0.0

    @classmethod
    def constant(cls, c: float) -> "Coefficient":
        return cls("constant", float(c))

    @classmethod
    def sinusoidal(cls, base: float, amplitude: float, frequency: float) -> "Coefficient":
        return cls("sinusoidal", float(base), float(amplitude), float(frequency))

    @classmethod
    def parse(cls, text: str) -> "Coefficient":
        """Read `const:C` or `sin:BASE,AMP,FREQ`"""
        kind, _, args = text.partition(":")
        try:
            values = [float(v) for v in args.split(",") if v.strip()]
        except ValueError as e:
            raise ConfigurationError(f"bad coefficient '{text}'") from e
        if kind in ("const", "constant") and len(values) == 1:
            return cls.constant(values[0])
        if kind in ("sin", "sinusoidal") and len(values) == 3:
            return cls.sinusoidal(*values)
        raise ConfigurationError(
            f"bad coefficient '{text}': use const:C or sin:BASE,AMP,FREQ")

    @property
    def alpha(self) -> float:
        return self.base - abs(self.amplitude) if self.kind == "sinusoidal" else self.base

    @property
    def beta(self) -> float:
        return self.base + abs(self.amplitude) if self.kind == "sinusoidal" else self.base

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "constant":
            return np.full_like(r, self.base)
        return self.base + self.amplitude * np.sin(self.frequency * r)

    def describe(self) -> str:
        if self.kind == "constant":
            return f"const:{self.base!r}"
        return f"sin:{self.base!r},{self.amplitude!r},{self.frequency!r}"


# Source f(r), optionally replaced by its truncation T_n(f).
@dataclass(frozen=True)
class Source:
    """power_law: f = amp * r^-gamma; tabulated: linear interpolation of nodal values"""

    kind: str = "power_law"
    gamma: float = 0.0
    amp: float = 0.0
    radii: Tuple[float, ...] = ()
    values: Tuple[float, ...] = ()
    level: Optional[float] = None

    @classmethod
    def power_law(cls, gamma: float, amp: float = 1.0) -> "Source":
        return cls("power_law", float(gamma), float(amp))

    @classmethod
    def tabulated(cls, radii, values) -> "Source":
        radii = tuple(float(r) for r in radii)
        values = tuple(float(v) for v in values)
        if len(radii) != len(values) or len(radii) < 2:
            raise ConfigurationError("tabulated source needs matching radii/values, at least 2")
        if any(b <= a for a, b in zip(radii, radii[1:])):
            raise ConfigurationError("tabulated source radii must be strictly increasing")
        return cls("tabulated", radii=radii, values=values)

    @classmethod
    def zero(cls) -> "Source":
        return cls.power_law(0.0, 0.0)

    @property
    def is_zero(self) -> bool:
        if self.kind == "power_law":
            return self.amp == 0.0
        return not any(self.values)

    def truncated(self, n: Optional[float]) -> "Source":
        """T_n(f); None removes the truncation"""
        if n is not None and n <= 0:
            raise DomainError(f"truncation level must be positive, got {n}")
        return replace(self, level=None if n is None else float(n))

    def raw(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "tabulated":
            return np.interp(r, self.radii, self.values)
        if self.amp == 0.0:
            return np.zeros_like(r)
        with np.errstate(divide="ignore"):
            return self.amp * np.power(r, -self.gamma)

    def __call__(self, r):
        f = self.raw(r)
        if self.level is not None:
            f = np.clip(f, -self.level, self.level)
        return f

    def crossover(self) -> Optional[float]:
        """Radius where |amp| r^-gamma equals the truncation level"""
        if self.kind != "power_law" or self.level is None or self.amp == 0.0 or self.gamma == 0.0:
            return None
        return (abs(self.amp) / self.level) ** (1.0 / self.gamma)

    def pieces(self, lo: float, hi: float) -> List[Tuple[float, float, bool]]:
        """Split [lo, hi] into (a, b, truncated) pieces of a power-law source"""
        cuts = [lo, hi]
        rc = self.crossover()
        if rc is not None and lo < rc < hi:
            cuts = [lo, rc, hi]
        out = []
        for a, b in zip(cuts, cuts[1:]):
            truncated = False
            if self.level is not None and self.amp != 0.0:
                mid = 0.5 * (a + b)
                truncated = abs(self.amp) * mid ** (-self.gamma) > self.level
            out.append((a, b, truncated))
        return out

    def lebesgue_integral(self, N: int, m: float, lo: float, hi: float) -> float:
        """omega_{N-1} * integral of |f|^m r^(N-1) over [lo, hi]; inf when divergent"""
        omega = sphere_area(N)
        if self.kind == "tabulated":
            g = lambda r: abs(float(self(r))) ** m * r ** (N - 1)
            val, _ = integrate.quad(g, lo, hi, points=self._inner_points(lo, hi), limit=200)
            return omega * val
        total = 0.0
        for a, b, truncated in self.pieces(lo, hi):
            if truncated:
                total += self.level ** m * float(power_integral(a, b, N - 1.0))
                continue
            s = N - 1.0 - self.gamma * m
            if a == 0.0 and s <= -1.0 and self.amp != 0.0:
                return math.inf
            total += abs(self.amp) ** m * float(power_integral(a, b, s))
        return omega * total

    def llogl_integral(self, N: int, lo: float, hi: float) -> float:
        """omega_{N-1} * integral of |f| log(1+|f|) r^(N-1) over [lo, hi]"""
        omega = sphere_area(N)
        if self.kind == "tabulated":
            def g(r):
                f = abs(float(self(r)))
                return f * math.log1p(f) * r ** (N - 1)
            val, _ = integrate.quad(g, lo, hi, points=self._inner_points(lo, hi), limit=200)
            return omega * val
        if self.amp == 0.0:
            return 0.0
        total = 0.0
        A = abs(self.amp)
        for a, b, truncated in self.pieces(lo, hi):
            if truncated:
                total += self.level * math.log1p(self.level) * float(power_integral(a, b, N - 1.0))
                continue
            e = N - self.gamma
            if e <= 0 and a == 0.0:
                return math.inf
            # s = r^(N-gamma) maps the weighted integrand to a log-singular one
            p = self.gamma / e

            def g(s):
                return math.log1p(A * math.exp(-p * math.log(s)))

            val, _ = integrate.quad(g, a ** e, b ** e, limit=200)
            total += A * val / e
        return omega * total

    def _inner_points(self, lo, hi):
        pts = [r for r in self.radii if lo < r < hi][:50]
        return pts or None

    def describe(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"kind": self.kind, "level": self.level}
        if self.kind == "power_law":
            out.update(gamma=self.gamma, amp=self.amp)
        else:
            out.update(points=len(self.radii))
        return out


# ProblemSpec is the data of one radial instance of the degenerate problem.
@dataclass(frozen=True)
class ProblemSpec:
    """Dimension, theta, coefficient, source and domain (ball or annulus)"""

    N: int
    theta: float
    coefficient: Coefficient = field(default_factory=Coefficient)
    source: Source = field(default_factory=Source.zero)
    mode: str = "ball"
    r_min: float = 0.0
    inner_value: Optional[float] = None
    outer_radius: float = 1.0

    def __post_init__(self):
        errors = self.errors()
        if errors:
            raise DomainError("; ".join(errors))

    def errors(self) -> List[str]:
        """Validate the invariants and return a list of errors"""
        errors = []
        if int(self.N) != self.N or self.N < 3:
            errors.append(f"N must be an integer >= 3, got {self.N}")
        if not 0.0 <= self.theta <= 1.0:
            errors.append(f"theta must lie in [0, 1], got {self.theta}")
        if self.outer_radius <= 0:
            errors.append("outer_radius must be positive")
        if self.mode not in ("ball", "annulus"):
            errors.append(f"mode must be 'ball' or 'annulus', got {self.mode!r}")
        if self.mode == "ball" and self.r_min != 0.0:
            errors.append("ball mode has r_min = 0")
        if self.mode == "annulus" and not 0.0 < self.r_min < self.outer_radius:
            errors.append("annulus requires 0 < r_min < outer_radius")
        if self.coefficient.alpha <= 0:
            errors.append(f"coefficient lower bound alpha must be positive, got {self.coefficient.alpha}")
        elif self.outer_radius > 0:
            r = np.linspace(self.r_min, self.outer_radius, BOUND_SAMPLES)
            a = self.coefficient(r)
            slack = 1e-12 * self.coefficient.beta
            if a.min() < self.coefficient.alpha - slack or a.max() > self.coefficient.beta + slack:
                errors.append("coefficient leaves its declared bounds [alpha, beta]")
        if (self.source.kind == "power_law" and self.mode == "ball"
                and self.source.amp != 0.0 and self.source.gamma >= self.N):
            errors.append(f"power_law source needs gamma < N on the ball, got gamma={self.source.gamma}")
        if self.mode == "annulus" and self.inner_value is None and not self.has_closed_form:
            errors.append("annulus mode needs inner_value unless the closed form is available")
        return errors

    @property
    def alpha(self) -> float:
        return self.coefficient.alpha

    @property
    def beta(self) -> float:
        return self.coefficient.beta

    @property
    def omega(self) -> float:
        return sphere_area(self.N)

    @property
    def has_closed_form(self) -> bool:
        s = self.source
        return (self.coefficient.kind == "constant" and s.kind == "power_law"
                and s.level is None and s.gamma != self.N)

    @property
    def inner_dirichlet(self) -> Optional[float]:
        """Dirichlet value of u at r_min in annulus mode"""
        if self.mode != "annulus":
            return None
        if self.inner_value is not None:
            return float(self.inner_value)
        return float(closed_form_u(self, self.r_min))

    def with_source(self, source: Source) -> "ProblemSpec":
        return replace(self, source=source)

    def with_mode(self, mode: str, r_min: float = 0.0,
                  inner_value: Optional[float] = None) -> "ProblemSpec":
        return replace(self, mode=mode, r_min=r_min, inner_value=inner_value)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "N": self.N,
            "theta": self.theta,
            "coefficient": self.coefficient.describe(),
            "alpha": self.alpha,
            "beta": self.beta,
            "source": self.source.describe(),
            "mode": self.mode,
            "r_min": self.r_min,
            "inner_value": self.inner_dirichlet,
            "outer_radius": self.outer_radius,
        }


def closed_form_w(spec: ProblemSpec, r):
    """Radial solution of -(r^(N-1) c w')' = r^(N-1) amp r^-gamma with w(R) = 0.

    The r^(2-N) homogeneous part is dropped, so this is also the ball solution.
    """
    if not spec.has_closed_form:
        raise DomainError("closed form needs constant coefficient and an untruncated power law")
    s = spec.source
    c = spec.coefficient.base
    N, g, R = spec.N, s.gamma, spec.outer_radius
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        if g == 2.0:
            return -s.amp / (c * (N - 2)) * (np.log(r) - math.log(R))
        K = -s.amp / (c * (2.0 - g) * (N - g))
        return K * (np.power(r, 2.0 - g) - R ** (2.0 - g))


def closed_form_u(spec: ProblemSpec, r):
    """u = Psi_theta^-1(w) for the closed-form w"""
    return psi_inverse(spec.theta, closed_form_w(spec, r))
