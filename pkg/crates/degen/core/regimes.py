"""Regularity regimes of the (theta, m) plane.

Inputs given as ints, Fractions or decimal strings are compared exactly; floats
are read through their shortest decimal representation and compared with an
absolute tolerance of 1e-12, so a point such as m = 1.2 still lands on the
borderline curve.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple, Union

from .errors import DomainError

logger = logging.getLogger(__name__)

Number = Union[int, float, Fraction, str]

FLOAT_TOLERANCE = Fraction(1, 10**12)


class Region(str, Enum):
    A = "A"
    B = "B"
    C = "C"
    D = "D"
    CURVE_THM1 = "CurveThm1"
    POINT_THM2 = "PointThm2"
    THETA_ONE = "ThetaOne"
    UNCOVERED = "Uncovered"


class SpaceKind(str, Enum):
    SOBOLEV = "W^{1,p}"
    LEBESGUE = "L^p"
    MARCINKIEWICZ = "M^p"
    LINFTY = "L^inf"


class SolutionNotion(str, Enum):
    WEAK = "weak"
    DISTRIBUTIONAL = "distributional"
    ENTROPY = "entropy"


def _exact(x: Number) -> Tuple[Fraction, bool]:
    """Return (value, is_exact)."""
    if isinstance(x, Fraction):
        return x, True
    if isinstance(x, bool):
        raise DomainError("boolean is not a number")
    if isinstance(x, int):
        return Fraction(x), True
    if isinstance(x, str):
        try:
            return Fraction(x.strip()), True
        except (ValueError, ZeroDivisionError) as e:
            raise DomainError(f"cannot read '{x}' as a number") from e
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"non-finite value {x}")
    return Fraction(repr(x)), False


def _cmp(a: Fraction, b: Fraction, tol: Fraction) -> int:
    if not tol:
        return (a > b) - (a < b)
    d = a - b
    if abs(d) <= tol:
        return 0
    return 1 if d > 0 else -1


# ClassPoint is a point of the parameter plane for a given dimension.
@dataclass(frozen=True)
class ClassPoint:
    """(N, theta, m) plus whether f log(1+|f|) is integrable"""

    N: int
    theta: Number
    m: Number
    f_in_LlogL: bool = False

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 3:
            raise DomainError(f"dimension N must be an integer >= 3, got {self.N}")
        theta, _ = _exact(self.theta)
        m, _ = _exact(self.m)
        if not 0 <= theta <= 1:
            raise DomainError(f"theta must lie in [0, 1], got {self.theta}")
        if m < 1:
            raise DomainError(f"m must be >= 1, got {self.m}")


@dataclass(frozen=True)
class SpaceTerm:
    kind: SpaceKind
    exponent: Optional[float] = None
    # True when the membership holds for every exponent below `exponent`
    every_below: bool = False

    def label(self) -> str:
        if self.kind == SpaceKind.LINFTY:
            return "L^inf"
        if self.every_below:
            return f"L^p, p<{_fmt(self.exponent)}"
        if self.kind == SpaceKind.SOBOLEV:
            return f"W^{{1,{_fmt(self.exponent)}}}"
        if self.kind == SpaceKind.LEBESGUE:
            return f"L^{{{_fmt(self.exponent)}}}"
        return f"M^{{{_fmt(self.exponent)}}}"

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind.value, "exponent": self.exponent,
                "every_below": self.every_below, "label": self.label()}


def _fmt(x: Optional[float]) -> str:
    if x is None:
        return "?"
    if math.isinf(x):
        return "inf"
    return format(x, ".12g")


# RegimeReport is the classifier's answer for one ClassPoint.
@dataclass
class RegimeReport:
    """Region label with the predicted solution spaces and critical m values"""

    region: Region
    solution_space: List[SpaceTerm]
    solution_notion: Optional[SolutionNotion]
    boundary_values: Tuple[float, float, float]
    gradient_space: Optional[SpaceTerm] = None
    point: Optional[ClassPoint] = field(default=None, repr=False)

    @property
    def q(self) -> Optional[float]:
        """Reported W^{1,q} exponent, if any"""
        for term in self.solution_space:
            if term.kind == SpaceKind.SOBOLEV:
                return term.exponent
        return None

    def to_dict(self) -> Dict[str, Any]:
        m_lower, m_upper, m_linfty = self.boundary_values
        out = {
            "region": self.region.value,
            "solution_space": [t.to_dict() for t in self.solution_space],
            "space": " ∩ ".join(t.label() for t in self.solution_space),
            "solution_notion": self.solution_notion.value if self.solution_notion else None,
            "gradient_space": self.gradient_space.to_dict() if self.gradient_space else None,
            "boundary_values": {"m_lower": m_lower, "m_upper": m_upper, "m_Linfty": m_linfty},
        }
        if self.point is not None:
            out["point"] = {"N": self.point.N, "theta": float(_exact(self.point.theta)[0]),
                            "m": float(_exact(self.point.m)[0]),
                            "f_in_LlogL": self.point.f_in_LlogL}
        return out


def _conjugate(N: int, m: Fraction) -> Fraction:
    return N * m / (N - m)


def _critical(N: int, theta: Fraction) -> Tuple[Fraction, Fraction, Fraction]:
    m_lower = Fraction(N) / (N + 1 - theta * (N - 1))
    m_upper = Fraction(2 * N) / (N + 2 - theta * (N - 2))
    return m_lower, m_upper, Fraction(N, 2)


def _q(N: int, theta: Fraction, m: Fraction) -> Fraction:
    denom = N - m * (1 + theta)
    if theta >= 1:
        raise DomainError("q exponent requires theta < 1")
    if denom <= 0:
        raise DomainError(f"q exponent undefined: N - m(1+theta) = {float(denom)} <= 0")
    return N * m * (1 - theta) / denom


def _check_dimension(N: int):
    if int(N) != N or N < 3:
        raise DomainError(f"dimension N must be an integer >= 3, got {N}")


def sobolev_conjugate(N: int, m: Number) -> float:
    """m* = Nm/(N-m) for 1 <= m < N"""
    _check_dimension(N)
    m, _ = _exact(m)
    if not 1 <= m < N:
        raise DomainError(f"m_star undefined for m = {float(m)}: need 1 <= m < N = {N}")
    return float(_conjugate(N, m))


def sobolev_conjugates(N: int, m: Number) -> Tuple[float, float]:
    """(m*, m**) with m** = (m*)* = Nm/(N-2m); m** needs m < N/2"""
    m_star = sobolev_conjugate(N, m)
    m_exact, _ = _exact(m)
    if not m_exact < Fraction(N, 2):
        raise DomainError(
            f"m_star_star undefined for m = {float(m_exact)}: need m < N/2 = {N / 2}")
    return m_star, float(N * m_exact / (N - 2 * m_exact))


def critical_m_values(N: int, theta: Number) -> Tuple[float, float, float]:
    """(m_lower, m_upper, m_Linfty) = (N/(N+1-theta(N-1)), 2N/(N+2-theta(N-2)), N/2)"""
    _check_dimension(N)
    t, _ = _exact(theta)
    if not 0 <= t <= 1:
        raise DomainError(f"theta must lie in [0, 1], got {theta}")
    return tuple(float(v) for v in _critical(N, t))


def q_exponent(N: int, theta: Number, m: Number) -> float:
    """q = Nm(1-theta)/(N-m(1+theta))"""
    _check_dimension(N)
    return float(_q(N, _exact(theta)[0], _exact(m)[0]))


def classify(point: ClassPoint) -> RegimeReport:
    """Assign the unique region of `point`, checked in the documented priority order"""
    N = int(point.N)
    theta, exact_theta = _exact(point.theta)
    m, exact_m = _exact(point.m)
    tol = Fraction(0) if exact_theta and exact_m else FLOAT_TOLERANCE
    return _classify(N, theta, m, point.f_in_LlogL, tol, _critical(N, theta), point)


def _classify(N, theta, m, llogl, tol, critical, point=None) -> RegimeReport:
    m_lower, m_upper, m_linfty = critical
    bounds = (float(m_lower), float(m_upper), float(m_linfty))
    theta_line = Fraction(1, N - 1)

    def report(region, spaces, notion, gradient=None):
        logger.debug("N=%d theta=%s m=%s -> %s", N, theta, m, region.value)
        return RegimeReport(region, spaces, notion, bounds, gradient, point)

    def decay_exponent() -> Optional[float]:
        # m**(1-theta); only defined while m < N/2
        if _cmp(m, m_linfty, tol) >= 0:
            return None
        return float(N * m / (N - 2 * m) * (1 - theta))

    if _cmp(theta, Fraction(1), tol) == 0:
        return report(Region.THETA_ONE,
                      [SpaceTerm(SpaceKind.SOBOLEV, 2.0),
                       SpaceTerm(SpaceKind.LEBESGUE, math.inf, every_below=True)],
                      SolutionNotion.WEAK)

    if _cmp(m, m_linfty, tol) > 0:
        return report(Region.A,
                      [SpaceTerm(SpaceKind.SOBOLEV, 2.0), SpaceTerm(SpaceKind.LINFTY)],
                      SolutionNotion.WEAK)

    if _cmp(m, m_upper, tol) >= 0 and _cmp(m, m_linfty, tol) < 0:
        return report(Region.B,
                      [SpaceTerm(SpaceKind.SOBOLEV, 2.0),
                       SpaceTerm(SpaceKind.LEBESGUE, decay_exponent())],
                      SolutionNotion.WEAK)

    above_line = _cmp(theta, theta_line, tol) > 0
    if _cmp(m, m_lower, tol) == 0 and above_line:
        return report(Region.CURVE_THM1, [SpaceTerm(SpaceKind.SOBOLEV, 1.0)],
                      SolutionNotion.DISTRIBUTIONAL)

    if (_cmp(m, m_lower, tol) > 0 and _cmp(m, m_upper, tol) < 0
            and _cmp(theta, theta_line, tol) >= 0):
        q = float(_q(N, theta, m))
        return report(Region.C, [SpaceTerm(SpaceKind.SOBOLEV, q)],
                      SolutionNotion.DISTRIBUTIONAL,
                      SpaceTerm(SpaceKind.LEBESGUE, q))

    if (_cmp(theta, theta_line, tol) == 0 and _cmp(m, Fraction(1), tol) == 0
            and llogl):
        return report(Region.POINT_THM2, [SpaceTerm(SpaceKind.SOBOLEV, 1.0)],
                      SolutionNotion.DISTRIBUTIONAL)

    if _cmp(m, max(Fraction(1), m_lower), tol) <= 0:
        spaces = []
        exponent = decay_exponent()
        if exponent is not None:
            spaces.append(SpaceTerm(SpaceKind.MARCINKIEWICZ, exponent))
        gradient = None
        try:
            gradient = SpaceTerm(SpaceKind.MARCINKIEWICZ, float(_q(N, theta, m)))
        except DomainError:
            pass
        return report(Region.D, spaces, SolutionNotion.ENTROPY, gradient)

    return report(Region.UNCOVERED, [], None)


def _grid(lo: Fraction, hi: Fraction, steps: int) -> List[Fraction]:
    return [lo + (hi - lo) * Fraction(j, steps - 1) for j in range(steps)]


def phase_diagram_grid(
    N: int,
    theta_steps: int,
    m_min: Number,
    m_max: Number,
    m_steps: int,
    include_curve: bool = True,
) -> List[Tuple[float, float, str]]:
    """Row-major (theta outer, m inner) table of (theta, m, region) for plotting.

    With include_curve every row with 1/(N-1) < theta < 1 also carries the
    borderline point m = m_lower when it falls inside the m range.
    """
    _check_dimension(N)
    if theta_steps < 2 or m_steps < 2:
        raise DomainError("grid needs at least 2 steps per axis")
    lo, _ = _exact(m_min)
    hi, _ = _exact(m_max)
    if not 1 <= lo < hi:
        raise DomainError(f"need 1 <= m_min < m_max, got {m_min}, {m_max}")

    rows = []
    m_values = _grid(lo, hi, m_steps)
    theta_line = Fraction(1, N - 1)
    for theta in _grid(Fraction(0), Fraction(1), theta_steps):
        critical = _critical(N, theta)
        row_ms = m_values
        if include_curve and theta_line < theta < 1:
            m_lower = critical[0]
            if lo < m_lower < hi and m_lower not in m_values:
                row_ms = sorted(m_values + [m_lower])
        for m in row_ms:
            region = _classify(N, theta, m, False, Fraction(0), critical).region
            rows.append((float(theta), float(m), region.value))
    logger.info("Phase diagram for N=%d: %d cells", N, len(rows))
    return rows
