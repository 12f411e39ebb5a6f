"""Norms, distribution functions, fitted exponents and weak-form residuals.

Every integral is an N-dimensional one: omega_{N-1} times the radial integral
with weight r^(N-1). Cells are split exactly where the piecewise-linear field
crosses a level, so integrals over {|u| >= k} have no indicator error.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DomainError
from .mesh import NodalField, gauss_rule
from .problem import ProblemSpec, sphere_area
from .transform import flux_factor, truncate

logger = logging.getLogger(__name__)

QUAD_POINTS = 5
MIN_FIT_NODES = 8


def _pieces(field: NodalField, level: Optional[float] = None, below: bool = False,
            strict: bool = False, window: Optional[Tuple[float, float]] = None):
    """(cell, t_lo, t_hi) sub-intervals in local cell coordinates.

    Keeps the parts where |u| >= level (|u| > level when strict, |u| < level
    when below) and whose radius lies in window.
    """
    mesh = field.mesh
    v0, v1 = field.values[:-1], field.values[1:]
    M = mesh.cells
    cuts = [np.zeros(M), np.ones(M)]
    if level is not None:
        dv = v1 - v0
        for c in (level, -level):
            with np.errstate(divide="ignore", invalid="ignore"):
                t = (c - v0) / dv
            cuts.append(np.where(np.isfinite(t) & (t > 0) & (t < 1), t, 0.0))
    ra, h = mesh.nodes[:-1], mesh.widths
    if window is not None:
        for x in window:
            cuts.append(np.clip((x - ra) / h, 0.0, 1.0))
    T = np.sort(np.stack(cuts, axis=1), axis=1)
    lo, hi = T[:, :-1], T[:, 1:]
    mid = 0.5 * (lo + hi)
    keep = hi > lo
    if level is not None:
        um = np.abs(v0[:, None] * (1.0 - mid) + v1[:, None] * mid)
        if below:
            keep &= um < level
        elif strict:
            keep &= um > level
        else:
            keep &= um >= level
    if window is not None:
        rm = ra[:, None] + h[:, None] * mid
        keep &= (rm >= window[0]) & (rm <= window[1])
    cell = np.broadcast_to(np.arange(M)[:, None], lo.shape)[keep]
    return cell, lo[keep], hi[keep]


@dataclass
class _Samples:
    cell: np.ndarray
    t: np.ndarray
    r: np.ndarray
    weight: np.ndarray

    def of(self, f: NodalField) -> np.ndarray:
        v = f.values
        return v[self.cell][:, None] * (1.0 - self.t) + v[self.cell + 1][:, None] * self.t

    def slope(self, f: NodalField) -> np.ndarray:
        return np.broadcast_to(f.slopes[self.cell][:, None], self.t.shape)


def _sample(field: NodalField, N: int, npt: int = QUAD_POINTS, **kwargs) -> _Samples:
    cell, lo, hi = _pieces(field, **kwargs)
    t_ref, w_ref = gauss_rule(npt)
    span = (hi - lo)[:, None]
    t = lo[:, None] + span * t_ref[None, :]
    h = field.mesh.widths[cell][:, None]
    r = field.mesh.nodes[cell][:, None] + h * t
    weight = sphere_area(N) * w_ref[None, :] * span * h * r ** (N - 1)
    return _Samples(cell, t, r, weight)


def _content(field: NodalField, N: int, **kwargs) -> Tuple[np.ndarray, np.ndarray]:
    """(cell, omega * integral of r^(N-1)) for every kept piece"""
    cell, lo, hi = _pieces(field, **kwargs)
    ra, h = field.mesh.nodes[cell], field.mesh.widths[cell]
    r_lo, r_hi = ra + h * lo, ra + h * hi
    return cell, sphere_area(N) * (r_hi ** N - r_lo ** N) / N


def integrate(field: NodalField, integrand: Callable, N: int, **kwargs) -> float:
    """omega * integral of integrand(r, u, u') r^(N-1) dr, optionally restricted (level=, window=)"""
    s = _sample(field, N, **kwargs)
    return float(np.sum(s.weight * integrand(s.r, s.of(field), s.slope(field))))


def lebesgue_integral(field: NodalField, p: float, N: int, **kwargs) -> float:
    """omega * integral |u|^p r^(N-1), optionally restricted (level=, window=)"""
    s = _sample(field, N, **kwargs)
    return float(np.sum(s.weight * np.abs(s.of(field)) ** p))


def lebesgue_norm(field: NodalField, p: float, N: int) -> float:
    """(omega * integral |u|^p r^(N-1) dr)^(1/p)"""
    if p < 1:
        raise DomainError(f"Lebesgue exponent must be >= 1, got {p}")
    return lebesgue_integral(field, p, N) ** (1.0 / p)


def w11_seminorm(field: NodalField, N: int, **kwargs) -> float:
    """omega * integral |u'| r^(N-1) dr, exact per cell"""
    cell, content = _content(field, N, **kwargs)
    return float(np.sum(np.abs(field.slopes[cell]) * content))


def gradient_lq_integral(field: NodalField, q: float, N: int) -> float:
    """omega * integral |u'|^q r^(N-1) dr"""
    cell, content = _content(field, N)
    return float(np.sum(np.abs(field.slopes[cell]) ** q * content))


def weighted_gradient_energy(field: NodalField, s: float, N: int, **kwargs) -> float:
    """omega * integral |u'|^2 (1+|u|)^-s r^(N-1) dr"""
    if s < 0:
        raise DomainError(f"weight exponent must be nonnegative, got {s}")
    smp = _sample(field, N, **kwargs)
    u = smp.of(field)
    return float(np.sum(smp.weight * smp.slope(field) ** 2 * np.exp(-s * np.log1p(np.abs(u)))))


def solution_norms(field: NodalField, N: int, theta: float) -> Dict[str, float]:
    """Named norms reported with every solve"""
    s = N / (N - 1.0)
    return {
        "W11": w11_seminorm(field, N),
        "L_N/(N-1)": lebesgue_norm(field, s, N),
        "E_N/(N-1)": weighted_gradient_energy(field, s, N),
        "E_theta+1": weighted_gradient_energy(field, theta + 1.0, N),
    }


def distribution_function(field: NodalField, t_grid: Sequence[float], N: int) -> List[Tuple[float, float]]:
    """[(t, meas{|u| > t})] with level sets located cell by cell"""
    if len(t_grid) == 0:
        raise DomainError("distribution function needs a nonempty t grid")
    out = []
    for t in t_grid:
        _, content = _content(field, N, level=float(t), strict=True)
        out.append((float(t), float(np.sum(content))))
    return out


# ExponentFit is the least-squares slope of log|u| against log r.
@dataclass
class ExponentFit:
    fitted_slope: float
    window: Tuple[float, float]
    residual: float
    predicted: Optional[float] = None
    relative_gap: Optional[float] = None
    nodes: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {"predicted": self.predicted, "fitted": self.fitted_slope,
                "relative_gap": self.relative_gap, "window": list(self.window),
                "residual": self.residual, "nodes": self.nodes}


def predicted_decay_slope(spec: ProblemSpec) -> Optional[float]:
    """(2-gamma)/(1-theta) for singular power laws; 0 for bounded solutions"""
    s = spec.source
    if s.kind != "power_law" or s.level is not None:
        return None
    if s.amp == 0.0 or s.gamma < 2.0:
        return 0.0
    if spec.theta >= 1.0 or s.gamma == 2.0:
        return None
    return (2.0 - s.gamma) / (1.0 - spec.theta)


def fit_decay_slope(field: NodalField, window: Tuple[float, float],
                    predicted: Optional[float] = None) -> ExponentFit:
    """Slope of log u versus log r over the nodes inside window"""
    r_a, r_b = window
    if not 0 < r_a < r_b:
        raise DomainError(f"need 0 < r_a < r_b, got {window}")
    if r_b > field.mesh.outer_radius:
        raise DomainError(f"window {window} leaves the domain (R = {field.mesh.outer_radius:g})")
    r = field.mesh.nodes
    sel = (r >= r_a) & (r <= r_b)
    if np.count_nonzero(sel) < MIN_FIT_NODES:
        raise DomainError(
            f"window {window} holds {np.count_nonzero(sel)} nodes, need {MIN_FIT_NODES}")
    u = field.values[sel]
    if np.any(u <= 0):
        raise DomainError("field has nonpositive values in the fit window")
    coeffs, residuals, *_ = np.polyfit(np.log(r[sel]), np.log(u), 1, full=True)
    slope = float(coeffs[0])
    residual = float(residuals[0]) if residuals.size else 0.0
    gap = None
    if predicted is not None:
        gap = abs(slope - predicted) / max(abs(predicted), 1e-12) if predicted else abs(slope)
    return ExponentFit(slope, (float(r_a), float(r_b)), residual, predicted, gap,
                       int(np.count_nonzero(sel)))


# ThresholdResult is the empirical gradient integrability exponent q*.
@dataclass
class ThresholdResult:
    q_star: float
    interval: Tuple[float, float]
    blow_up: bool
    monotone: bool = True
    ratios: Dict[float, List[float]] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {"q_star": self.q_star, "interval": list(self.interval),
                "blow_up": self.blow_up, "monotone": self.monotone,
                "ratios": {format(q, ".6g"): r for q, r in sorted(self.ratios.items())}}


def gradient_integrability_threshold(
    spec: ProblemSpec,
    q_range: Tuple[float, float],
    refinements: Sequence[int],
    grading: float = 3.0,
    delta: float = 0.05,
    q_tol: float = 1e-4,
    fields: Optional[List[NodalField]] = None,
) -> ThresholdResult:
    """Bisect on q for the onset of growth of omega*integral |u'|^q under refinement.

    Growth means every successive refinement ratio exceeds 1 + delta.
    """
    q_lo, q_hi = q_range
    if not q_lo < q_hi:
        raise DomainError(f"need q_lo < q_hi, got {q_range}")
    if len(refinements) < 3:
        raise DomainError("threshold study needs at least 3 refinement levels")
    if fields is None:
        from .mesh import build_mesh
        from .solver import oracle_solve

        ball = spec.with_mode("ball")
        fields = [oracle_solve(ball, build_mesh(ball, M, grading)).u for M in refinements]
    ratios: Dict[float, List[float]] = {}

    def state(q: float) -> str:
        values = [gradient_lq_integral(f, q, spec.N) for f in fields]
        rs = [b / a if a > 0 else (1.0 if b == 0 else math.inf)
              for a, b in zip(values, values[1:])]
        ratios[q] = rs
        if all(x > 1.0 + delta for x in rs):
            return "blow_up"
        if all(x <= 1.0 + delta for x in rs):
            return "bounded"
        return "mixed"

    lo, hi = float(q_lo), float(q_hi)
    s_hi = state(hi)
    if s_hi == "bounded":
        logger.info("No gradient blow-up up to q=%g", hi)
        return ThresholdResult(hi, (hi, hi), False, True, ratios)
    s_lo = state(lo)
    if s_lo == "blow_up":
        return ThresholdResult(lo, (lo, lo), True, True, ratios)
    if "mixed" in (s_lo, s_hi):
        logger.warning("Refinement ratios are not monotone at the ends of %s", q_range)
        return ThresholdResult(0.5 * (lo + hi), (lo, hi), True, False, ratios)
    while hi - lo > q_tol:
        mid = 0.5 * (lo + hi)
        s = state(mid)
        if s == "blow_up":
            hi = mid
        elif s == "bounded":
            lo = mid
        else:
            logger.warning("Non-monotone refinement ratios near q=%g", mid)
            return ThresholdResult(0.5 * (lo + hi), (lo, hi), True, False, ratios)
    return ThresholdResult(0.5 * (lo + hi), (lo, hi), True, True, ratios)


# RadialBump is the test function ((r-a)(b-r))^2 scaled to unit height.
@dataclass(frozen=True)
class RadialBump:
    a: float
    b: float

    @property
    def _d(self) -> float:
        return 0.5 * (self.b - self.a)

    def value(self, r):
        r = np.asarray(r, dtype=float)
        inside = (r > self.a) & (r < self.b)
        return np.where(inside, ((r - self.a) * (self.b - r)) ** 2, 0.0) / self._d ** 4

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        inside = (r > self.a) & (r < self.b)
        g = 2.0 * (r - self.a) * (self.b - r) * (self.a + self.b - 2.0 * r)
        return np.where(inside, g, 0.0) / self._d ** 4

    @property
    def w1inf(self) -> float:
        """max|phi| + max|phi'|"""
        return 1.0 + 8.0 / (3.0 * math.sqrt(3.0) * self._d)


DEFAULT_BUMPS = ((0.2, 0.8), (0.1, 0.5), (0.3, 0.9), (0.4, 0.7), (0.5, 0.95))


def default_bumps(spec: ProblemSpec, supports=DEFAULT_BUMPS) -> List[RadialBump]:
    """Bumps with supports given as fractions of the outer radius"""
    R = spec.outer_radius
    return [RadialBump(a * R, b * R) for a, b in supports]


def distributional_residual(result, spec: ProblemSpec,
                            test_set: Optional[Sequence[RadialBump]] = None) -> float:
    """max over bumps of |int a u'(1+|u|)^-theta phi' - int f phi| / ||phi||_{W^{1,inf}}"""
    test_set = list(test_set) if test_set is not None else default_bumps(spec)
    u = result.u
    smp = _sample(u, spec.N)
    uq = smp.of(u)
    flux = spec.coefficient(smp.r) * smp.slope(u) * flux_factor(spec.theta, uq)
    f = spec.source(smp.r)
    worst = 0.0
    for phi in test_set:
        if phi.a < u.mesh.r_min or phi.b > u.mesh.outer_radius or phi.a >= phi.b:
            raise DomainError(f"test function support ({phi.a}, {phi.b}) leaves the domain")
        lhs = np.sum(smp.weight * flux * phi.derivative(smp.r))
        rhs = np.sum(smp.weight * f * phi.value(smp.r))
        worst = max(worst, abs(float(lhs - rhs)) / phi.w1inf)
    return worst


def entropy_residual(result, spec: ProblemSpec,
                     phi: Union[NodalField, Callable, float], k: float) -> float:
    """lhs - rhs of the entropy inequality tested with T_k(u - phi)"""
    if k <= 0:
        raise DomainError(f"entropy level k must be positive, got {k}")
    u = result.u
    mesh = u.mesh
    if isinstance(phi, NodalField):
        phi_field = phi
    elif callable(phi):
        phi_field = NodalField(mesh, phi(mesh.nodes))
    else:
        phi_field = NodalField(mesh, np.full(mesh.nodes.size, float(phi)))
    d = u - phi_field

    inside = _sample(d, spec.N, level=k, below=True)
    uq = inside.of(u)
    lhs = np.sum(inside.weight * spec.coefficient(inside.r) * inside.slope(u)
                 * flux_factor(spec.theta, uq) * inside.slope(d))
    whole = _sample(d, spec.N)
    rhs = np.sum(whole.weight * spec.source(whole.r) * truncate(k, whole.of(d)))
    return float(lhs - rhs)
