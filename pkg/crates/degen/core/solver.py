"""Radial Galerkin solver for -div(a grad u / (1+|u|)^theta) = f.

In radial coordinates the problem is -(r^(N-1) a(r) c(r) u')' = r^(N-1) f(r)
with c = (1+|u|)^-theta. Continuous P1 elements give a symmetric tridiagonal
M-matrix; every integral carries the sphere area omega_{N-1}.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np
from scipy import linalg

from . import analysis
from .errors import AssemblyError, ConfigurationError, NonConvergenceError
from .mesh import NodalField, RadialMesh
from .problem import ProblemSpec, power_integral
from .transform import ThetaTransform, flux_factor

logger = logging.getLogger(__name__)

STIFFNESS_POINTS = 3
LOAD_POINTS = 5
_TINY = 1e-300


# SolveConfig holds the Picard iteration settings.
@dataclass(frozen=True)
class SolveConfig:
    tol_update: float = 1e-10
    max_iter: int = 200
    damping: float = 1.0
    damping_floor: float = 1.0 / 16.0
    # residual growth beyond (1 + residual_slack) counts as an increase
    residual_slack: float = 1.0
    # steps at the floor whose update shrinks by less than stall_ratio before giving up
    stall_limit: int = 8
    stall_ratio: float = 0.99

    def __post_init__(self):
        if not self.tol_update > 0:
            raise ConfigurationError("tol_update must be positive")
        if self.max_iter < 1:
            raise ConfigurationError("max_iter must be at least 1")
        if not 0 < self.damping <= 1:
            raise ConfigurationError("damping must lie in (0, 1]")
        if not 0 < self.damping_floor <= self.damping:
            raise ConfigurationError("damping_floor must lie in (0, damping]")
        if self.residual_slack < 0:
            raise ConfigurationError("residual_slack must be nonnegative")
        if self.stall_limit < 1:
            raise ConfigurationError("stall_limit must be at least 1")
        if not 0 < self.stall_ratio <= 1:
            raise ConfigurationError("stall_ratio must lie in (0, 1]")

    def to_dict(self) -> Dict[str, Any]:
        return {"tol_update": self.tol_update, "max_iter": self.max_iter,
                "damping": self.damping, "damping_floor": self.damping_floor,
                "residual_slack": self.residual_slack, "stall_limit": self.stall_limit,
                "stall_ratio": self.stall_ratio}


# SolveResult carries u and w = Psi(u) with iteration diagnostics.
@dataclass
class SolveResult:
    spec: ProblemSpec
    u: NodalField
    w: NodalField
    iterations: int
    final_update: float
    residual_norm: float
    method: str
    converged: bool = True
    failure: Optional[str] = None
    norms: Dict[str, float] = field(default_factory=dict)

    @property
    def mesh(self) -> RadialMesh:
        return self.u.mesh

    def raise_for_status(self):
        """Raise NonConvergenceError if the iteration did not converge"""
        if not self.converged:
            raise NonConvergenceError(
                f"{self.method} solve did not converge: {self.failure}", self)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "spec": self.spec.to_dict(),
            "mesh": self.mesh.to_dict(),
            "method": self.method,
            "iterations": self.iterations,
            "final_update": self.final_update,
            "residual_norm": self.residual_norm,
            "converged": self.converged,
            "failure": self.failure,
            "norms": dict(self.norms),
        }


def conductances(spec: ProblemSpec, mesh: RadialMesh, factor=None) -> np.ndarray:
    """Per-cell omega * integral(a c r^(N-1)) / h^2 with 3-point Gauss"""
    r, w, _ = mesh.quadrature(STIFFNESS_POINTS)
    integrand = spec.coefficient(r) * r ** (spec.N - 1)
    if factor is not None:
        integrand = integrand * factor
    return spec.omega * np.sum(w * integrand, axis=1) / mesh.widths ** 2


def _power_hat_loads(spec: ProblemSpec, mesh: RadialMesh):
    """Exact hat-function loads of a (possibly truncated) power-law source"""
    src = spec.source
    N = spec.N
    ra, rb = mesh.nodes[:-1], mesh.nodes[1:]
    h = rb - ra
    rc = src.crossover()
    xs = rb.copy() if rc is None else np.clip(rc, ra, rb)
    left = np.zeros(mesh.cells)
    right = np.zeros(mesh.cells)
    for lo, hi in ((ra, xs), (xs, rb)):
        active = hi > lo
        if not np.any(active):
            continue
        lo_a, hi_a = lo[active], hi[active]
        truncated = np.zeros(lo_a.size, dtype=bool)
        if src.level is not None:
            mid = 0.5 * (lo_a + hi_a)
            truncated = abs(src.amp) * mid ** (-src.gamma) > src.level
        for flag, s, coef in ((False, N - 1.0 - src.gamma, src.amp),
                              (True, N - 1.0, math.copysign(src.level or 0.0, src.amp))):
            sel = truncated == flag
            if not np.any(sel):
                continue
            a, b = lo_a[sel], hi_a[sel]
            i_s = power_integral(a, b, s)
            i_s1 = power_integral(a, b, s + 1.0)
            idx = np.flatnonzero(active)[sel]
            left[idx] += coef * (rb[idx] * i_s - i_s1) / h[idx]
            right[idx] += coef * (i_s1 - ra[idx] * i_s) / h[idx]
    return left, right


def load_vector(spec: ProblemSpec, mesh: RadialMesh) -> np.ndarray:
    """omega * integral(r^(N-1) f hat_i) for every node"""
    b = np.zeros(mesh.nodes.size)
    if spec.source.is_zero:
        return b
    if spec.source.kind == "power_law":
        left, right = _power_hat_loads(spec, mesh)
    else:
        r, w, t = mesh.quadrature(LOAD_POINTS)
        fr = spec.source(r) * r ** (spec.N - 1)
        left = np.sum(w * fr * (1.0 - t), axis=1)
        right = np.sum(w * fr * t, axis=1)
    b[:-1] += left
    b[1:] += right
    return spec.omega * b


def apply_stiffness(cond: np.ndarray, u: np.ndarray) -> np.ndarray:
    """K u for the tridiagonal matrix built from cell conductances"""
    flux = cond * np.diff(u)
    Ku = np.zeros_like(u)
    Ku[:-1] -= flux
    Ku[1:] += flux
    return Ku


def _dirichlet(spec: ProblemSpec, mesh: RadialMesh, inner: Optional[float]) -> np.ndarray:
    u = np.zeros(mesh.nodes.size)
    if spec.mode == "annulus":
        u[0] = inner
    return u


def _free_range(spec: ProblemSpec, mesh: RadialMesh):
    return (1 if spec.mode == "annulus" else 0), mesh.nodes.size - 1


def solve_tridiagonal(cond: np.ndarray, b: np.ndarray, boundary: np.ndarray,
                      first: int, last: int) -> np.ndarray:
    """Solve K u = b on nodes first..last-1 with the remaining nodes fixed by `boundary`"""
    if not np.all(np.isfinite(cond)) or np.any(cond <= 0):
        raise AssemblyError("nonpositive or non-finite cell conductance: coefficient bound violated")
    rhs = (b - apply_stiffness(cond, boundary))[first:last]
    diag = np.zeros(b.size)
    diag[:-1] += cond
    diag[1:] += cond
    ab = np.zeros((2, last - first))
    ab[1] = diag[first:last]
    ab[0, 1:] = -cond[first:last - 1]
    try:
        x = linalg.solveh_banded(ab, rhs, lower=False)
    except (linalg.LinAlgError, ValueError) as e:
        raise AssemblyError(f"stiffness matrix is not SPD: {e}") from e
    u = boundary.copy()
    u[first:last] = x
    return u


def _relative_residual(cond, u, b, first, last) -> float:
    """|Ku - b| relative to the absolute cell fluxes plus |b| on the free nodes"""
    Ku = apply_stiffness(cond, u)
    r = (Ku - b)[first:last]
    flux = np.abs(cond * np.diff(u))
    size = np.zeros_like(u)
    size[:-1] += flux
    size[1:] += flux
    scale = max(np.linalg.norm(size[first:last]) + np.linalg.norm(b[first:last]), _TINY)
    return float(np.linalg.norm(r) / scale)


def lumped_mass(spec: ProblemSpec, mesh: RadialMesh) -> np.ndarray:
    """omega * integral(hat_i r^(N-1)), the weights of the discrete L2 norm"""
    r, w, t = mesh.quadrature(STIFFNESS_POINTS)
    wr = w * r ** (spec.N - 1)
    m = np.zeros(mesh.nodes.size)
    m[:-1] += np.sum(wr * (1.0 - t), axis=1)
    m[1:] += np.sum(wr * t, axis=1)
    return spec.omega * m


def _frozen_factor(spec: ProblemSpec, mesh: RadialMesh, u: np.ndarray) -> np.ndarray:
    _, _, t = mesh.quadrature(STIFFNESS_POINTS)
    return flux_factor(spec.theta, NodalField(mesh, u).cellwise(t))


def _finish(spec, mesh, u, method, iterations, update, residual, converged=True, failure=None):
    transform = ThetaTransform(spec.theta)
    u_field = NodalField(mesh, u)
    w_field = NodalField(mesh, transform.forward(u))
    result = SolveResult(spec, u_field, w_field, iterations, update, residual,
                         method, converged, failure)
    result.norms = analysis.solution_norms(u_field, spec.N, spec.theta)
    return result


def solve_linear_w(spec: ProblemSpec, mesh: RadialMesh) -> NodalField:
    """Galerkin solution of the linear problem -div(a grad w) = f satisfied by w = Psi(u)"""
    first, last = _free_range(spec, mesh)
    inner = spec.inner_dirichlet
    w_inner = None if inner is None else float(ThetaTransform(spec.theta).forward(inner))
    cond = conductances(spec, mesh)
    b = load_vector(spec, mesh)
    w = solve_tridiagonal(cond, b, _dirichlet(spec, mesh, w_inner), first, last)
    return NodalField(mesh, w)


def oracle_solve(spec: ProblemSpec, mesh: RadialMesh) -> SolveResult:
    """u = Psi^-1(w) nodewise from the linear solve"""
    first, last = _free_range(spec, mesh)
    w = solve_linear_w(spec, mesh)
    u = ThetaTransform(spec.theta).inverse(w.values)
    residual = _relative_residual(conductances(spec, mesh), w.values,
                                  load_vector(spec, mesh), first, last)
    logger.info("Oracle solve: N=%d theta=%g cells=%d", spec.N, spec.theta, mesh.cells)
    return _finish(spec, mesh, u, "oracle", 1, 0.0, residual)


RESIDUAL_FACTOR = 10.0


def _frozen_conductances(spec: ProblemSpec, mesh: RadialMesh, u: np.ndarray):
    """Conductances at the iterate u, or None once they stop being finite and positive"""
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        cond = conductances(spec, mesh, _frozen_factor(spec, mesh, u))
    if not np.all(np.isfinite(cond)) or np.any(cond <= 0):
        return None
    return cond


def picard_solve(spec: ProblemSpec, mesh: RadialMesh,
                 config: Optional[SolveConfig] = None) -> SolveResult:
    """Frozen-coefficient iteration with automatic damping.

    Converged means the relative L2 update fell below tol_update with the
    nonlinear residual at most RESIDUAL_FACTOR * tol_update. Non-convergence
    is reported on the result (converged=False); call
    result.raise_for_status() to turn it into an exception.
    """
    config = config or SolveConfig()
    first, last = _free_range(spec, mesh)
    b = load_vector(spec, mesh)
    u = _dirichlet(spec, mesh, spec.inner_dirichlet)
    mass = lumped_mass(spec, mesh)

    def norm(v):
        return math.sqrt(float(np.dot(mass, v * v)))

    if spec.theta == 0.0:
        cond = conductances(spec, mesh)
        u = solve_tridiagonal(cond, b, u, first, last)
        residual = _relative_residual(cond, u, b, first, last)
        return _finish(spec, mesh, u, "picard", 1, 0.0, residual)

    cond = _frozen_conductances(spec, mesh, u)
    if cond is None:
        raise AssemblyError("nonpositive or non-finite cell conductance: coefficient bound violated")
    res = _relative_residual(cond, u, b, first, last)
    lam = config.damping
    step_prev = None
    diff_prev = math.inf
    stalls = 0
    update = math.inf
    converged = False
    failure = None
    it = 0
    for it in range(1, config.max_iter + 1):
        try:
            solution = solve_tridiagonal(cond, b, u, first, last)
        except AssemblyError as e:
            failure = f"frozen system failed at iteration {it}: {e}"
            break
        with np.errstate(over="ignore", invalid="ignore"):
            step = lam * (solution - u)
            u_new = u + step
        cond_new = _frozen_conductances(spec, mesh, u_new) if np.all(np.isfinite(u_new)) else None
        if cond_new is None:
            failure = f"non-finite iterate at iteration {it} (damping {lam:g})"
            break
        res_new = _relative_residual(cond_new, u_new, b, first, last)
        diff = norm(step)
        size = norm(u_new)
        update = diff / size if size > 0 else diff
        logger.debug("Picard %d: update=%.3e residual=%.3e damping=%g", it, update, res_new, lam)

        reversed_step = step_prev is not None and np.dot(mass, step * step_prev) < 0
        if res_new > (1.0 + config.residual_slack) * res and reversed_step:
            if lam > config.damping_floor:
                lam = max(lam / 2.0, config.damping_floor)
                logger.debug("Residual increased (%.3e > %.3e); damping -> %g", res_new, res, lam)
        elif res_new <= res and lam < config.damping:
            lam = min(2.0 * lam, config.damping)

        if lam <= config.damping_floor and diff >= config.stall_ratio * diff_prev:
            stalls += 1
        else:
            stalls = 0
        u, cond, res = u_new, cond_new, res_new
        step_prev, diff_prev = step, diff
        if update < config.tol_update and res <= RESIDUAL_FACTOR * config.tol_update:
            converged = True
            break
        if stalls >= config.stall_limit:
            failure = f"no progress at damping floor {config.damping_floor:g} (update {update:.3e})"
            break
    else:
        failure = f"max_iter={config.max_iter} reached (update {update:.3e})"

    if converged:
        logger.info("Picard converged in %d iterations (update %.2e)", it, update)
    else:
        logger.warning("Picard did not converge: %s", failure)
    return _finish(spec, mesh, u, "picard", it, update, res, converged, failure)


def discrete_flux(spec: ProblemSpec, field: NodalField, factor=None) -> np.ndarray:
    """Per-cell (integral of a c r^(N-1) / h) * slope; constant across cells when f = 0"""
    return conductances(spec, field.mesh, factor) * np.diff(field.values) / spec.omega


def nodal_flux(result: SolveResult) -> np.ndarray:
    """a(r) u' / (1+|u|)^theta at the nodes, averaging the two adjacent cells"""
    slopes = result.w.slopes
    nodal = np.empty(slopes.size + 1)
    nodal[0], nodal[-1] = slopes[0], slopes[-1]
    nodal[1:-1] = 0.5 * (slopes[:-1] + slopes[1:])
    return result.spec.coefficient(result.mesh.nodes) * nodal
