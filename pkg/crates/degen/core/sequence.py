"""Truncated-source sequences u_n solving the problem with source T_n(f)"""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from .analysis import lebesgue_norm, w11_seminorm
from .errors import DomainError
from .mesh import NodalField, RadialMesh
from .problem import ProblemSpec, sphere_area
from .solver import SolveConfig, SolveResult, picard_solve
from .transform import energy_variable

logger = logging.getLogger(__name__)

DEFAULT_SCHEDULE = tuple(2.0 ** j for j in range(11))


def flux_variable_exponent(N: int, theta: float) -> float:
    """Exponent e of g_n = u_n' / (1+|u_n|)^e: N/(2(N-1)) above theta = 1/(N-1), (theta+1)/2 otherwise"""
    if theta > 1.0 / (N - 1):
        return N / (2.0 * (N - 1))
    return 0.5 * (theta + 1.0)


def _member(spec: ProblemSpec, n: float, mesh: RadialMesh, config: SolveConfig) -> SolveResult:
    if spec.mode == "annulus" and spec.inner_value is None:
        # inner data stays that of the untruncated closed form
        spec = spec.with_mode("annulus", spec.r_min, spec.inner_dirichlet)
    member = spec.with_source(spec.source.truncated(n))
    result = picard_solve(member, mesh, config)
    logger.info("Member n=%g: iterations=%d converged=%s", n, result.iterations, result.converged)
    return result


# SequenceResult holds the members in schedule order with cross-sequence diagnostics.
@dataclass
class SequenceResult:
    spec: ProblemSpec
    schedule: List[float]
    members: List[SolveResult]
    w11: List[float] = field(default_factory=list)
    lebesgue: List[float] = field(default_factory=list)
    w11_differences: List[float] = field(default_factory=list)
    flux_differences: List[float] = field(default_factory=list)
    flux_exponent: float = 0.0

    @property
    def converged(self) -> bool:
        return all(m.converged for m in self.members)

    @property
    def failures(self) -> List[float]:
        return [n for n, m in zip(self.schedule, self.members) if not m.converged]

    def rows(self) -> List[Dict[str, Any]]:
        """One diagnostics row per member; differences refer to the previous member"""
        out = []
        for j, (n, m) in enumerate(zip(self.schedule, self.members)):
            out.append({
                "n": n,
                "iterations": m.iterations,
                "converged": m.converged,
                "w11": self.w11[j],
                "lebesgue": self.lebesgue[j],
                "w11_difference": self.w11_differences[j - 1] if j else None,
                "flux_difference": self.flux_differences[j - 1] if j else None,
            })
        return out

    def to_dict(self) -> Dict[str, Any]:
        return {
            "spec": self.spec.to_dict(),
            "mesh": self.members[0].mesh.to_dict() if self.members else None,
            "schedule": list(self.schedule),
            "converged": self.converged,
            "failures": self.failures,
            "flux_exponent": self.flux_exponent,
            "members": [m.to_dict() for m in self.members],
            "diagnostics": self.rows(),
        }


def _check_schedule(schedule: Sequence[float]) -> List[float]:
    schedule = [float(n) for n in schedule]
    if not schedule:
        raise DomainError("truncation schedule is empty")
    if schedule[0] <= 0 or any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise DomainError(f"schedule must be strictly increasing and positive, got {schedule}")
    return schedule


def _flux_l2_difference(a: NodalField, b: NodalField, N: int, beta: float) -> float:
    """L2 distance of the gradients of energy_variable(beta, u) for two members"""
    ga = np.diff(energy_variable(beta, a.values)) / a.mesh.widths
    gb = np.diff(energy_variable(beta, b.values)) / b.mesh.widths
    content = sphere_area(N) * np.diff(a.mesh.nodes ** N) / N
    return math.sqrt(float(np.sum((ga - gb) ** 2 * content)))


def truncated_sequence(
    spec: ProblemSpec,
    mesh: RadialMesh,
    config: Optional[SolveConfig] = None,
    schedule: Optional[Sequence[float]] = None,
    workers: int = 1,
) -> SequenceResult:
    """Solve with T_n(f) for every n in schedule; members are merged in schedule order"""
    config = config or SolveConfig()
    schedule = _check_schedule(DEFAULT_SCHEDULE if schedule is None else schedule)
    if workers > 1 and len(schedule) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            futures = [ex.submit(_member, spec, n, mesh, config) for n in schedule]
            members = [fut.result() for fut in futures]
    else:
        members = [_member(spec, n, mesh, config) for n in schedule]

    N = spec.N
    exponent = flux_variable_exponent(N, spec.theta)
    beta = 1.0 - exponent
    result = SequenceResult(spec, schedule, members, flux_exponent=exponent)
    result.w11 = [w11_seminorm(m.u, N) for m in members]
    result.lebesgue = [lebesgue_norm(m.u, N / (N - 1.0), N) for m in members]
    for a, b in zip(members, members[1:]):
        result.w11_differences.append(w11_seminorm(b.u - a.u, N))
        result.flux_differences.append(_flux_l2_difference(a.u, b.u, N, beta))
    if not result.converged:
        logger.warning("Sequence flagged: members %s did not converge", result.failures)
    return result
