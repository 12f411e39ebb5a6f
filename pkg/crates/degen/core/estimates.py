"""A-priori estimate checks on discrete solutions and truncated sequences.

Explicit checks compare both sides of an inequality whose constants are all
known. Constant-C checks have no usable right-hand side; they pass when the
left-hand side stays bounded (or its tail vanishes) across the family.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np

from .analysis import integrate, lebesgue_integral, w11_seminorm, weighted_gradient_energy
from .errors import DomainError
from .mesh import RadialMesh
from .problem import ProblemSpec
from .regimes import critical_m_values
from .sequence import SequenceResult, truncated_sequence
from .solver import SolveConfig, SolveResult
from .transform import power_test

logger = logging.getLogger(__name__)

EXPLICIT_TOL = 1e-6
BOUNDED_REL_TOL = 1e-3
BOUNDED_MAX_RATIO = 0.995
DEFAULT_K_LIST = (1.0, 2.0, 4.0, 8.0)
DEFAULT_SHRINK_LEVELS = (1, 2, 3, 4, 5, 6)
DEFAULT_SAMPLES = 100_000


class EstimateId(str, Enum):
    TK1 = "TK1"
    INIZIO = "INIZIO"
    R = "R"
    L = "L"
    ONE = "ONE"
    INIZIOK = "INIZIOK"
    ONE_K = "ONE_K"
    MALAGA = "MALAGA"
    BAR = "BAR"
    CAMINO0 = "CAMINO0"
    CAMINO = "CAMINO"
    STIMA = "STIMA"
    LLOGL = "LLOGL"


MEMBER_IDS = {EstimateId.TK1, EstimateId.INIZIO, EstimateId.CAMINO0, EstimateId.CAMINO}


# EstimateCheck is one row of the ledger; a profile expands into one row per n or k.
@dataclass
class EstimateCheck:
    estimate_id: EstimateId
    parameters: Dict[str, Any]
    lhs: float
    rhs: Optional[float]
    passed: Optional[bool]
    allowance: float = 0.0
    note: str = ""
    profile_key: Optional[str] = None
    profile: List[tuple] = field(default_factory=list)

    @property
    def explicit(self) -> bool:
        return self.rhs is not None

    @property
    def applicable(self) -> bool:
        return self.passed is not None

    def rows(self) -> List[Dict[str, Any]]:
        base = {
            "estimate": self.estimate_id.value,
            "k": self.parameters.get("k"),
            "p": self.parameters.get("p"),
            "rho": self.parameters.get("rho"),
            "n": self.parameters.get("n"),
            "lhs": self.lhs,
            "rhs": self.rhs,
            "allowance": self.allowance,
            "passed": self.passed,
        }
        if not self.profile:
            return [base]
        return [dict(base, **{self.profile_key: key, "lhs": value}) for key, value in self.profile]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "estimate": self.estimate_id.value,
            "parameters": dict(self.parameters),
            "lhs": self.lhs,
            "rhs": self.rhs,
            "allowance": self.allowance,
            "passed": self.passed,
            "note": self.note,
            "profile": [[k, v] for k, v in self.profile],
        }


@dataclass
class EstimateLedger:
    checks: List[EstimateCheck] = field(default_factory=list)

    def add(self, check: EstimateCheck):
        self.checks.append(check)
        if check.passed is None:
            logger.warning("%s not applicable: %s", check.estimate_id.value, check.note)
        elif not check.passed:
            logger.warning("%s failed with %s: lhs=%.6g rhs=%s", check.estimate_id.value,
                           check.parameters, check.lhs, check.rhs)

    @property
    def all_passed(self) -> bool:
        return all(c.passed is not False for c in self.checks)

    @property
    def explicit_failures(self) -> List[EstimateCheck]:
        return [c for c in self.checks if c.explicit and c.passed is False]

    def rows(self) -> List[Dict[str, Any]]:
        return [row for c in self.checks for row in c.rows()]

    def to_dict(self) -> Dict[str, Any]:
        return {"all_passed": self.all_passed,
                "explicit_failures": len(self.explicit_failures),
                "checks": [c.to_dict() for c in self.checks]}


def bar_sides(a, b, rho):
    """Both sides of a log(1+b) <= (a/rho) log(1+a/rho) + (1+b)^rho"""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    lhs = a * np.log1p(b)
    rhs = (a / rho) * np.log1p(a / rho) + np.exp(rho * np.log1p(b))
    return lhs, rhs


def _rho(spec: ProblemSpec, rho: Optional[float]) -> float:
    upper = (spec.N - 2.0) / (spec.N - 1.0)
    if rho is None:
        return 0.5 * upper
    if not 0.0 < rho < upper:
        raise DomainError(f"rho must lie in (0, {upper:g}), got {rho}")
    return float(rho)


def _bounded(values: Sequence[float]) -> bool:
    """Finite, and either settled (final increment below BOUNDED_REL_TOL of the
    largest value) or with second-half increments decaying geometrically"""
    v = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(v)):
        return False
    if v.size < 3:
        return True
    inc = np.abs(np.diff(v))
    scale = max(float(np.max(np.abs(v))), 1e-300)
    if inc[-1] <= BOUNDED_REL_TOL * scale:
        return True
    tail = inc[inc.size // 2:]
    if tail.size < 2 or np.any(tail <= 0):
        return False
    # log-linear fit of the increments; the geometric tail sum stays finite for q < 1
    q = math.exp(np.polyfit(np.arange(tail.size), np.log(tail), 1)[0])
    return q < BOUNDED_MAX_RATIO


def _vanishing(values: Sequence[float], strict: bool = False) -> bool:
    """Nonincreasing (strictly, if asked) and smaller at the end than at the start"""
    v = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(v)) or v.size < 2:
        return False
    if strict:
        steps = np.all(v[1:] < v[:-1])
    else:
        steps = np.all(v[1:] <= v[:-1] * (1.0 + 1e-9))
    return bool(steps and v[-1] < v[0])


def _allowance(result: SolveResult, lhs: float) -> float:
    mesh = result.mesh
    return float(mesh.widths.max() / (mesh.outer_radius - mesh.r_min)) * abs(lhs)


def _explicit(estimate_id, result, params, lhs, rhs, note="") -> EstimateCheck:
    allowance = _allowance(result, lhs)
    passed = bool(lhs <= rhs * (1.0 + EXPLICIT_TOL) + allowance)
    return EstimateCheck(estimate_id, params, float(lhs), float(rhs), passed, allowance, note)


def _not_applicable(estimate_id, params, note) -> EstimateCheck:
    return EstimateCheck(estimate_id, params, math.nan, None, None, note=note)


def _level(result: SolveResult) -> Optional[float]:
    return result.spec.source.level


def _source_lp(spec: ProblemSpec, m: float) -> float:
    """||f||_{L^m} of the spec's (possibly truncated) source"""
    lo, hi = spec.r_min, spec.outer_radius
    return spec.source.lebesgue_integral(spec.N, m, lo, hi) ** (1.0 / m)


def _llogl_density(spec: ProblemSpec, rho: float):
    def density(r, u, du):
        f = np.abs(spec.source(r)) / rho
        return f * np.log1p(f)
    return density


def _check_tk1(result: SolveResult, spec: ProblemSpec, k: float) -> EstimateCheck:
    if k < 0:
        raise DomainError(f"k must be nonnegative, got {k}")
    s = result.spec
    params = {"k": k, "n": _level(result)}
    if k == 0:
        return _explicit(EstimateId.TK1, result, params, 0.0, 0.0)
    lhs = weighted_gradient_energy(result.u, 0.0, s.N, level=k, below=True)
    rhs = k * (1.0 + k) ** s.theta * _source_lp(s, 1.0) / s.alpha
    return _explicit(EstimateId.TK1, result, params, lhs, rhs)


def _check_inizio(result: SolveResult, spec: ProblemSpec, m: Optional[float]) -> EstimateCheck:
    s = result.spec
    N, theta = s.N, s.theta
    p = theta - 1.0 / (N - 1)
    params = {"p": p, "n": _level(result), "m": m}
    if p <= 0 or theta >= 1.0:
        return _not_applicable(EstimateId.INIZIO, params, "needs 1/(N-1) < theta < 1")
    if m is None:
        m = critical_m_values(N, theta)[0]
        params["m"] = m
    if m <= 1.0:
        return _not_applicable(EstimateId.INIZIO, params, "m' degenerates at m = 1")
    if not math.isfinite(spec.source.lebesgue_integral(N, m, spec.r_min, spec.outer_radius)):
        return _not_applicable(EstimateId.INIZIO, params, f"f is not in L^{m:g}")
    m_conj = m / (m - 1.0)
    lhs = s.alpha * p * weighted_gradient_energy(result.u, N / (N - 1.0), N)
    tested = integrate(result.u, lambda r, u, du: np.abs(power_test(p, u)) ** m_conj, N)
    rhs = _source_lp(s, m) * tested ** (1.0 / m_conj)
    return _explicit(EstimateId.INIZIO, result, params, lhs, rhs)


def _check_camino(estimate_id, result: SolveResult, spec: ProblemSpec,
                  k: float, rho: float) -> EstimateCheck:
    s = result.spec
    N = s.N
    params = {"k": k, "rho": rho, "n": _level(result)}
    if k < 0:
        raise DomainError(f"k must be nonnegative, got {k}")
    lhs = _camino_lhs(estimate_id, result, k)
    if lhs is None:
        return _not_applicable(estimate_id, params, "stated for k >= 1")
    density = _llogl_density(s, rho)
    if estimate_id is EstimateId.CAMINO0:
        rhs = integrate(result.u, lambda r, u, du: density(r, u, du)
                        + np.exp(rho * np.log1p(np.abs(u))), N, level=k)
    else:
        rhs = integrate(result.u, lambda r, u, du: density(r, u, du)
                        + 2.0 ** rho * np.abs(u) ** rho, N, level=k)
    return _explicit(estimate_id, result, params, lhs, rhs)


def _camino_lhs(estimate_id, result: SolveResult, k: float) -> Optional[float]:
    s = result.spec
    N, theta, alpha = s.N, s.theta, s.alpha
    if estimate_id is EstimateId.CAMINO0:
        return alpha * weighted_gradient_energy(result.u, theta + 1.0, N, level=k)
    if k < 1.0:
        return None
    energy = integrate(result.u, lambda r, u, du: du ** 2 * np.abs(u) ** (-(theta + 1.0)),
                       N, level=k)
    return alpha / 2.0 ** (theta + 1.0) * energy


def _family(estimate_id, params, profile_key, profile, passed, note="") -> EstimateCheck:
    values = [v for _, v in profile]
    return EstimateCheck(estimate_id, params, float(max(values)), None, passed,
                         note=note, profile_key=profile_key, profile=profile)


def _check_sequence(estimate_id: EstimateId, seq: SequenceResult, spec: ProblemSpec,
                    k_list: Sequence[float], levels: Sequence[int],
                    rho: float) -> EstimateCheck:
    N, theta = spec.N, spec.theta
    members = seq.members
    schedule = seq.schedule
    if estimate_id is EstimateId.R:
        values = [lebesgue_integral(m.u, N / (N - 1.0), N) for m in members]
        return _family(estimate_id, {}, "n", list(zip(schedule, values)), _bounded(values))
    if estimate_id is EstimateId.L:
        values = [weighted_gradient_energy(m.u, N / (N - 1.0), N) for m in members]
        return _family(estimate_id, {}, "n", list(zip(schedule, values)), _bounded(values))
    if estimate_id is EstimateId.ONE:
        values = [w11_seminorm(m.u, N) for m in members]
        return _family(estimate_id, {}, "n", list(zip(schedule, values)), _bounded(values))
    if estimate_id is EstimateId.STIMA:
        s = (1.0 - theta) * N / (N - 2.0)
        values = [lebesgue_integral(m.u, s, N) for m in members]
        return _family(estimate_id, {"p": s}, "n", list(zip(schedule, values)), _bounded(values))
    if estimate_id in (EstimateId.INIZIOK, EstimateId.ONE_K):
        profile = []
        for k in k_list:
            if estimate_id is EstimateId.INIZIOK:
                sup = max(weighted_gradient_energy(m.u, N / (N - 1.0), N, level=k) for m in members)
            else:
                sup = max(w11_seminorm(m.u, N, level=k) for m in members)
            profile.append((float(k), sup))
        return _family(estimate_id, {}, "k", profile, _vanishing([v for _, v in profile]))
    if estimate_id is EstimateId.MALAGA:
        lo, R = spec.r_min, spec.outer_radius
        profile = []
        for j in levels:
            window = (lo, lo + (R - lo) * 2.0 ** (-j))
            profile.append((j, max(w11_seminorm(m.u, N, window=window) for m in members)))
        return _family(estimate_id, {}, "k", profile,
                       _vanishing([v for _, v in profile], strict=True),
                       note="k holds j for the window (0, 2^-j)")
    if estimate_id is EstimateId.LLOGL:
        lo, hi = spec.r_min, spec.outer_radius
        limit = spec.source.truncated(None).llogl_integral(N, lo, hi)
        values = [m.spec.source.llogl_integral(N, lo, hi) for m in members]
        passed = (math.isfinite(limit)
                  and all(b >= a * (1.0 - 1e-12) for a, b in zip(values, values[1:]))
                  and all(v <= limit * (1.0 + 1e-9) for v in values))
        return EstimateCheck(estimate_id, {}, float(max(values)), float(limit), bool(passed),
                             profile_key="n", profile=list(zip(schedule, values)))
    if estimate_id in (EstimateId.CAMINO0, EstimateId.CAMINO):
        k = float(k_list[0]) if k_list else 0.0
        values = [_camino_lhs(estimate_id, m, k) for m in members]
        params = {"k": k, "rho": rho}
        if any(v is None for v in values):
            return _not_applicable(estimate_id, params, "stated for k >= 1")
        return _family(estimate_id, params, "n", list(zip(schedule, values)), _bounded(values))
    raise DomainError(f"{estimate_id.value} is not a sequence estimate")


def _check_bar(spec: ProblemSpec, rho, a=None, b=None, samples=DEFAULT_SAMPLES,
               seed=0) -> EstimateCheck:
    if a is not None and b is not None:
        r = _rho(spec, rho)
        lhs, rhs = bar_sides(a, b, r)
        lhs, rhs = float(lhs), float(rhs)
        return EstimateCheck(EstimateId.BAR, {"rho": r, "a": a, "b": b}, lhs, rhs,
                             bool(lhs <= rhs * (1.0 + 1e-12)))
    rng = np.random.default_rng(seed)
    upper = (spec.N - 2.0) / (spec.N - 1.0)
    av = rng.uniform(0.0, 1e6, samples)
    bv = rng.uniform(0.0, 1e6, samples)
    rv = rng.uniform(0.0, upper, samples)
    # uniform() may return the open end 0
    rv = np.where(rv > 0.0, rv, 0.5 * upper)
    lhs, rhs = bar_sides(av, bv, rv)
    ratio = lhs / rhs
    violations = int(np.count_nonzero(lhs > rhs * (1.0 + 1e-12)))
    params = {"samples": samples, "seed": seed, "violations": violations}
    return EstimateCheck(EstimateId.BAR, params, float(ratio.max()), 1.0, violations == 0,
                         note="lhs is the largest sampled ratio")


def check_estimate(
    estimate_id: Union[EstimateId, str],
    target: Union[SolveResult, SequenceResult, None],
    spec: ProblemSpec,
    k: Optional[float] = None,
    k_list: Sequence[float] = DEFAULT_K_LIST,
    m: Optional[float] = None,
    rho: Optional[float] = None,
    levels: Sequence[int] = DEFAULT_SHRINK_LEVELS,
    a: Optional[float] = None,
    b: Optional[float] = None,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
) -> EstimateCheck:
    """Evaluate one estimate.

    TK1, INIZIO, CAMINO0 and CAMINO take a single SolveResult (explicit right-hand
    side); the constant-C ids take a SequenceResult; BAR takes no target.
    CAMINO0/CAMINO on a SequenceResult check boundedness across the members.
    """
    try:
        estimate_id = EstimateId(estimate_id)
    except ValueError:
        raise DomainError(f"unknown estimate id {estimate_id!r}") from None
    if estimate_id is EstimateId.BAR:
        return _check_bar(spec, rho, a, b, samples, seed)
    if estimate_id in (EstimateId.CAMINO0, EstimateId.CAMINO):
        r = _rho(spec, rho)
        if isinstance(target, SequenceResult):
            return _check_sequence(estimate_id, target, spec, [k if k is not None else 0.0],
                                   levels, r)
        if not isinstance(target, SolveResult):
            raise DomainError(f"{estimate_id.value} needs a solve result or a sequence")
        return _check_camino(estimate_id, target, spec, 0.0 if k is None else k, r)
    if estimate_id in MEMBER_IDS:
        if not isinstance(target, SolveResult):
            raise DomainError(f"{estimate_id.value} needs a single solve result")
        if estimate_id is EstimateId.TK1:
            return _check_tk1(target, spec, 1.0 if k is None else k)
        return _check_inizio(target, spec, m)
    if not isinstance(target, SequenceResult):
        raise DomainError(f"{estimate_id.value} needs a truncated sequence")
    return _check_sequence(estimate_id, target, spec, k_list, levels, _rho(spec, rho))


def run_estimates(
    spec: ProblemSpec,
    mesh: RadialMesh,
    ids: Iterable[Union[EstimateId, str]],
    config: Optional[SolveConfig] = None,
    k_list: Sequence[float] = DEFAULT_K_LIST,
    schedule: Optional[Sequence[float]] = None,
    m: Optional[float] = None,
    rho: Optional[float] = None,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    workers: int = 1,
    sequence: Optional[SequenceResult] = None,
) -> EstimateLedger:
    """Solve the truncated sequence once and evaluate every requested id in order"""
    ids = [EstimateId(i) if not isinstance(i, EstimateId) else i for i in parse_ids(ids)]
    if not ids:
        raise DomainError("no estimate ids requested")
    rho = _rho(spec, rho)
    ledger = EstimateLedger()
    if sequence is None and any(i is not EstimateId.BAR for i in ids):
        sequence = truncated_sequence(spec, mesh, config, schedule, workers)
    for estimate_id in ids:
        if estimate_id is EstimateId.BAR:
            ledger.add(_check_bar(spec, rho, samples=samples, seed=seed))
        elif estimate_id is EstimateId.TK1:
            for member in sequence.members:
                for k in k_list:
                    ledger.add(_check_tk1(member, spec, k))
        elif estimate_id is EstimateId.INIZIO:
            for member in sequence.members:
                ledger.add(_check_inizio(member, spec, m))
        elif estimate_id in (EstimateId.CAMINO0, EstimateId.CAMINO):
            for k in k_list:
                for member in sequence.members:
                    ledger.add(_check_camino(estimate_id, member, spec, k, rho))
                ledger.add(_check_sequence(estimate_id, sequence, spec, [k], (), rho))
        else:
            ledger.add(_check_sequence(estimate_id, sequence, spec, k_list,
                                       DEFAULT_SHRINK_LEVELS, rho))
    return ledger


def parse_ids(ids: Iterable[Union[EstimateId, str]]) -> List[str]:
    out = []
    for i in ids:
        value = i.value if isinstance(i, EstimateId) else str(i).strip().upper()
        if value not in EstimateId.__members__:
            raise DomainError(f"unknown estimate id {i!r}")
        out.append(value)
    return out
