"""
Truncated-source sequences: Test Suite.

 Group 1: Schedules and members
   1.  Empty or non-increasing schedules raise DomainError
   2.  Bounded source: members identical once n exceeds max f
   3.  Annulus members keep the untruncated inner data

 Group 2: Borderline study (theta = 3/4, gamma = 2.4)
   4.  Every member converges
   5.  W^{1,1} norms increase and stay bounded
   6.  Successive W^{1,1} differences decrease
   7.  Flux-variable exponent and diagnostics rows

 Group 3: L log L study (theta = 1/2, gamma = 2.9)
   8.  Same qualitative behaviour with exponent (theta+1)/2

 Group 4: Worker pool
   9.  Pool and serial runs agree member by member
"""
import numpy as np
import pytest

from degen.core.errors import DomainError
from degen.core.estimates import _bounded
from degen.core.mesh import build_mesh
from degen.core.problem import Coefficient, ProblemSpec, Source
from degen.core.sequence import DEFAULT_SCHEDULE, flux_variable_exponent, truncated_sequence


def _bounded_source_spec():
    return ProblemSpec(N=3, theta=0.75, coefficient=Coefficient.constant(1.0),
                       source=Source.power_law(1.0), mode="annulus", r_min=0.5)


# ═══════════════════════════════════════════════════════════════════════════════
# Group 1: Schedules and members
# ═══════════════════════════════════════════════════════════════════════════════

@pytest.mark.parametrize("schedule", [[], [4.0, 2.0], [1.0, 1.0], [0.0, 1.0]])
def test_schedule_errors(schedule):
    spec = _bounded_source_spec()
    with pytest.raises(DomainError):
        truncated_sequence(spec, build_mesh(spec, 16), schedule=schedule)


def test_bounded_source_members_identical():
    spec = _bounded_source_spec()
    seq = truncated_sequence(spec, build_mesh(spec, 128), schedule=[4.0, 8.0, 16.0])
    assert seq.converged
    first = seq.members[0].u.values
    for member in seq.members[1:]:
        np.testing.assert_array_equal(member.u.values, first)
    assert seq.w11_differences == [0.0, 0.0]
    assert seq.flux_differences == [0.0, 0.0]


def test_annulus_members_keep_inner_data():
    spec = _bounded_source_spec()
    seq = truncated_sequence(spec, build_mesh(spec, 64), schedule=[0.5, 1.0])
    inner = spec.inner_dirichlet
    for member in seq.members:
        assert member.u.values[0] == pytest.approx(inner, rel=1e-14)
        assert member.spec.source.level in (0.5, 1.0)


# ═══════════════════════════════════════════════════════════════════════════════
# Group 2: Borderline study
# ═══════════════════════════════════════════════════════════════════════════════

def test_borderline_members_converge(borderline_study):
    _, _, seq = borderline_study
    assert seq.converged, f"failed members: {seq.failures}"
    assert seq.schedule == list(DEFAULT_SCHEDULE)
    assert all(m.iterations <= 200 for m in seq.members)


def test_borderline_w11_bounded(borderline_study):
    _, _, seq = borderline_study
    w11 = seq.w11
    assert all(b >= a for a, b in zip(w11, w11[1:])), w11
    assert _bounded(w11), w11
    assert np.all(np.isfinite(seq.lebesgue))


def test_borderline_differences_decrease(borderline_study):
    _, _, seq = borderline_study
    d = seq.w11_differences
    assert len(d) == len(seq.schedule) - 1
    assert all(b < a for a, b in zip(d, d[1:])), d


def test_borderline_diagnostics(borderline_study):
    spec, _, seq = borderline_study
    assert seq.flux_exponent == flux_variable_exponent(3, 0.75) == 0.75
    rows = seq.rows()
    assert rows[0]["w11_difference"] is None
    assert rows[1]["w11_difference"] == seq.w11_differences[0]
    assert {r["n"] for r in rows} == set(DEFAULT_SCHEDULE)
    assert seq.to_dict()["converged"] is True


# ═══════════════════════════════════════════════════════════════════════════════
# Group 3: L log L study
# ═══════════════════════════════════════════════════════════════════════════════

def test_llogl_study(llogl_study):
    _, _, seq = llogl_study
    assert seq.converged, f"failed members: {seq.failures}"
    assert seq.flux_exponent == flux_variable_exponent(3, 0.5) == 0.75
    assert _bounded(seq.w11), seq.w11
    assert all(b < a for a, b in zip(seq.w11_differences, seq.w11_differences[1:]))
    assert all(np.isfinite(seq.flux_differences))


def test_flux_exponent_branches():
    assert flux_variable_exponent(4, 0.5) == pytest.approx(2 / 3)
    assert flux_variable_exponent(4, 0.2) == pytest.approx(0.6)


# ═══════════════════════════════════════════════════════════════════════════════
# Group 4: Worker pool
# ═══════════════════════════════════════════════════════════════════════════════

def test_pool_matches_serial():
    spec = ProblemSpec(N=3, theta=0.75, source=Source.power_law(2.4))
    mesh = build_mesh(spec, 64)
    schedule = [1.0, 4.0, 16.0]
    serial = truncated_sequence(spec, mesh, schedule=schedule, workers=1)
    pooled = truncated_sequence(spec, mesh, schedule=schedule, workers=2)
    for a, b in zip(serial.members, pooled.members):
        np.testing.assert_array_equal(a.u.values, b.u.values)
    assert serial.w11 == pooled.w11
