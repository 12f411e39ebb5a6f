"""
Norms, exponents and residuals: Test Suite.

 Group 1: Integrals and norms
   1.  Constant field: ball volume^(1/p) for p in {1, 1.5, 2}
   2.  W^{1,1} seminorm and unweighted energy of 1 - r
   3.  Level and window restrictions split cells exactly
   4.  Exponent errors

 Group 2: Distribution function
   5.  Profile r^-2 - 1 gives (4 pi/3)(1+t)^-3/2
   6.  Constant and zero fields; monotone in t

 Group 3: Decay and integrability exponents
   7.  Pure powers r^-s recovered within 0.1%; windows must sit inside (0, R]
   8.  Study fits: -1.6 and -1.8 within 2%
   9.  Predicted slopes
  10.  Empirical q* within 5% of 15/13; no blow-up for bounded data

 Group 4: Weak-form residuals
  11.  Bump test functions: height and W^{1,inf} size
  12.  Distributional residual of the closed-form oracle solution
  13.  Entropy residual cases
"""
import math

import numpy as np
import pytest

from degen.core.analysis import (RadialBump, distribution_function, distributional_residual,
                                 entropy_residual, fit_decay_slope,
                                 gradient_integrability_threshold, lebesgue_integral,
                                 lebesgue_norm, predicted_decay_slope, w11_seminorm,
                                 weighted_gradient_energy)
from degen.core.errors import DomainError
from degen.core.mesh import NodalField, RadialMesh, build_mesh
from degen.core.problem import Coefficient, ProblemSpec, Source
from degen.core.solver import oracle_solve, picard_solve

BALL_VOLUME = 4.0 * math.pi / 3.0
FIT_WINDOW = (1e-4, 1e-2)
REFINEMENTS = (256, 512, 1024, 2048)


def ball_field(fn, M=64, grading=1.0):
    mesh = RadialMesh(np.linspace(0.0, 1.0, M + 1) ** grading, grading)
    return NodalField.from_function(mesh, fn)


def ring_field(fn, r_min, M, grading=1.0):
    s = np.linspace(0.0, 1.0, M + 1) ** grading
    mesh = RadialMesh(r_min + (1.0 - r_min) * s, grading, "annulus")
    return NodalField.from_function(mesh, fn)


def power_spec(theta, gamma, **kwargs):
    return ProblemSpec(N=3, theta=theta, coefficient=Coefficient.constant(1.0),
                       source=Source.power_law(gamma), **kwargs)


# ═══════════════════════════════════════════════════════════════════════════════
# Group 1: Integrals and norms
# ═══════════════════════════════════════════════════════════════════════════════

@pytest.mark.parametrize("p", [1.0, 1.5, 2.0])
def test_constant_field_volume(p):
    one = ball_field(np.ones_like, grading=3.0)
    assert lebesgue_norm(one, p, 3) == pytest.approx(BALL_VOLUME ** (1 / p), rel=1e-12)


def test_linear_profile_norms():
    f = ball_field(lambda r: 1.0 - r)
    assert w11_seminorm(f, 3) == pytest.approx(BALL_VOLUME, rel=1e-12)
    assert weighted_gradient_energy(f, 0.0, 3) == pytest.approx(BALL_VOLUME, rel=1e-12)
    const = ball_field(lambda r: np.full_like(r, 2.5))
    assert w11_seminorm(const, 3) == 0.0
    zero = ball_field(np.zeros_like)
    assert lebesgue_norm(zero, 1.0, 3) == 0.0
    assert weighted_gradient_energy(zero, 1.5, 3) == 0.0


def test_level_and_window_restrictions():
    f = ball_field(lambda r: 1.0 - r, M=7)
    # {|u| >= 1/2} is the ball of radius 1/2
    above = w11_seminorm(f, 3, level=0.5)
    assert above == pytest.approx(BALL_VOLUME / 8.0, rel=1e-12)
    below = w11_seminorm(f, 3, level=0.5, below=True)
    assert above + below == pytest.approx(BALL_VOLUME, rel=1e-12)
    inner = w11_seminorm(f, 3, window=(0.0, 0.5))
    assert inner == pytest.approx(above, rel=1e-12)
    assert lebesgue_integral(f, 1.0, 3, window=(0.0, 1.0)) == pytest.approx(
        lebesgue_integral(f, 1.0, 3), rel=1e-14)


def test_exponent_errors():
    f = ball_field(lambda r: 1.0 - r)
    with pytest.raises(DomainError):
        lebesgue_norm(f, 0.5, 3)
    with pytest.raises(DomainError):
        weighted_gradient_energy(f, -1.0, 3)


# ═══════════════════════════════════════════════════════════════════════════════
# Group 2: Distribution function
# ═══════════════════════════════════════════════════════════════════════════════

def test_distribution_of_closed_form_profile():
    f = ring_field(lambda r: r ** -2 - 1.0, 1e-3, 8192)
    t_grid = [0.5, 1.0, 3.0, 10.0, 100.0]
    for t, measure in distribution_function(f, t_grid, 3):
        expected = BALL_VOLUME * (1.0 + t) ** -1.5
        assert measure == pytest.approx(expected, rel=1e-4), f"t={t}"


def test_distribution_constant_and_zero():
    c = ball_field(lambda r: np.full_like(r, 2.0))
    (_, inside), (_, outside) = distribution_function(c, [1.0, 3.0], 3)
    assert inside == pytest.approx(BALL_VOLUME, rel=1e-12)
    assert outside == 0.0
    zero = ball_field(np.zeros_like)
    assert all(m == 0.0 for _, m in distribution_function(zero, [1e-3, 1.0], 3))
    with pytest.raises(DomainError):
        distribution_function(zero, [], 3)


def test_distribution_nonincreasing():
    f = ball_field(lambda r: np.cos(3 * r) + 1.2, M=200)
    measures = [m for _, m in distribution_function(f, np.linspace(0.0, 2.5, 60), 3)]
    assert all(b <= a for a, b in zip(measures, measures[1:]))


# ═══════════════════════════════════════════════════════════════════════════════
# Group 3: Decay and integrability exponents
# ═══════════════════════════════════════════════════════════════════════════════

@pytest.mark.parametrize("s", [0.5, 1.0, 1.6, 2.0])
def test_pure_power_fit(s):
    f = ring_field(lambda r: r ** -s, 1e-5, 2048, grading=3.0)
    fit = fit_decay_slope(f, (1e-3, 1e-2), predicted=-s)
    assert fit.fitted_slope == pytest.approx(-s, rel=1e-3)
    assert fit.relative_gap < 1e-3
    assert fit.residual >= 0.0
    assert fit.nodes >= 8


def test_fit_errors():
    f = ring_field(lambda r: r - 0.5, 1e-4, 2048, grading=3.0)
    with pytest.raises(DomainError):
        fit_decay_slope(f, (0.1, 0.9))
    with pytest.raises(DomainError):
        fit_decay_slope(f, (0.5, 0.5000001))
    with pytest.raises(DomainError):
        fit_decay_slope(f, (0.0, 0.1))
    flat = ring_field(lambda r: np.full_like(r, 3.0), 1e-4, 512)
    assert abs(fit_decay_slope(flat, (0.1, 0.9)).fitted_slope) < 1e-12
    with pytest.raises(DomainError, match="leaves the domain"):
        fit_decay_slope(flat, (0.5, 1.5))


@pytest.mark.parametrize("theta, gamma, slope", [(0.75, 2.4, -1.6), (0.5, 2.9, -1.8)])
def test_study_decay_slopes(theta, gamma, slope):
    spec = power_spec(theta, gamma)
    assert predicted_decay_slope(spec) == pytest.approx(slope)
    result = oracle_solve(spec, build_mesh(spec, 2048))
    fit = fit_decay_slope(result.u, FIT_WINDOW, predicted_decay_slope(spec))
    assert fit.fitted_slope == pytest.approx(slope, rel=0.02), fit.to_dict()
    assert set(fit.to_dict()) >= {"predicted", "fitted", "relative_gap", "window"}


def test_predicted_slopes():
    assert predicted_decay_slope(power_spec(0.75, 1.0)) == 0.0
    assert predicted_decay_slope(power_spec(0.75, 2.0)) is None
    assert predicted_decay_slope(power_spec(0.75, 2.4).with_source(
        Source.power_law(2.4).truncated(8.0))) is None
    assert predicted_decay_slope(ProblemSpec(N=3, theta=0.5)) == 0.0


def test_threshold_matches_region_c_exponent():
    spec = power_spec(0.75, 2.4)
    result = gradient_integrability_threshold(spec, (1.0, 2.0), REFINEMENTS)
    assert result.blow_up
    assert result.q_star == pytest.approx(15 / 13, rel=0.05), result.to_dict()
    assert result.interval[0] <= result.q_star <= result.interval[1]


@pytest.mark.parametrize("spec", [power_spec(0.75, 1.0), ProblemSpec(N=3, theta=0.75)])
def test_threshold_without_blow_up(spec):
    result = gradient_integrability_threshold(spec, (1.0, 2.0), REFINEMENTS)
    assert not result.blow_up
    assert result.q_star == 2.0


def test_threshold_errors():
    spec = power_spec(0.75, 2.4)
    with pytest.raises(DomainError):
        gradient_integrability_threshold(spec, (2.0, 1.0), REFINEMENTS)
    with pytest.raises(DomainError):
        gradient_integrability_threshold(spec, (1.0, 2.0), (256, 512))


# ═══════════════════════════════════════════════════════════════════════════════
# Group 4: Weak-form residuals
# ═══════════════════════════════════════════════════════════════════════════════

def test_bump_shape():
    bump = RadialBump(0.2, 0.8)
    r = np.linspace(0.0, 1.0, 200001)
    assert bump.value(r).max() == pytest.approx(1.0, rel=1e-9)
    assert bump.value(np.array([0.1, 0.2, 0.8, 0.9])).tolist() == [0.0, 0.0, 0.0, 0.0]
    assert 1.0 + np.abs(bump.derivative(r)).max() == pytest.approx(bump.w1inf, rel=1e-6)
    h = 1e-6
    x = np.array([0.3, 0.45, 0.7])
    np.testing.assert_allclose(bump.derivative(x),
                               (bump.value(x + h) - bump.value(x - h)) / (2 * h), rtol=1e-6)


def test_distributional_residual_closed_form():
    spec = power_spec(0.75, 2.5, mode="annulus", r_min=0.01)
    residuals = []
    for M in (1024, 2048):
        result = oracle_solve(spec, build_mesh(spec, M))
        residuals.append(distributional_residual(result, spec, [RadialBump(0.2, 0.8)]))
    assert residuals[-1] <= 1e-4, residuals
    assert residuals[-1] < residuals[0], residuals
    assert distributional_residual(result, spec) <= 1e-3


def test_distributional_residual_zero_and_errors():
    spec = ProblemSpec(N=3, theta=0.75)
    result = oracle_solve(spec, build_mesh(spec, 64))
    assert distributional_residual(result, spec) == 0.0
    ring = power_spec(0.75, 2.5, mode="annulus", r_min=0.1)
    ring_result = oracle_solve(ring, build_mesh(ring, 64))
    with pytest.raises(DomainError):
        distributional_residual(ring_result, ring, [RadialBump(0.05, 0.5)])


def test_entropy_residual():
    spec = power_spec(0.75, 1.0)
    result = picard_solve(spec, build_mesh(spec, 2048))
    assert entropy_residual(result, spec, result.u, 1.0) == 0.0
    assert entropy_residual(result, spec, 0.0, 1.0) <= 1e-6
    assert entropy_residual(result, spec, lambda r: 0.1 * (1 - r), 0.5) <= 1e-6
    zero = ProblemSpec(N=3, theta=0.75)
    zero_result = oracle_solve(zero, build_mesh(zero, 64))
    assert entropy_residual(zero_result, zero, 0.0, 1.0) == 0.0
    with pytest.raises(DomainError):
        entropy_residual(result, spec, 0.0, 0.0)
