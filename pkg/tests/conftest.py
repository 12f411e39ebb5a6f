"""Shared fixtures: the two truncation studies are solved once per session."""
import os
import sys

_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.join(_ROOT, "crates"))

import pytest

from degen.core.mesh import build_mesh
from degen.core.problem import Coefficient, ProblemSpec, Source
from degen.core.sequence import truncated_sequence

STUDY_M = 512
STUDY_GRADING = 3.0


def study_spec(theta, gamma, N=3):
    return ProblemSpec(N=N, theta=theta, coefficient=Coefficient.constant(1.0),
                       source=Source.power_law(gamma, 1.0))


@pytest.fixture(scope="session")
def borderline_study():
    """N=3, theta=0.75, gamma=2.4 on the ball, n = 2^0..2^10"""
    spec = study_spec(0.75, 2.4)
    mesh = build_mesh(spec, STUDY_M, STUDY_GRADING)
    return spec, mesh, truncated_sequence(spec, mesh, workers=1)


@pytest.fixture(scope="session")
def llogl_study():
    """N=3, theta=1/2, gamma=2.9 on the ball, n = 2^0..2^10"""
    spec = study_spec(0.5, 2.9)
    mesh = build_mesh(spec, STUDY_M, STUDY_GRADING)
    return spec, mesh, truncated_sequence(spec, mesh, workers=1)
