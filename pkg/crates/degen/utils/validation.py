"""Configuration validation for the lab"""
from numbers import Integral, Real
from typing import Any, Dict, List

KNOWN_SECTIONS = ("problem", "mesh", "solver", "sequence", "analysis", "phase", "output", "logging")


def _is_int(value: Any) -> bool:
    return isinstance(value, Integral) and not isinstance(value, bool)


def _is_real(value: Any) -> bool:
    return isinstance(value, Real) and not isinstance(value, bool)


# Validate configuration and return list of errors
def validate_config(config: Dict[str, Any]) -> List[str]:
    """Validate configuration and return list of errors"""
    errors = []

    for section in config:
        if section not in KNOWN_SECTIONS:
            errors.append(f"unknown configuration section '{section}'")

    # Validate problem settings
    problem = config.get('problem', {})
    N = problem.get('N')
    if N is not None and (not _is_int(N) or N < 3):
        errors.append("problem.N must be an integer >= 3")
    theta = problem.get('theta')
    if theta is not None and (not _is_real(theta) or not 0 <= theta <= 1):
        errors.append("problem.theta must lie in [0, 1]")
    if problem.get('mode') not in ('ball', 'annulus', None):
        errors.append("problem.mode must be 'ball' or 'annulus'")

    # Validate mesh settings
    mesh = config.get('mesh', {})
    M = mesh.get('M')
    if M is not None and (not _is_int(M) or M < 4):
        errors.append("mesh.M must be an integer >= 4")
    grading = mesh.get('grading')
    if grading is not None and (not _is_real(grading) or grading < 1):
        errors.append("mesh.grading must be >= 1")

    # Validate solver settings
    solver = config.get('solver', {})
    if solver.get('method') not in ('oracle', 'picard', None):
        errors.append("solver.method must be 'oracle' or 'picard'")
    tol = solver.get('tol_update')
    if tol is not None and (not _is_real(tol) or tol <= 0):
        errors.append("solver.tol_update must be positive")
    max_iter = solver.get('max_iter')
    if max_iter is not None and (not _is_int(max_iter) or max_iter < 1):
        errors.append("solver.max_iter must be at least 1")
    damping = solver.get('damping')
    if damping is not None and (not _is_real(damping) or not 0 < damping <= 1):
        errors.append("solver.damping must lie in (0, 1]")
    floor = solver.get('damping_floor')
    if floor is not None and (not _is_real(floor) or floor <= 0):
        errors.append("solver.damping_floor must be positive")
    slack = solver.get('residual_slack')
    if slack is not None and (not _is_real(slack) or slack < 0):
        errors.append("solver.residual_slack must be nonnegative")
    stall_limit = solver.get('stall_limit')
    if stall_limit is not None and (not _is_int(stall_limit) or stall_limit < 1):
        errors.append("solver.stall_limit must be at least 1")
    ratio = solver.get('stall_ratio')
    if ratio is not None and (not _is_real(ratio) or not 0 < ratio <= 1):
        errors.append("solver.stall_ratio must lie in (0, 1]")

    # Validate sequence settings
    sequence = config.get('sequence', {})
    workers = sequence.get('workers')
    if workers is not None and (not _is_int(workers) or workers < 1):
        errors.append("sequence.workers must be at least 1")
    schedule = sequence.get('schedule')
    if schedule is not None:
        if not isinstance(schedule, list) or not all(_is_real(n) and n > 0 for n in schedule):
            errors.append("sequence.schedule must be a list of positive numbers")
        elif any(b <= a for a, b in zip(schedule, schedule[1:])):
            errors.append("sequence.schedule must be strictly increasing")

    # Validate analysis settings
    analysis = config.get('analysis', {})
    seed = analysis.get('seed')
    if seed is not None and (not _is_int(seed) or seed < 0):
        errors.append("analysis.seed must be a nonnegative integer")
    samples = analysis.get('samples')
    if samples is not None and (not _is_int(samples) or samples < 1):
        errors.append("analysis.samples must be at least 1")
    delta = analysis.get('delta')
    if delta is not None and (not _is_real(delta) or delta <= 0):
        errors.append("analysis.delta must be positive")
    refinements = analysis.get('refinements')
    if refinements is not None and (not isinstance(refinements, list) or len(refinements) < 3):
        errors.append("analysis.refinements needs at least 3 mesh sizes")

    # Validate output settings
    if config.get('output', {}).get('format') not in ('csv', 'json', None):
        errors.append("output.format must be 'csv' or 'json'")

    return errors
