"""Core numerics for the degenerate coercivity lab"""
from .errors import (AssemblyError, ConfigurationError, DegenError, DomainError,
                     NonConvergenceError)
from .regimes import ClassPoint, Region, RegimeReport, classify, phase_diagram_grid
from .problem import Coefficient, ProblemSpec, Source
from .mesh import NodalField, RadialMesh, build_mesh
from .solver import SolveConfig, SolveResult, oracle_solve, picard_solve
from .sequence import SequenceResult, truncated_sequence
from .estimates import EstimateCheck, EstimateLedger, check_estimate, run_estimates

__all__ = [
    'DegenError', 'DomainError', 'ConfigurationError', 'AssemblyError', 'NonConvergenceError',
    'ClassPoint', 'Region', 'RegimeReport', 'classify', 'phase_diagram_grid',
    'Coefficient', 'Source', 'ProblemSpec',
    'RadialMesh', 'NodalField', 'build_mesh',
    'SolveConfig', 'SolveResult', 'oracle_solve', 'picard_solve',
    'SequenceResult', 'truncated_sequence',
    'EstimateCheck', 'EstimateLedger', 'check_estimate', 'run_estimates',
]
