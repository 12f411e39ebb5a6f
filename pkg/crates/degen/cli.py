import functools
import sys
from fractions import Fraction

import click
import numpy as np

from degen import __version__
from degen.config import DEFAULT_CONFIG, ConfigManager
from degen.core.analysis import (RadialBump, distributional_residual, fit_decay_slope,
                                 gradient_integrability_threshold, predicted_decay_slope)
from degen.core.errors import (AssemblyError, ConfigurationError, DomainError,
                               NonConvergenceError)
from degen.core.estimates import EstimateId, parse_ids, run_estimates
from degen.core.mesh import build_mesh
from degen.core.problem import Coefficient, ProblemSpec, Source
from degen.core.regimes import ClassPoint, classify, phase_diagram_grid
from degen.core.sequence import truncated_sequence
from degen.core.solver import SolveConfig, oracle_solve, picard_solve
from degen.integrations.export import (ledger_table, phase_table, sequence_table,
                                       solution_table, write_json)
from degen.utils.logging import setup_logging
from degen.utils.validation import validate_config

EXIT_INVALID = 2
EXIT_NONCONVERGENCE = 3
EXIT_STRICT = 4


# Helpers
class ExactNumber(click.ParamType):
    """Decimal or rational literal kept exact (0.75, 3/4, 1e-3)"""

    name = "number"

    def convert(self, value, param, ctx):
        if isinstance(value, (Fraction, int, float)):
            return value
        try:
            return Fraction(str(value).strip())
        except (ValueError, ZeroDivisionError):
            self.fail(f"'{value}' is not a number", param, ctx)


class NumberList(click.ParamType):
    """Comma-separated reals"""

    name = "list"

    def convert(self, value, param, ctx):
        if isinstance(value, (list, tuple)):
            return [float(v) for v in value]
        text = str(value).strip()
        if not text:
            return []
        try:
            return [float(v) for v in text.split(",")]
        except ValueError:
            self.fail(f"'{value}' is not a comma-separated list of numbers", param, ctx)


EXACT = ExactNumber()
NUMBERS = NumberList()


def _default(key: str):
    section, name = key.split(".")
    return DEFAULT_CONFIG[section][name]


def _fail(message, code: int):
    click.echo(f"[ERROR] {message}", err=True)
    sys.exit(code)


def handle_errors(fn):
    """Map lab exceptions onto exit codes"""
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except NonConvergenceError as e:
            _fail(e, EXIT_NONCONVERGENCE)
        except (DomainError, ConfigurationError, AssemblyError) as e:
            _fail(e, EXIT_INVALID)
    return wrapper


def spec_options(fn):
    """Problem and mesh flags shared by the solving subcommands"""
    options = [
        click.option('--N', 'N', type=int, help=f"Dimension [default: {_default('problem.N')}]"),
        click.option('--theta', type=float, help=f"Degeneracy exponent [default: {_default('problem.theta')}]"),
        click.option('--gamma', type=float, help=f"Source f = amp r^-gamma [default: {_default('problem.gamma')}]"),
        click.option('--amp', type=float, help=f"Source amplitude [default: {_default('problem.amp')}]"),
        click.option('--source-table', type=click.Path(exists=True, dir_okay=False),
                     help='Two-column r,f CSV replacing the power-law source'),
        click.option('--coef', help=f"const:C or sin:BASE,AMP,FREQ [default: {_default('problem.coef')}]"),
        click.option('--mode', type=click.Choice(['ball', 'annulus']),
                     help=f"Domain [default: {_default('problem.mode')}]"),
        click.option('--rmin', type=float, help=f"Annulus inner radius [default: {_default('problem.rmin')}]"),
        click.option('--inner-value', type=float,
                     help='Annulus inner Dirichlet value [default: closed form]'),
        click.option('--M', 'M', type=int, help=f"Mesh cells [default: {_default('mesh.M')}]"),
        click.option('--grading', type=float, help=f"Mesh grading exponent [default: {_default('mesh.grading')}]"),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def solver_options(fn):
    options = [
        click.option('--tol-update', type=float,
                     help=f"Relative L2 update tolerance [default: {_default('solver.tol_update')}]"),
        click.option('--max-iter', type=int, help=f"Picard iteration cap [default: {_default('solver.max_iter')}]"),
        click.option('--damping', type=float, help=f"Initial damping [default: {_default('solver.damping')}]"),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def output_options(fn):
    options = [
        click.option('--out', default='-', show_default=True, help="Output path, '-' for standard output"),
        click.option('--format', 'fmt', type=click.Choice(['csv', 'json']),
                     help=f"Output format [default: {_default('output.format')}]"),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def _apply_spec_flags(cfg: ConfigManager, kwargs):
    cfg.override({
        "problem.N": kwargs.get("N"),
        "problem.theta": kwargs.get("theta"),
        "problem.gamma": kwargs.get("gamma"),
        "problem.amp": kwargs.get("amp"),
        "problem.source_table": kwargs.get("source_table"),
        "problem.coef": kwargs.get("coef"),
        "problem.mode": kwargs.get("mode"),
        "problem.rmin": kwargs.get("rmin"),
        "problem.inner_value": kwargs.get("inner_value"),
        "mesh.M": kwargs.get("M"),
        "mesh.grading": kwargs.get("grading"),
        "solver.tol_update": kwargs.get("tol_update"),
        "solver.max_iter": kwargs.get("max_iter"),
        "solver.damping": kwargs.get("damping"),
        "output.format": kwargs.get("fmt"),
    })
    errors = validate_config(cfg.config)
    if errors:
        raise ConfigurationError("; ".join(errors))


def _read_source_table(path) -> Source:
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as e:
        raise ConfigurationError(f"cannot read source table {path}: {e}") from e
    if data.shape[1] != 2:
        raise ConfigurationError(f"source table {path} must have two columns r,f")
    return Source.tabulated(data[:, 0], data[:, 1])


def build_spec(cfg: ConfigManager) -> ProblemSpec:
    """ProblemSpec from the merged configuration"""
    table = cfg.get("problem.source_table")
    if table:
        source = _read_source_table(table)
    else:
        source = Source.power_law(float(cfg.get("problem.gamma")), float(cfg.get("problem.amp")))
    mode = cfg.get("problem.mode")
    annulus = mode == "annulus"
    return ProblemSpec(
        N=int(cfg.get("problem.N")),
        theta=float(cfg.get("problem.theta")),
        coefficient=Coefficient.parse(str(cfg.get("problem.coef"))),
        source=source,
        mode=mode,
        r_min=float(cfg.get("problem.rmin")) if annulus else 0.0,
        inner_value=cfg.get("problem.inner_value") if annulus else None,
        outer_radius=float(cfg.get("problem.outer_radius")),
    )


def build_solve_config(cfg: ConfigManager) -> SolveConfig:
    return SolveConfig(
        tol_update=float(cfg.get("solver.tol_update")),
        max_iter=int(cfg.get("solver.max_iter")),
        damping=float(cfg.get("solver.damping")),
        damping_floor=float(cfg.get("solver.damping_floor")),
        residual_slack=float(cfg.get("solver.residual_slack")),
        stall_limit=int(cfg.get("solver.stall_limit")),
        stall_ratio=float(cfg.get("solver.stall_ratio")),
    )


def _mesh(cfg: ConfigManager, spec: ProblemSpec):
    return build_mesh(spec, int(cfg.get("mesh.M")), float(cfg.get("mesh.grading")))


# CLI root
@click.group()
@click.version_option(version=__version__, prog_name="Degenerate Coercivity Lab")
@click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False),
              help='key = value (or YAML) configuration file')
@click.option('--log-level', type=click.Choice(['DEBUG', 'INFO', 'WARNING', 'ERROR'], case_sensitive=False),
              help=f"Log level [default: {_default('logging.level')}]")
@click.option('--log-file', type=click.Path(dir_okay=False), help='Also log to this file')
@click.pass_context
def cli(ctx, config_path, log_level, log_file):
    """Degenerate coercivity lab: regimes, radial solves and estimate checks"""
    try:
        cfg = ConfigManager(config_path)
    except ConfigurationError as e:
        _fail(e, EXIT_INVALID)
    cfg.override({"logging.level": log_level, "logging.file": log_file})
    errors = validate_config(cfg.config)
    if errors:
        _fail("; ".join(errors), EXIT_INVALID)
    setup_logging(cfg.get("logging.level"), cfg.get("logging.file"))
    ctx.obj = cfg


@cli.command(name='classify')
@click.option('--N', 'N', type=int, help=f"Dimension [default: {_default('problem.N')}]")
@click.option('--theta', type=EXACT, help=f"Degeneracy exponent [default: {_default('problem.theta')}]")
@click.option('--m', 'm', type=EXACT, required=True, help='Summability exponent of f')
@click.option('--llogl', is_flag=True, help='f log(1+|f|) is integrable')
@click.option('--out', default='-', show_default=True, help="Output path, '-' for standard output")
@click.pass_obj
@handle_errors
def classify_cmd(cfg, N, theta, m, llogl, out):
    """Report the regularity region of (N, theta, m) as JSON"""
    N = N if N is not None else int(cfg.get("problem.N"))
    theta = theta if theta is not None else cfg.get("problem.theta")
    report = classify(ClassPoint(N, theta, m, llogl))
    write_json(report.to_dict(), out)


@cli.command(name='solve')
@spec_options
@solver_options
@click.option('--method', type=click.Choice(['oracle', 'picard']),
              help=f"Solution path [default: {_default('solver.method')}]")
@click.option('--report', type=click.Path(dir_okay=False), help='Also write the JSON report here')
@output_options
@click.pass_obj
@handle_errors
def solve_cmd(cfg, method, report, out, fmt, **kwargs):
    """Solve one problem; CSV r,u,w,flux (or the JSON report with --format json)"""
    _apply_spec_flags(cfg, dict(kwargs, fmt=fmt))
    cfg.override({"solver.method": method})
    spec = build_spec(cfg)
    mesh = _mesh(cfg, spec)
    if cfg.get("solver.method") == "oracle":
        result = oracle_solve(spec, mesh)
    else:
        result = picard_solve(spec, mesh, build_solve_config(cfg))

    if cfg.get("output.format") == "json":
        write_json(result.to_dict(), out)
    else:
        solution_table(result).export_csv(out)
    if report:
        write_json(result.to_dict(), report)
    result.raise_for_status()


@cli.command(name='sequence')
@spec_options
@solver_options
@click.option('--schedule', type=NUMBERS, help='Truncation levels n [default: 1,2,4,...,1024]')
@click.option('--workers', type=int, help='Process pool size [default: $DEGEN_WORKERS or CPU count]')
@click.option('--report', type=click.Path(dir_okay=False), help='Also write the JSON report here')
@output_options
@click.pass_obj
@handle_errors
def sequence_cmd(cfg, schedule, workers, report, out, fmt, **kwargs):
    """Solve with T_n(f) for every n; CSV diagnostics per member"""
    _apply_spec_flags(cfg, dict(kwargs, fmt=fmt))
    cfg.override({"sequence.schedule": schedule or None, "sequence.workers": workers})
    spec = build_spec(cfg)
    seq = truncated_sequence(spec, _mesh(cfg, spec), build_solve_config(cfg),
                             cfg.get("sequence.schedule"), cfg.workers())

    if cfg.get("output.format") == "json":
        write_json(seq.to_dict(), out)
    else:
        sequence_table(seq).export_csv(out)
    if report:
        write_json(seq.to_dict(), report)
    if not seq.converged:
        _fail(f"sequence members {seq.failures} did not converge", EXIT_NONCONVERGENCE)


@cli.command(name='estimates')
@spec_options
@solver_options
@click.option('--ids', default=','.join(i.value for i in EstimateId),
              show_default=True, help='Comma-separated estimate ids')
@click.option('--k-list', type=NUMBERS, help='Truncation levels k [default: 1,2,4,8]')
@click.option('--schedule', type=NUMBERS, help='Truncation levels n [default: 1,2,4,...,1024]')
@click.option('--m', 'm', type=float, help='Exponent m for INIZIO [default: m_lower]')
@click.option('--rho', type=float, help='rho for CAMINO0/CAMINO/BAR [default: (N-2)/(2(N-1))]')
@click.option('--samples', type=int, help=f"BAR samples [default: {_default('analysis.samples')}]")
@click.option('--seed', type=int, help=f"BAR seed [default: {_default('analysis.seed')}]")
@click.option('--workers', type=int, help='Process pool size [default: $DEGEN_WORKERS or CPU count]')
@click.option('--strict', is_flag=True, help='Exit 4 when an explicit right-hand side is violated')
@output_options
@click.pass_obj
@handle_errors
def estimates_cmd(cfg, ids, k_list, schedule, m, rho, samples, seed, workers, strict,
                  out, fmt, **kwargs):
    """Estimate ledger estimate,k,p,rho,n,lhs,rhs,allowance,passed"""
    _apply_spec_flags(cfg, dict(kwargs, fmt=fmt))
    cfg.override({
        "analysis.k_list": k_list or None,
        "sequence.schedule": schedule or None,
        "analysis.m": m,
        "analysis.rho": rho,
        "analysis.samples": samples,
        "analysis.seed": seed,
        "sequence.workers": workers,
    })
    id_list = parse_ids(i for i in ids.split(",") if i.strip())
    if not id_list:
        raise DomainError("no estimate ids requested")
    spec = build_spec(cfg)
    needs_sequence = any(i != EstimateId.BAR.value for i in id_list)
    mesh = _mesh(cfg, spec)
    sequence = None
    if needs_sequence:
        sequence = truncated_sequence(spec, mesh, build_solve_config(cfg),
                                      cfg.get("sequence.schedule"), cfg.workers())
    ledger = run_estimates(
        spec, mesh, id_list,
        k_list=cfg.get("analysis.k_list"),
        m=cfg.get("analysis.m"),
        rho=cfg.get("analysis.rho"),
        samples=int(cfg.get("analysis.samples")),
        seed=int(cfg.get("analysis.seed")),
        sequence=sequence,
    )

    if cfg.get("output.format") == "json":
        write_json(ledger.to_dict(), out)
    else:
        ledger_table(ledger).export_csv(out)
    if sequence is not None and not sequence.converged:
        _fail(f"sequence members {sequence.failures} did not converge", EXIT_NONCONVERGENCE)
    if strict and ledger.explicit_failures:
        failed = sorted({c.estimate_id.value for c in ledger.explicit_failures})
        _fail(f"explicit estimates violated: {', '.join(failed)}", EXIT_STRICT)


@cli.command(name='exponents')
@spec_options
@click.option('--window', type=NUMBERS, help='Fit window r_a,r_b [default: 1e-4,1e-2]')
@click.option('--q-range', type=NUMBERS, help='Bisection range q_lo,q_hi [default: 1,2]')
@click.option('--refinements', type=NUMBERS, help='Mesh sizes [default: 256,512,1024,2048]')
@click.option('--delta', type=float, help=f"Growth threshold [default: {_default('analysis.delta')}]")
@click.option('--out', default='-', show_default=True, help="Output path, '-' for standard output")
@click.pass_obj
@handle_errors
def exponents_cmd(cfg, window, q_range, refinements, delta, out, **kwargs):
    """Fitted decay slope, empirical q* and weak-form residual as JSON"""
    _apply_spec_flags(cfg, kwargs)
    cfg.override({
        "analysis.window": window or None,
        "analysis.q_range": q_range or None,
        "analysis.refinements": [int(M) for M in refinements] if refinements else None,
        "analysis.delta": delta,
    })
    window = cfg.get("analysis.window")
    q_range = cfg.get("analysis.q_range")
    if len(window) != 2 or len(q_range) != 2:
        raise ConfigurationError("--window and --q-range take two numbers each")
    spec = build_spec(cfg)
    ball = spec.with_mode("ball")
    result = oracle_solve(ball, _mesh(cfg, ball))
    predicted = predicted_decay_slope(ball)
    payload = {"spec": ball.to_dict()}
    if predicted == 0.0:
        payload["decay"] = {"predicted": 0.0, "fitted": None, "relative_gap": None,
                            "window": list(window), "blow_up": False}
    else:
        payload["decay"] = fit_decay_slope(result.u, tuple(window), predicted).to_dict()
        payload["decay"]["blow_up"] = True
    payload["threshold"] = gradient_integrability_threshold(
        ball, tuple(q_range), [int(M) for M in cfg.get("analysis.refinements")],
        grading=float(cfg.get("mesh.grading")), delta=float(cfg.get("analysis.delta")),
    ).to_dict()
    bumps = [RadialBump(a * ball.outer_radius, b * ball.outer_radius)
             for a, b in cfg.get("analysis.bumps")]
    payload["distributional_residual"] = distributional_residual(result, ball, bumps)
    write_json(payload, out)


@cli.command(name='phase-diagram')
@click.option('--N', 'N', type=int, help=f"Dimension [default: {_default('problem.N')}]")
@click.option('--grid', type=int, help='Steps on both axes')
@click.option('--theta-steps', type=int, help=f"theta steps [default: {_default('phase.theta_steps')}]")
@click.option('--m-steps', type=int, help=f"m steps [default: {_default('phase.m_steps')}]")
@click.option('--m-min', type=EXACT, help=f"Smallest m [default: {_default('phase.m_min')}]")
@click.option('--m-max', type=EXACT, help='Largest m [default: N]')
@click.option('--no-curve', is_flag=True, help='Omit the borderline points m = m_lower')
@output_options
@click.pass_obj
@handle_errors
def phase_diagram_cmd(cfg, N, grid, theta_steps, m_steps, m_min, m_max, no_curve, out, fmt):
    """Region label for every (theta, m) grid point; CSV theta,m,region"""
    cfg.override({
        "problem.N": N,
        "phase.theta_steps": theta_steps or grid,
        "phase.m_steps": m_steps or grid,
        "phase.m_min": m_min,
        "phase.m_max": m_max,
        "output.format": fmt,
    })
    N = int(cfg.get("problem.N"))
    rows = phase_diagram_grid(
        N,
        int(cfg.get("phase.theta_steps")),
        cfg.get("phase.m_min"),
        cfg.get("phase.m_max", N),
        int(cfg.get("phase.m_steps")),
        include_curve=not no_curve,
    )
    table = phase_table(rows)
    if cfg.get("output.format") == "json":
        table.export_json(out)
    else:
        table.export_csv(out)


def main():
    cli()


if __name__ == '__main__':
    main()
