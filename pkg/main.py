#!/usr/bin/env python3
"""
Main entry point of the Monge-Ampere laboratory

    ma <command> [--config FILE] [--out DIR] [--seed N] [-v]

Commands:
- solve:    Newton solve, fields and residual history
- sweep:    solve (or load fields), then the moving-plane sweep
- barrier:  epsilon0 table over grids of (m, C0, G_max, F_max)
- check:    sampled hypothesis checks of a nonlinearity
- validate: manufactured-solution convergence tables

Exit status is 0 when every verdict passes, 1 when one fails and 2 on an
error; errors print a single `error=<Name> reason=<text>` line on stderr.
"""

import argparse
import itertools
import logging
import sys
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from fields.grid import UniformGrid
from fields.scalar_field import load_field, node_class_counts
from geometry.domains import builtin_domain, superellipse
from geometry.reflection import half_width_a
from moving_planes.barrier import BarrierParams, barrier_epsilon0, barrier_ratio_bound, sample_barrier_ratios
from moving_planes.sweep import reflect_difference, sweep
from nonlinearity.coupled_rhs import DerivativeMode, get_rhs
from nonlinearity.hypotheses import SamplingBox, check_cross_monotonicity, check_p1_symmetry
from solver.manufactured import CATALOG, convergence_study, convergence_verdict, manufactured_case
from solver.newton import boundary_monotonicity_report, newton_solve
from utils.config import COMMANDS, ExperimentConfig, boundary_function, load_config, parse_config
from utils.errors import MongeAmpereError, NoEpsilonFound
from utils.save_results import ResultSaver
from utils.verdicts import VerdictRunner

logger = logging.getLogger("ma")


def build_problem(config: ExperimentConfig):
    """
    Domain, nonlinearity and Dirichlet data of a run

    A manufactured case overrides domain, rhs and boundary keys.
    """
    if config.case:
        case = manufactured_case(config.case)
        return case.domain, case.rhs, case.boundary_u, case.boundary_v
    if config.domain == "superellipse":
        domain = superellipse(**config.domain_params)
    else:
        domain = builtin_domain(config.domain)
    rhs = get_rhs(config.rhs, config.rhs_coefficients, DerivativeMode(config.derivative_mode))
    return domain, rhs, boundary_function(config.boundary_u), boundary_function(config.boundary_v)


def _solve(config: ExperimentConfig, saver: ResultSaver, verdicts: VerdictRunner, manifest: dict):
    domain, rhs, boundary_u, boundary_v = build_problem(config)
    grid = UniformGrid.build(domain, config.h)
    result = newton_solve(domain, grid, rhs, boundary_u, boundary_v, config=config.solve, seed=config.seed)

    saver.save_fields(result.u, result.v)
    steps = [np.nan] + list(result.step_lengths)
    history = pd.DataFrame({
        "iteration": np.arange(len(result.residual_history)),
        "residual": result.residual_history,
        "step_length": steps[:len(result.residual_history)],
    })
    saver.save_table("residuals", history)
    saver.save_heatmap("u", result.u, title="u")
    saver.save_heatmap("v", result.v, title="v")

    convexity = result.convexity_report
    manifest.update({
        "case": config.case or "",
        "domain": domain.name,
        "rhs": rhs.name,
        "h": config.h,
        "iterations": result.iterations,
        "final_residual": result.final_residual,
        "converged": result.converged,
        "convexity_violations": convexity.violations if convexity else 0,
    })
    manifest.update({f"nodes.{k.lower()}": v for k, v in node_class_counts(grid).items()})
    verdicts.record("converged", result.converged, f"final_residual={result.final_residual:.3e}")
    if convexity is not None:
        verdicts.record("convexity", convexity.passed, f"violations={convexity.violations}")
    if result.boundary_monotonicity_report is not None:
        verdicts.record("boundary_condition", result.boundary_monotonicity_report.passed)
    return domain, rhs, result.u, result.v


def run_solve(config, saver, verdicts, manifest):
    _solve(config, saver, verdicts, manifest)


def run_sweep(config, saver, verdicts, manifest):
    if config.sweep_u_field is not None:
        domain, rhs, _, _ = build_problem(config)
        u = load_field(config.sweep_u_field, domain=domain)
        v = load_field(config.sweep_v_field, grid=u.grid)
        manifest.update({"domain": domain.name, "rhs": rhs.name, "h": u.grid.h,
                         "u_field": str(config.sweep_u_field), "v_field": str(config.sweep_v_field)})
    else:
        domain, rhs, u, v = _solve(config, saver, verdicts, manifest)

    report = sweep(u, v, domain, config.sweep, rhs=rhs)
    saver.save_table("sweep", report.to_frame())
    saver.save_table("violations", report.violations)
    manifest.update({f"sweep.{k}": v for k, v in report.summary().items()})

    verdicts.record("planes", report.all_planes_pass, f"lambda_bar={report.lambda_bar:.6g}")
    verdicts.record("monotonicity", report.monotonicity_pass,
                    f"worst_margin={min(report.monotonicity_u.worst_margin, report.monotonicity_v.worst_margin):.3e}")

    box = SamplingBox.from_fields(u, v)
    symmetry = check_p1_symmetry(rhs, box, n=config.check_samples, seed=config.seed)
    cross = check_cross_monotonicity(rhs, box, n=config.check_samples, seed=config.seed)
    manifest.update(symmetry.summary())
    manifest.update(cross.summary())
    verdicts.record("p1_symmetry", symmetry.passed)
    verdicts.record("cross_monotonicity", cross.passed)

    # the symmetric conclusion needs a symmetric domain and equality in the p1 hypothesis
    if domain.symmetric_x1 and symmetry.equality:
        defect = max(report.symmetry_defect_u, report.symmetry_defect_v)
        verdicts.record("symmetry", defect <= report.sign_tol, f"defect={defect:.3e}")

    if config.sweep_u_field is not None:
        verdicts.record("boundary_condition", boundary_monotonicity_report(u, v).passed)

    grid = u.grid
    for k, lam in enumerate(config.sweep_heatmaps):
        cap = reflect_difference(u, lam, report.a, strict=False)
        saver.save_heatmap(f"U_{k}", cap.to_grid_array(grid), title=f"U(x, {lam:.4g})", grid=grid)


def run_barrier(config, saver, verdicts, manifest):
    domain, _, _, _ = build_problem(config)
    a = half_width_a(domain)
    table_spec = config.barrier
    rows = []
    for m, c0, g_max, f_max in itertools.product(table_spec.m, table_spec.C0, table_spec.G_max, table_spec.F_max):
        row = {"m": m, "C0": c0, "G_max": g_max, "F_max": f_max}
        try:
            eps0 = barrier_epsilon0(m, c0, g_max, f_max)
        except NoEpsilonFound as exc:
            logger.warning("%s", exc)
            row.update({"epsilon0": np.nan, "epsilon": np.nan, "bound": np.nan,
                        "max_ratio_1": np.nan, "max_ratio_2": np.nan, "passed": False})
            rows.append(row)
            continue
        params = BarrierParams(m=m, C0=c0, a=a, epsilon=min(0.5 * eps0, a), G_max=g_max, F_max=f_max)
        sample = sample_barrier_ratios(params, samples=table_spec.samples, seed=config.seed)
        row.update({
            "epsilon0": eps0,
            "epsilon": params.epsilon,
            "bound": barrier_ratio_bound(params),
            "max_ratio_1": sample.max_ratio_1,
            "max_ratio_2": sample.max_ratio_2,
            "passed": sample.passed,
        })
        rows.append(row)

    table = pd.DataFrame(rows)
    saver.save_table("barrier", table)
    manifest.update({"domain": domain.name, "a": a, "barrier.rows": len(table)})
    verdicts.record("barrier", bool(table["passed"].all()), f"rows={len(table)}")


def run_check(config, saver, verdicts, manifest):
    _, rhs, _, _ = build_problem(config)
    box = SamplingBox(**config.check_box) if config.check_box else SamplingBox.default()
    reports = [
        check_p1_symmetry(rhs, box, n=config.check_samples, seed=config.seed),
        check_cross_monotonicity(rhs, box, n=config.check_samples, seed=config.seed),
    ]
    saver.save_table("hypotheses", pd.DataFrame([
        {"check": r.check, "passed": r.passed, "samples": r.samples, "worst_margin": r.worst_margin}
        for r in reports
    ]))
    manifest["rhs"] = rhs.name
    for report in reports:
        manifest.update(report.summary())
        verdicts.record(report.check, report.passed)


def run_validate(config, saver, verdicts, manifest):
    cases = config.validate_cases or tuple(CATALOG)
    tables = []
    for name in cases:
        table = convergence_study(name, config.grid_h, config=config.solve, seed=config.seed)
        tables.append(table)
        verdicts.record(f"convergence.{name}", convergence_verdict(table))
    saver.save_table("convergence", pd.concat(tables, ignore_index=True))
    manifest.update({"cases": list(cases), "grid_h": list(config.grid_h)})


RUNNERS = {
    "solve": run_solve,
    "sweep": run_sweep,
    "barrier": run_barrier,
    "check": run_check,
    "validate": run_validate,
}


def run(config: ExperimentConfig) -> int:
    """
    Execute one command and write its artifacts

    Returns:
        int: 0 if every verdict passed, 1 otherwise
    """
    saver = ResultSaver(config.output_dir)
    verdicts = VerdictRunner()
    manifest = {"command": config.command, "seed": config.seed}
    RUNNERS[config.command](config, saver, verdicts, manifest)
    manifest.update(verdicts.summary())
    saver.save_manifest(manifest)
    print(verdicts.generate_report())
    return verdicts.exit_status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ma", description="Coupled Monge-Ampere laboratory")
    parser.add_argument("command", choices=COMMANDS, help="experiment to run")
    parser.add_argument("--config", type=str, help="key = value experiment file")
    parser.add_argument("--out", type=str, help="output directory (overrides output_dir)")
    parser.add_argument("--seed", type=int, help="sampling seed (overrides seed)")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse the command line and run

    Returns:
        int: exit status
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.config:
            config = load_config(args.config, command=args.command, output_dir=args.out, seed=args.seed)
        else:
            config = parse_config("", source="<defaults>", command=args.command,
                                  output_dir=args.out, seed=args.seed)
        return run(config)
    except MongeAmpereError as exc:
        print(exc.reason(), file=sys.stderr)
        return 2
    except OSError as exc:
        message = " ".join(str(exc).split())
        print(f"error=IOError reason={message}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
