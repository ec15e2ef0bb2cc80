"""Command-line front end: ``cosshell validate | energy | solve | koiter-compare``.

Exit codes: 0 ok, 1 validation failure, 2 non-convergence or ill-posed
problem, 3 input error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from .errors import CosshellError, NonConvergence, ScenarioError
from .kinematics import MidsurfaceConfiguration, load_fields, save_fields
from .scenario import Scenario, load_scenario
from .solver import ShellProblem, minimize

EXIT_OK, EXIT_VALIDATION, EXIT_NONCONVERGENCE, EXIT_INPUT = 0, 1, 2, 3

log = logging.getLogger("cosshell")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _emit(obj, out_dir=None, filename=None):
    text = json.dumps(obj, indent=2, sort_keys=True)
    print(text)
    if out_dir is not None and filename:
        path = Path(out_dir)
        path.mkdir(parents=True, exist_ok=True)
        (path / filename).write_text(text + "\n")


def _scenario(args) -> Scenario:
    if not args.scenario:
        raise ScenarioError("--scenario is required for this command")
    sc = load_scenario(args.scenario)
    if getattr(args, "variant", None):
        sc.data["variant"] = args.variant
    return sc


def _fit_order(sizes, values):
    h = 1.0 / (np.asarray(sizes, dtype=float) - 1)
    v = np.maximum(np.asarray(values, dtype=float), 1e-300)
    return float(np.polyfit(np.log(h), np.log(v), 1)[0])


# ---------------------------------------------------------------------------
# subcommands

def cmd_validate(args) -> int:
    from .validation import format_table, run_suites

    material = _scenario(args).material if args.scenario else None
    results = run_suites(seed=args.seed, material=material)
    print(format_table(results))
    failed = [r.name for r in results if not r.ok]
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "validation.json").write_text(
            json.dumps([r.to_dict() for r in results], indent=2, default=float) + "\n")
    if failed:
        print(f"FAILED: {', '.join(failed)}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


def energy_report(problem: ShellProblem, config: MidsurfaceConfiguration) -> dict:
    """Total energy with breakdowns by thickness order and by kind."""
    terms = problem.energy_terms(config)
    load = terms.pop("load_potential")
    elastic = sum(terms.values())
    by_order = {
        "h": sum(v for k, v in terms.items() if k.startswith("h_")),
        "h3": sum(v for k, v in terms.items() if k.startswith("h3_")),
    }
    by_kind = {}
    for k, v in terms.items():
        kind = k.split("_", 1)[1]
        by_kind[kind] = by_kind.get(kind, 0.0) + v
    return {
        "total": elastic + load,
        "elastic": elastic,
        "load_potential": load,
        "terms": terms,
        "by_order": by_order,
        "by_kind": by_kind,
        "variant": problem.variant,
    }


def cmd_energy(args) -> int:
    sc = _scenario(args)
    disc = sc.discretization()
    problem = ShellProblem(disc, sc.material, sc.boundary_conditions(disc), sc.loads(disc), sc.variant,
                           threads=args.threads or 1)
    config = load_fields(args.config, disc.grid) if args.config else MidsurfaceConfiguration.reference(disc)
    report = energy_report(problem, config)
    report["scenario"] = sc.name
    _emit(report, args.out, "energy.json")
    return EXIT_OK


def cmd_solve(args) -> int:
    sc = _scenario(args)
    out_dir = Path(args.out or ".")
    runs = []
    config = None
    status = EXIT_OK
    for n_u, n_v in sc.grid_sizes():
        disc = sc.discretization(n_u, n_v)
        problem = ShellProblem(disc, sc.material, sc.boundary_conditions(disc), sc.loads(disc), sc.variant,
                               threads=args.threads or sc.data["solver"]["threads"])
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            well_posed = problem.check_well_posed()
        if not well_posed:
            print("cosshell: ill-posed scenario: no Dirichlet boundary and a nonzero net force", file=sys.stderr)
            return EXIT_NONCONVERGENCE
        opts = sc.solve_options(args.threads)
        if args.config and len(runs) == 0:
            opts.initial = load_fields(args.config, disc.grid)
        log.info("solving %s on a %dx%d grid", sc.name or "scenario", n_u, n_v)
        try:
            config, report = minimize(problem, opts)
        except NonConvergence as exc:
            config, report = exc.config, exc.report
            status = EXIT_NONCONVERGENCE
            print(f"cosshell: {exc}", file=sys.stderr)
        rf, rm = problem.interior_residual(config, sc.data["solver"]["residual_margin"])
        rec = report.to_dict()
        rec.update(grid=[n_u, n_v], residual_force=rf, residual_moment=rm,
                   energy_terms=energy_report(problem, config))
        runs.append(rec)
        if status != EXIT_OK:
            break
    summary = {
        "scenario": sc.name,
        "variant": sc.variant,
        "converged": status == EXIT_OK,
        "runs": runs,
    }
    if len(runs) >= 2 and status == EXIT_OK:
        sizes = [r["grid"][0] for r in runs]
        summary["residual_order_force"] = _fit_order(sizes, [r["residual_force"] for r in runs])
        summary["residual_order_moment"] = _fit_order(sizes, [r["residual_moment"] for r in runs])
    out_dir.mkdir(parents=True, exist_ok=True)
    if config is not None:
        save_fields(sc.output_path("fields", out_dir), config, disc.grid)
    sc.output_path("report", out_dir).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    brief = {k: v for k, v in summary.items() if k != "runs"}
    brief["runs"] = [{k: r[k] for k in ("grid", "energy", "iterations", "converged", "residual_force",
                                        "residual_moment", "message")} for r in runs]
    print(json.dumps(brief, indent=2, sort_keys=True))
    return status


def cmd_koiter_compare(args) -> int:
    from .koiter import KoiterMaterial, amplitude_study, builtin_fixtures

    sc = _scenario(args)
    spec = sc.data.get("koiter") or {"fixture": "sphere-cap", "amplitudes": [1e-2, 1e-3, 1e-4], "n": 33}
    fixture = builtin_fixtures()[spec["fixture"]]
    report = amplitude_study(fixture, KoiterMaterial.from_material(sc.material), spec["amplitudes"], spec["n"])
    report["scenario"] = sc.name
    _emit(report, args.out, "koiter.json")
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", metavar="PATH", help="scenario JSON file")
    common.add_argument("--config", metavar="PATH", help="field CSV (idx,u,v,mx,my,mz,qw,qx,qy,qz)")
    common.add_argument("--variant", choices=("harmonic", "arithmetic"), help="override the shear variant")
    common.add_argument("--threads", type=int, default=None, metavar="N", help="kernel threads")
    common.add_argument("--seed", type=int, default=0, metavar="N", help="RNG seed of the validation suites")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    parser = _Parser(prog="cosshell", description="Nonlinear 6-parameter Cosserat shell toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, fn, text in (
        ("validate", cmd_validate, "run the invariant suites"),
        ("energy", cmd_energy, "evaluate the energy of a configuration"),
        ("solve", cmd_solve, "minimize the energy of a scenario"),
        ("koiter-compare", cmd_koiter_compare, "compare the reduced energy with the Koiter energy"),
    ):
        p = sub.add_parser(name, parents=[common], help=text)
        p.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is not None and args.threads < 1:
        parser.error("--threads must be positive")
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (ScenarioError, CosshellError, ValueError, OSError) as exc:
        print(f"cosshell: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
