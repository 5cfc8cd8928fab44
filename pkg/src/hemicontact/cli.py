"""Command-line interface.

Exit codes: 0 success, 2 scenario/parse errors, 3 hypothesis or solvability
failures, 4 solver failures.
"""

from __future__ import annotations

import argparse
import configparser
import io
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .coupling import FixedPointError, SmallnessError, check_smallness, default_rho, fixed_point_solve
from .materials import check_hypotheses
from .mesh import MeshError
from .nonsmooth import LawError
from .output import write_json, write_run
from .scenario import ScenarioError, parse_scenario, parse_scenario_text, _resolve
from .solvers import SolverError

EXIT_OK, EXIT_PARSE, EXIT_HYPOTHESIS, EXIT_SOLVER = 0, 2, 3, 4

log = logging.getLogger("hemicontact")


def workers() -> int:
    try:
        return max(1, int(os.environ.get("HEMICONTACT_THREADS", "1")))
    except ValueError:
        return 1


def _load(path: str, args):
    sc = parse_scenario(path)
    if getattr(args, "dt_override", None):
        n = max(1, int(round(sc.grid.T / args.dt_override)))
        sc = sc.with_grid(n_steps=n)
    updates = {}
    if getattr(args, "epsilon_floor", None):
        updates["epsilon_floor"] = args.epsilon_floor
    if getattr(args, "force", False):
        updates["force"] = True
    if updates:
        sc = sc.replace(config=sc.config.with_updates(**updates))
    return sc


def cmd_run(args) -> int:
    sc = _load(args.scenario, args)
    hyp = check_hypotheses(sc.model, args.samples, seed=args.seed, T=sc.grid.T)
    small = check_smallness(sc)
    if not hyp.passed and not args.force:
        print(hyp.format(), end="")
        print("hypothesis check failed; rerun with --force to proceed", file=sys.stderr)
        return EXIT_HYPOTHESIS
    if not small.passed and not args.force:
        print(small.format(), end="")
        print("solvability conditions violated; rerun with --force to proceed", file=sys.stderr)
        return EXIT_HYPOTHESIS
    res = fixed_point_solve(sc)
    out = Path(args.out)
    arts = write_run(sc, res, small, hyp, out, seed=args.seed)
    print(res.report.to_csv(), end="")
    print(f"converged in {res.report.iterations} coupling iterations; artifacts in {arts.directory}")
    return EXIT_OK


def cmd_check_hypotheses(args) -> int:
    sc = _load(args.scenario, args)
    rep = check_hypotheses(sc.model, args.samples, seed=args.seed, T=sc.grid.T)
    print(rep.format(_unit_label(sc)), end="")
    return EXIT_OK if rep.passed else EXIT_HYPOTHESIS


def cmd_check_smallness(args) -> int:
    sc = _load(args.scenario, args)
    rep = check_smallness(sc)
    print(rep.format(_unit_label(sc)), end="")
    return EXIT_OK if rep.passed else EXIT_HYPOTHESIS


def _unit_label(sc) -> str:
    return " ".join(f"{k}={sc.units[k]}" for k in sorted(sc.units))


def _with_value(text: str, key: str, value: str) -> str:
    section, _, option = key.rpartition(".")
    if not section:
        raise ScenarioError("expected SECTION.KEY", key)
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    cp.optionxform = str
    cp.read_string(text)
    if not cp.has_section(section):
        raise ScenarioError("unknown section", section)
    cp[section][option] = value
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def _study_point(text: str, base: Path, source: str, key: str, value: str, rho: float) -> dict:
    sc = parse_scenario_text(_with_value(text, key, value), base=base, source=source)
    sc = sc.replace(config=sc.config.with_updates(force=True, rho=rho))
    small = check_smallness(sc)
    row = {"value": value, "smallness": "pass" if small.passed else "fail",
           "min_margin": min(c.margin for c in small.conditions)}
    try:
        res = fixed_point_solve(sc)
        rep = res.report
        row.update(iterations=rep.iterations, max_ratio=max(rep.ratios, default=0.0),
                   asymptotic_ratio=rep.asymptotic_ratio, final_distance=rep.final_residual, converged="yes")
    except FixedPointError as exc:
        rep = exc.report
        row.update(iterations=rep.iterations, max_ratio=max(rep.ratios, default=math.nan),
                   asymptotic_ratio=rep.asymptotic_ratio, final_distance=rep.final_residual, converged="no")
    except SolverError as exc:
        row.update(iterations=0, max_ratio=math.nan, asymptotic_ratio=math.nan, final_distance=math.nan,
                   converged=f"solver failure ({exc.subproblem})")
    return row


def cmd_contraction_study(args) -> int:
    path = Path(args.scenario)
    if not path.is_file():
        path = _resolve(str(path), None, "scenarios")
    text = path.read_text()
    rho = args.rho
    if rho is None:
        # one weight for the whole sweep so that the ratios are comparable
        first = parse_scenario_text(_with_value(text, args.param, args.values[0]), base=path.parent, source=str(path))
        rho = first.config.rho if first.config.rho is not None else default_rho(first)[0]
    with ThreadPoolExecutor(max_workers=workers()) as pool:
        rows = list(pool.map(lambda v: _study_point(text, path.parent, str(path), args.param, v, rho), args.values))
    print(f"# rho = {rho:.17g}")
    cols = ("value", "smallness", "min_margin", "iterations", "max_ratio", "asymptotic_ratio", "final_distance", "converged")
    lines = [",".join(("param", *cols))]
    for r in rows:
        fields = [args.param] + [format(r[c], ".17g") if isinstance(r[c], float) else str(r[c]) for c in cols]
        lines.append(",".join(fields))
    table = "\n".join(lines) + "\n"
    print(table, end="")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "contraction.csv").write_text(table)
    return EXIT_OK


def cmd_convergence_study(args) -> int:
    from .manufactured import convergence_study

    table = convergence_study(args.levels)
    csv = table.to_csv()
    print(csv, end="")
    ou, ot = table.orders("error_u"), table.orders("error_theta")
    print("observed order u: " + " ".join(f"{o:.3f}" for o in ou))
    print("observed order theta: " + " ".join(f"{o:.3f}" for o in ot))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "convergence.csv").write_text(csv)
        write_json({"levels": args.levels, "order_u": ou, "order_theta": ot}, out / "convergence.json")
    return EXIT_OK if min(ou + ot, default=0.0) >= 0.8 else EXIT_SOLVER


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hemicontact", description="Thermoviscoelastic frictional contact with nonmonotone boundary laws.")
    p.add_argument("-v", "--verbose", action="store_true", help="log coupling iterations")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, scenario=True):
        if scenario:
            sp.add_argument("scenario", help="scenario file (.scn); shipped names are resolved too")
        sp.add_argument("--out", default=None, help="artifact directory")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--dt-override", type=float, default=None, help="replace the time step")
        sp.add_argument("--force", action="store_true", help="proceed despite failed hypothesis or solvability checks")
        sp.add_argument("--epsilon-floor", type=float, default=None, help="smallest regularization width")

    sp = sub.add_parser("run", help="solve the coupled problem and write artifacts")
    common(sp)
    sp.add_argument("--samples", type=int, default=1000, help="samples for the hypothesis check")
    sp.set_defaults(func=cmd_run, out="out")
    sp = sub.add_parser("check-hypotheses", help="sample the material law hypotheses")
    common(sp)
    sp.add_argument("--samples", type=int, default=1000)
    sp.set_defaults(func=cmd_check_hypotheses)
    sp = sub.add_parser("check-smallness", help="audit the solvability conditions")
    common(sp)
    sp.set_defaults(func=cmd_check_smallness)
    sp = sub.add_parser("contraction-study", help="sweep one scenario value and tabulate contraction ratios")
    common(sp)
    sp.add_argument("--param", required=True, help="SECTION.KEY, e.g. laws.tangential.static")
    sp.add_argument("--values", nargs="+", required=True)
    sp.add_argument("--rho", type=float, default=None, help="shared weight (default: fitted at the first value)")
    sp.set_defaults(func=cmd_contraction_study)
    sp = sub.add_parser("convergence-study", help="manufactured-solution refinement study")
    common(sp, scenario=False)
    sp.add_argument("--levels", type=int, default=3)
    sp.set_defaults(func=cmd_convergence_study)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ScenarioError, MeshError, LawError, FileNotFoundError, configparser.Error) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except SmallnessError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except (SolverError, FixedPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
