"""Command-line driver.

Exit status is 0 on success, 1 on a numerical failure (non-convergence,
failed verification, mesh generation failure) and 2 on a usage error.
"""

import argparse
import csv
import io
import json
import math
import platform
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import DEFAULT_H0, DIV_COLUMNS, RATE_COLUMNS, REFERENCE_RATES, ConvergenceStudy, error_ratios, run_level
from .benchmarks import PROBLEM_IDS, problem, verify_manufactured
from .errors import MiniStokesError
from .mesh import generate_mesh, quality_report, read_mesh, write_mesh
from .solver import DEFAULT_DROPTOL, MAX_ITER, SolverConfig, tolerance_for

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2

ERROR_FIELDS = RATE_COLUMNS + DIV_COLUMNS
RESULT_COLUMNS = ("problem", "h", "vertices", "triangles") + ERROR_FIELDS + ("iterations", "residual", "status")
RATES_COLUMNS = ("problem",) + RATE_COLUMNS + DIV_COLUMNS
RATIO_COLUMNS = ("problem", "h", "ratio_H1", "ratio_L2", "ratio_div")


class UsageError(Exception):
    pass


@dataclass
class StudyConfig:
    problems: tuple
    h0: tuple = DEFAULT_H0
    droptol: float = DEFAULT_DROPTOL
    tol: float = None
    maxit: int = MAX_ITER
    seed: int = None
    out: str = None

    def __post_init__(self):
        if not self.problems:
            raise UsageError("no problems selected")
        if len(self.h0) < 3:
            raise UsageError("a study needs at least three h0 values")
        if any(b >= a for a, b in zip(self.h0, self.h0[1:])):
            raise UsageError("h0 values must be strictly decreasing")

    def solver_config(self, pid):
        tol = self.tol if self.tol is not None else tolerance_for(pid)
        return SolverConfig(tol=tol, maxit=self.maxit, droptol=self.droptol)


def fmt(v):
    """17 significant digits for floats; plain text otherwise."""
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    if v is None:
        return ""
    return str(v)


def _write_csv(path, columns, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(row.get(c)) for c in columns])
    Path(path).write_text(buf.getvalue())


# --- argument parsing -------------------------------------------------------

def _positive_float(s):
    try:
        v = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {s!r}") from None
    if not (math.isfinite(v) and v > 0):
        raise argparse.ArgumentTypeError(f"must be positive: {s!r}")
    return v


def _h0_list(s):
    return tuple(_positive_float(t) for t in s.split(",") if t.strip())


def _problem_list(s):
    out = []
    for t in s.split(","):
        try:
            pid = int(t)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a problem id: {t!r}") from None
        if pid not in PROBLEM_IDS:
            raise argparse.ArgumentTypeError(f"unknown problem {pid}; choose from 1-7")
        out.append(pid)
    return tuple(out)


def _nonneg_float(s):
    try:
        v = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {s!r}") from None
    if not (math.isfinite(v) and v >= 0):
        raise argparse.ArgumentTypeError(f"must be non-negative: {s!r}")
    return v


def _positive_int(s):
    try:
        v = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {s!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1: {s!r}")
    return v


def build_parser():
    p = argparse.ArgumentParser(prog="ministokes", description="MINI-element Stokes solver and benchmark driver.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def solver_flags(sp):
        sp.add_argument("--droptol", type=_nonneg_float, default=DEFAULT_DROPTOL, help="ILU drop tolerance")
        sp.add_argument("--tol", type=_positive_float, default=None,
                        help="relative residual target (default 1e-12, or 1e-8 for problems 6-7)")
        sp.add_argument("--maxit", type=_positive_int, default=MAX_ITER, help="GMRES iteration cap")

    m = sub.add_parser("mesh", help="generate a mesh and write it to a file")
    m.add_argument("--h0", type=_positive_float, required=True)
    m.add_argument("--problem", type=int, default=1, help="take the domain from this problem")
    m.add_argument("--seed", type=int, default=None)
    m.add_argument("--out", required=True)

    s = sub.add_parser("solve", help="solve one problem on one mesh and report errors")
    s.add_argument("--problem", type=int, required=True)
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--h0", type=_positive_float)
    g.add_argument("--mesh-file")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--out", help="also write the report as CSV")
    solver_flags(s)

    for name, helptext in (("study", "convergence study over several meshes"),
                           ("table1", "study of every problem on the default mesh sequence")):
        st = sub.add_parser(name, help=helptext)
        if name == "study":
            st.add_argument("--problem", type=_problem_list, default=PROBLEM_IDS)
            st.add_argument("--h0", type=_h0_list, default=DEFAULT_H0)
        st.add_argument("--seed", type=int, default=None)
        st.add_argument("--out", default=".", help="output directory")
        solver_flags(st)

    v = sub.add_parser("verify", help="check a manufactured solution pointwise")
    v.add_argument("--problem", type=_problem_list, default=PROBLEM_IDS)
    v.add_argument("--samples", type=_positive_int, default=10_000)
    return p


# --- commands ---------------------------------------------------------------

def _problem_or_usage(pid):
    try:
        return problem(pid)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None


def cmd_mesh(args, out):
    prob = _problem_or_usage(args.problem)
    dom = prob.domain
    if not args.h0 < min(dom.width, dom.height):
        raise UsageError(f"h0 must be smaller than the domain side ({min(dom.width, dom.height)})")
    mesh = generate_mesh(dom, args.h0, seed=args.seed)
    write_mesh(mesh, args.out)
    print(f"vertices {mesh.n_vertices} triangles {mesh.n_triangles}", file=out)
    print(quality_report(mesh).summary(), file=out)
    return EXIT_OK


def cmd_solve(args, out):
    prob = _problem_or_usage(args.problem)
    if args.mesh_file:
        try:
            mesh = read_mesh(args.mesh_file, prob.domain)
        except (OSError, ValueError, IndexError) as exc:
            raise UsageError(f"cannot read mesh file: {exc}") from None
        dom = prob.domain
        lo, hi = mesh.vertices.min(axis=0), mesh.vertices.max(axis=0)
        if not np.allclose([lo[0], hi[0], lo[1], hi[1]], [dom.ax, dom.bx, dom.ay, dom.by],
                           rtol=0, atol=1e-12 * dom.extent):
            raise UsageError(f"mesh does not cover the domain of problem {prob.id}")
        h0 = None
    else:
        if not args.h0 < min(prob.domain.width, prob.domain.height):
            raise UsageError("h0 must be smaller than the domain side")
        mesh, h0 = None, args.h0
    tol = args.tol if args.tol is not None else tolerance_for(prob.id)
    cfg = SolverConfig(tol=tol, maxit=args.maxit, droptol=args.droptol)
    rep = run_level(prob, h0, seed=args.seed, config=cfg, mesh=mesh)
    d = rep.as_dict()
    d["problem"] = prob.id
    for k, v in d.items():
        print(f"{k} = {fmt(v)}", file=out)
    if args.out:
        cols = ("problem",) + tuple(k for k in d if k != "problem")
        _write_csv(args.out, cols, [d])
    return EXIT_OK if rep.converged else EXIT_NUMERIC


def run_study_config(cfg, out=None):
    """Run every (problem, level) pair; failures are recorded, not raised.

    Returns (result rows, rate rows, ratio rows, studies, failures).
    """
    rows, rate_rows, ratio_rows, studies = [], [], [], {}
    failures = 0
    for pid in cfg.problems:
        prob = problem(pid)
        reports = []
        for h0 in cfg.h0:
            try:
                rep = run_level(prob, h0, seed=cfg.seed, config=cfg.solver_config(pid))
                status = "ok" if rep.converged else "not converged"
            except MiniStokesError as exc:
                rows.append({"problem": pid, "status": f"error: {exc}"})
                failures += 1
                continue
            failures += status != "ok"
            reports.append(rep)
            row = {"problem": pid, "h": rep.h, "vertices": rep.n_vertices, "triangles": rep.n_triangles,
                   "iterations": rep.iterations, "residual": rep.residual, "status": status}
            row.update({c: getattr(rep, c) for c in ERROR_FIELDS})
            rows.append(row)
            r = error_ratios(rep)
            ratio_rows.append({"problem": pid, "h": rep.h, "ratio_H1": r["H1"], "ratio_L2": r["L2"],
                               "ratio_div": r["div"]})
            if out is not None:
                print(f"problem {pid} h0 {h0:g}: h {rep.h:.4g}, {rep.n_vertices} vertices, "
                      f"{rep.iterations} iterations, residual {rep.residual:.2e} [{status}]", file=out)
        if len(reports) >= 3:
            st = ConvergenceStudy(pid, reports)
            studies[pid] = st
            rate_rows.append({"problem": pid, **st.rates})
        else:
            failures += 1
    return rows, rate_rows, ratio_rows, studies, failures


def _print_rates(studies, out):
    head = "problem " + " ".join(f"{c:>12s}" for c in RATE_COLUMNS)
    print(head, file=out)
    for pid, st in studies.items():
        print(f"{pid:7d} " + " ".join(f"{st.rates[c]:12.2f}" for c in RATE_COLUMNS), file=out)
        ref = REFERENCE_RATES.get(pid)
        if ref:
            print("  (ref) " + " ".join(f"{v:12.2f}" for v in ref), file=out)


def cmd_study(args, out, all_problems=False):
    cfg = StudyConfig(problems=PROBLEM_IDS if all_problems else args.problem,
                      h0=DEFAULT_H0 if all_problems else args.h0,
                      droptol=args.droptol, tol=args.tol, maxit=args.maxit, seed=args.seed, out=args.out)
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    rows, rate_rows, ratio_rows, studies, failures = run_study_config(cfg, out)
    _write_csv(outdir / "results.csv", RESULT_COLUMNS, rows)
    _write_csv(outdir / "rates.csv", RATES_COLUMNS, rate_rows)
    _write_csv(outdir / "ratios.csv", RATIO_COLUMNS, ratio_rows)
    meta = {"problems": list(cfg.problems), "h0": list(cfg.h0), "droptol": cfg.droptol, "tol": cfg.tol,
            "maxit": cfg.maxit, "seed": cfg.seed, "version": __version__,
            "python": platform.python_version(), "numpy": np.__version__}
    (outdir / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    _print_rates(studies, out)
    return EXIT_NUMERIC if failures else EXIT_OK


def cmd_verify(args, out):
    status = EXIT_OK
    for pid in args.problem:
        r = verify_manufactured(problem(pid), args.samples)
        ok = r.ok()
        print(f"problem {pid}: momentum {r.max_momentum:.3e} div {r.max_div:.3e} "
              f"(analytic {r.max_div_analytic:.3e}) mean {r.pressure_mean:.3e} "
              f"boundary {r.max_boundary_mismatch:.3e} gradient {r.max_gradient_mismatch:.3e} "
              f"[{'ok' if ok else 'FAIL'}]", file=out)
        if not ok:
            status = EXIT_NUMERIC
    return status


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        if args.command == "mesh":
            return cmd_mesh(args, out)
        if args.command == "solve":
            return cmd_solve(args, out)
        if args.command == "study":
            return cmd_study(args, out)
        if args.command == "table1":
            return cmd_study(args, out, all_problems=True)
        return cmd_verify(args, out)
    except UsageError as exc:
        print(f"ministokes: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MiniStokesError as exc:
        print(f"ministokes: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
