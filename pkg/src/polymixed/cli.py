"""Command-line entry point: convergence studies and the property-check
suite for the mixed method on polytopal meshes.

Exit codes: 0 success, 1 property-check violation, 2 configuration error,
3 numerical failure (singular DOF matrix / solver breakdown).
"""

import argparse
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import projection
from .assembly import DiscreteProblem, manufactured_case
from .errors import PolymixedError, SingularDofMatrix, SolveFailure
from .mesh import make_grid, mesh_write
from .monomials import eval_monomials, pk_exponents
from .postproc import ConvergenceRecord, emit_table, rates

GRID_LEVEL_MAX = {"quad": 12, "quadhex": 12, "wedge": 8}
GRID_CASE = {"quad": "trig2d", "quadhex": "trig2d", "wedge": "poly3d"}


@dataclass
class StudyConfig:
    grid: str
    k: int
    levels: range
    case: str
    format: str = "markdown"
    out: str = None
    checks: bool = False
    diagnostics: bool = False
    dump_mesh: str = None


class ConfigError(Exception):
    pass


def parse_levels(text):
    try:
        lo, hi = text.split("..")
        lo, hi = int(lo), int(hi)
    except ValueError:
        raise ConfigError(f"bad level range {text!r}, expected e.g. 2..5") from None
    if hi < lo:
        raise ConfigError(f"level range {text!r} is decreasing")
    return range(lo, hi + 1)


def build_config(args):
    levels = parse_levels(args.levels)
    if args.grid not in GRID_LEVEL_MAX:
        raise ConfigError(f"unknown grid {args.grid!r}")
    if not 0 <= args.k <= 3:
        raise ConfigError(f"k={args.k} out of range 0..3")
    if levels.start < 1 or levels[-1] > GRID_LEVEL_MAX[args.grid]:
        raise ConfigError(
            f"levels {args.levels} outside 1..{GRID_LEVEL_MAX[args.grid]} "
            f"for grid {args.grid}"
        )
    if args.case != GRID_CASE[args.grid]:
        raise ConfigError(
            f"case {args.case!r} does not match grid {args.grid!r} "
            f"(expected {GRID_CASE[args.grid]!r})"
        )
    return StudyConfig(
        grid=args.grid,
        k=args.k,
        levels=levels,
        case=args.case,
        format=args.format,
        out=args.out,
        checks=args.checks,
        diagnostics=args.diagnostics,
        dump_mesh=args.dump_mesh,
    )


def study_records(config, progress=None):
    """Solve the study at each level and return filled ConvergenceRecords."""
    case = manufactured_case(config.case)
    records = []
    for level in config.levels:
        t0 = time.perf_counter()
        mesh = make_grid(config.grid, level)
        problem = DiscreteProblem(mesh, config.k)
        q, u = problem.solve(case)
        Pq = projection.project_velocity(problem, case.q)
        Qu = projection.project_scalar(problem, case.u)
        Qf = projection.project_scalar(problem, case.f)
        err_q_l2 = problem.norm_velocity(Pq - q, vnorm=False)
        div_defect = np.sqrt(
            max(
                problem.norm_velocity(Pq - q, vnorm=True) ** 2 - err_q_l2**2,
                0.0,
            )
        )
        rec = ConvergenceRecord(
            level=level,
            err_u=problem.norm_pressure(Qu - u),
            err_q=problem.norm_velocity(Pq - q, vnorm=True),
            err_u_direct=problem.error_pressure(u, case.u),
            err_q_direct=np.sqrt(
                problem.error_velocity(q, case.q) ** 2
                + problem.error_pressure(Qf, case.f) ** 2
            ),
            num_vdofs=problem.num_vdofs,
            num_pdofs=problem.num_pdofs,
            wall_time=time.perf_counter() - t0,
            div_defect=div_defect,
        )
        records.append(rec)
        if progress:
            progress(level, rec)
        if config.dump_mesh and level == config.levels[-1]:
            mesh_write(mesh, config.dump_mesh)
    return rates(records)


def run_study(config):
    records = study_records(config)
    text = emit_table(records, config.format, diagnostics=config.diagnostics)
    if config.out:
        with open(config.out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return records


def run_checks(config, report=print):
    """Property suite: unisolvence, [P_k]^d reproduction, commuting defect,
    conformity, divergence identity, inf-sup trend.  True if all pass."""
    case = manufactured_case(config.case)
    level = min(3, config.levels[-1])
    mesh = make_grid(config.grid, level)
    problem = DiscreteProblem(mesh, config.k)
    ok = True

    def check(name, value, bound):
        nonlocal ok
        good = value <= bound
        ok = ok and good
        report(
            f"check {name}: {value:.3e} <= {bound:.0e} "
            f"{'ok' if good else 'FAIL'}"
        )

    rcond_min = min(
        cls.rcond for cls in problem.cache._classes.values()
    )
    good = rcond_min > 1e-10
    ok = ok and good
    report(f"check unisolvence: rcond {rcond_min:.3e} > 1e-10 {'ok' if good else 'FAIL'}")

    check("pk-reproduction", _reproduction_error(problem), 1e-11)
    check("commuting-defect", projection.commuting_defect(problem, case.q), 1e-10)
    Pq = projection.project_velocity(problem, case.q)
    check("conformity-jump", projection.conformity_jump(problem, Pq), 1e-10)
    q, u = problem.solve(case)
    Qf = projection.project_scalar(problem, case.f)
    check("divergence-identity", problem.divergence_defect(q, Qf), 1e-9)

    betas = []
    for lev in range(1, 4):
        small = DiscreteProblem(make_grid(config.grid, lev), config.k)
        betas.append(small.inf_sup_constant())
    spread = (max(betas) - min(betas)) / min(betas)
    good = min(betas) > 0.05 and spread < 0.05
    ok = ok and good
    report(
        "check inf-sup trend: beta in [%.4f, %.4f], spread %.2f%% %s"
        % (min(betas), max(betas), 100 * spread, "ok" if good else "FAIL")
    )
    return ok


def _reproduction_error(problem):
    """Worst-case error of Pi_h on a random [P_k]^d field, per class."""
    rng = np.random.default_rng(1234)
    worst = 0.0
    for cls in problem.cache._classes.values():
        exps = pk_exponents(cls.dim, cls.k)
        coefs = rng.standard_normal((len(exps), cls.dim))

        def field(pts, cls=cls, coefs=coefs):
            return eval_monomials((pts - cls.center) / cls.scale, exps) @ coefs

        dofs = cls.dof_values(field, np.zeros(cls.dim))
        for s in range(cls.n):
            approx = np.einsum("qnd,n->qd", cls.basis_vals[s], dofs)
            worst = max(worst, np.abs(approx - field(cls.vol_pts[s])).max())
    return worst


def main(argv=None):
    ap = argparse.ArgumentParser(
        prog="polymixed",
        description="Convergence studies for arbitrary-order mixed elements "
        "on polytopal meshes.",
    )
    ap.add_argument("--grid", required=True, help="quad | quadhex | wedge")
    ap.add_argument("--k", type=int, required=True, help="polynomial degree 0..3")
    ap.add_argument("--levels", required=True, help="inclusive range, e.g. 2..5")
    ap.add_argument("--case", required=True, help="trig2d | poly3d")
    ap.add_argument("--format", default="markdown", choices=["markdown", "csv"])
    ap.add_argument("--out", default=None, help="output path (default stdout)")
    ap.add_argument(
        "--checks", action="store_true", help="also run the property-check suite"
    )
    ap.add_argument(
        "--diagnostics",
        action="store_true",
        help="add direct-error columns (||u-u_h||, ||q-q_h||_V)",
    )
    ap.add_argument(
        "--dump-mesh", default=None, help="write the finest mesh in polymesh format"
    )
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        config = build_config(args)
    except ConfigError as exc:
        sys.stderr.write(f"error: {exc}\n\n{ap.format_usage()}")
        return 2
    try:
        run_study(config)
        if config.checks and not run_checks(config):
            return 1
    except (SingularDofMatrix, SolveFailure) as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return 3
    except PolymixedError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
