"""Command-line entry point: ``pseudoarc <command> [options]``.

Every run writes a plain ``key: value`` report (to ``--report`` or
``<out-dir>/report.txt``).  Exact values in reports are ``p/q`` strings.
Commands that draw random numbers refuse to run without ``--seed``.
"""

import argparse
import os
import shlex
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__, bbm, crookedgen, family, invlim
from .errors import DomainError, ResourceError, UnsupportedError
from .exactmap import PLMap, is_measure_preserving
from .rational import as_rational, fmt

TOOL_ID = f"pseudoarc {__version__}"
USAGE_ERROR = 2
CHECK_FAILED = 1
BUDGET_EXHAUSTED = 3


@dataclass
class Check:
    name: str
    verdict: str
    values: dict = field(default_factory=dict)
    seconds: float = 0.0


@dataclass
class RunReport:
    argv: list
    checks: list = field(default_factory=list)
    artifacts: list = field(default_factory=list)

    def add(self, name, verdict, seconds=0.0, **values):
        if isinstance(verdict, bool):
            verdict = "pass" if verdict else "fail"
        self.checks.append(Check(name, verdict, values, seconds))

    @property
    def ok(self):
        return all(c.verdict != "fail" for c in self.checks)

    def to_text(self):
        lines = [f"tool: {TOOL_ID}", f"command: {shlex.join(self.argv)}"]
        for c in self.checks:
            lines.append(f"check: {c.name}")
            lines.append(f"{c.name}.verdict: {c.verdict}")
            for key, val in c.values.items():
                lines.append(f"{c.name}.{key}: {_show(val)}")
            lines.append(f"{c.name}.seconds: {c.seconds:.3f}")
        lines.extend(f"artifact: {p}" for p in self.artifacts)
        return "\n".join(lines) + "\n"


def _show(val):
    if hasattr(val, "denominator") and not isinstance(val, int):
        return fmt(val)
    if isinstance(val, (tuple, list)):
        return " ".join(_show(v) for v in val)
    return str(val)


class _Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.start


def _rational(text):
    try:
        return as_rational(text)
    except (ValueError, TypeError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _path(args, name):
    if os.path.isabs(name) or not args.out_dir:
        return name
    return os.path.join(args.out_dir, name)


def _write(args, report, name, data):
    path = _path(args, name)
    mode = "wb" if isinstance(data, bytes) else "w"
    with open(path, mode) as fh:
        fh.write(data)
    report.artifacts.append(path)
    return path


def _load_map(path):
    with open(path) as fh:
        return PLMap.from_text(fh.read())


def _need_seed(args):
    if args.seed is None:
        raise DomainError(f"'{args.command}' draws random numbers and needs --seed")


# commands

def cmd_sigma(args, report):
    if args.n == 0:
        raise DomainError("--n must be nonzero")
    f = crookedgen.sigma(args.n)
    _write(args, report, args.out or f"sigma_{args.n}.plmap", f.to_text())
    if args.check_delta is not None:
        step = args.grid_step or as_rational(1) / 210
        with _Timer() as t:
            rep = crookedgen.crookedness_grid_check(f, args.check_delta, step)
        report.add("crooked_grid", rep.verdict, t.seconds, delta=args.check_delta, grid_step=step,
                   pairs_checked=rep.pairs_checked, worst_pair=rep.worst_pair or "none")


def cmd_lambda(args, report):
    f = crookedgen.lambda_nk(args.n, args.k)
    _write(args, report, args.out or f"lambda_{args.n}_{args.k}.plmap", f.to_text())
    slopes = sorted({abs(s) for s in f.slopes()})
    report.add("slopes", "info", abs_slopes=slopes)
    if args.verify:
        with _Timer() as t:
            cert = is_measure_preserving(f)
        report.add("measure", cert.verdict, t.seconds)
        with _Timer() as t:
            minc = crookedgen.verify_minc_updt(args.n, args.k, trials=args.trials, seed=args.seed or 0)
        report.add("minc_part_i", minc.part_i, t.seconds, rho=minc.rho, bound=minc.rho_bound)
        report.add("minc_part_ii", minc.part_ii.verdict, grid_step=minc.part_ii.grid_step)
        report.add("minc_part_iii", minc.part_iii, trials=minc.trials)
        report.add("maxima_spacing", minc.maxima_spacing_ok)


def _stages(text):
    if not text:
        return []
    out = []
    for part in text.split(";"):
        n, k = part.split(",")
        out.append((int(n), int(k)))
    return out


def cmd_family(args, report):
    if args.lipschitz_sweep:
        with _Timer() as t:
            lip = family.lipschitz_sweep(args.sweep_step)
        report.add("lipschitz_sweep", "info", t.seconds, step=args.sweep_step, max_ratio=lip)
    if args.t is None:
        return
    f = family.g_tilde(args.t, _stages(args.stages), piece_budget=args.piece_budget)
    report.add("anchors", "info", f0=f.ys[0], f1=f.ys[-1], pieces=f.pieces)
    if args.emit:
        _write(args, report, args.out or f"family_{fmt(args.t).replace('/', '_')}.plmap", f.to_text())
    if args.verify:
        report.add("measure", is_measure_preserving(f).verdict)


def cmd_crookify(args, report):
    if args.map:
        f = _load_map(args.map)
    elif args.t is not None:
        f = family.f_tilde(args.t)
    else:
        raise DomainError("crookify needs --map or --t")
    budgets = family.CrookifyBudgets(piece_budget=args.piece_budget)
    with _Timer() as t:
        try:
            res = family.crookify_step(f, args.eta, args.delta, budgets)
        except ResourceError as exc:
            report.add("crookify", "fail", 0.0, reason=str(exc), partial=str(exc.partial))
            raise
    rep = res.report
    report.add("crookify", rep.verdict, t.seconds, n=res.n, k=res.k, N=res.N, rho=res.rho,
               power=rep.extra.get("power"), pairs_checked=rep.pairs_checked, worst_pair=rep.worst_pair)
    if args.reverify:
        with _Timer() as t:
            ok = family.reverify(res.F, rep)
        report.add("reverify", ok, t.seconds)
    if args.out:
        _write(args, report, args.out, res.F.to_text())


def cmd_attractor(args, report):
    _need_seed(args)
    f = _load_map(args.map)
    burn = min(args.burn_in, args.iters - 1)
    with _Timer() as t:
        cloud = bbm.attractor_cloud(f, args.delta, burn, args.iters - burn, args.seeds, args.seed)
    report.add("cloud", "info", t.seconds, points=len(cloud))
    raster = bbm.attractor_raster(cloud, args.width, args.height)
    _write(args, report, args.out, raster.to_pgm())
    _write(args, report, args.cloud or os.path.splitext(args.out)[0] + ".cloud", cloud.to_text())
    cert = bbm.edge_dynamics_check(f, args.delta)
    report.add("edge", cert.kind, orbit=[v for p in cert.orbit for v in p] or "none")


def cmd_invlim(args, report):
    f = _load_map(args.map)
    if args.action == "sample":
        _need_seed(args)
        with _Timer() as t:
            mu = invlim.sample_mu_hat(f, args.depth, args.count, args.seed, m=args.m)
        from scipy.stats import kstest

        ks = max(kstest(mu.points[:, i], "uniform").statistic for i in range(mu.points.shape[1]))
        report.add("marginal_ks", bool(ks < args.ks_tol), t.seconds, max_statistic=f"{ks:.6f}", tol=args.ks_tol)
        _write(args, report, args.out or "mu_hat.table", mu.to_text())
    else:
        avg, target = invlim.birkhoff_average(f, args.x0, args.steps, "id", seed=args.seed or 0)
        report.add("birkhoff", "soft", average=f"{avg:.17g}", target=f"{target:.17g}")


def cmd_crooked(args, report):
    f = _load_map(args.map)
    if args.a is not None and args.b is not None:
        with _Timer() as t:
            ok, pair = crookedgen.is_crooked_between(f, args.a, args.b, args.delta)
        report.add("crooked_pair", ok, t.seconds, a=args.a, b=args.b, delta=args.delta,
                   witness=pair[0] if pair else "none")
        return
    with _Timer() as t:
        rep = crookedgen.crookedness_grid_check(f, args.delta, args.grid_step or args.delta / 4)
    report.add("crooked_grid", rep.verdict, t.seconds, delta=args.delta, pairs_checked=rep.pairs_checked,
               worst_pair=rep.worst_pair or "none")


def cmd_verify(args, report):
    """Quick self-check of exact facts that need no large computation."""
    with _Timer() as t:
        vals = [crookedgen.scr(i) for i in range(1, 8)]
    report.add("scr", vals == [1, 2, 5, 12, 29, 70, 169], t.seconds, values=vals)
    s5 = crookedgen.sigma(5)
    with _Timer() as t:
        rep = crookedgen.crookedness_grid_check(s5, as_rational("3/5"), as_rational(1) / 210)
    report.add("sigma5_crooked", rep.verdict, t.seconds)
    lam = crookedgen.lambda_nk(7, 5)
    report.add("lambda_7_5_measure", is_measure_preserving(lam).verdict)
    d = as_rational("1/8")
    cert = bbm.edge_dynamics_check(family.f_tilde(1), d)
    report.add("swapped_edges", cert.kind == "swapped_edges" and cert.orbit[0][1] == as_rational("4/65"))


def _parser():
    p = argparse.ArgumentParser(prog="pseudoarc", description="Exact crooked interval maps and their attractors.")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=1, help="accepted for compatibility; runs are single-threaded")
    p.add_argument("--piece-budget", type=int, default=5_000_000)
    p.add_argument("--out-dir", default=None)
    p.add_argument("--report", default=None, help="report path (default <out-dir>/report.txt)")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sigma", help="write sigma_n")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--check-delta", type=_rational)
    s.add_argument("--grid-step", type=_rational)
    s.add_argument("--out")

    s = sub.add_parser("lambda", help="write lambda_{n,k}")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--verify", action="store_true")
    s.add_argument("--trials", type=int, default=500)
    s.add_argument("--out")

    s = sub.add_parser("family", help="members of the measure-preserving family")
    s.add_argument("--t", type=_rational)
    s.add_argument("--stages", help="lambda stages as 'n,k;n,k' applied innermost last")
    s.add_argument("--emit", action="store_true")
    s.add_argument("--verify", action="store_true")
    s.add_argument("--lipschitz-sweep", action="store_true")
    s.add_argument("--sweep-step", type=_rational, default=as_rational("1/64"))
    s.add_argument("--out")

    s = sub.add_parser("crookify", help="perturb a map so an iterate is delta-crooked")
    s.add_argument("--map")
    s.add_argument("--t", type=_rational)
    s.add_argument("--eta", type=_rational, required=True)
    s.add_argument("--delta", type=_rational, required=True)
    s.add_argument("--reverify", action="store_true")
    s.add_argument("--out")

    s = sub.add_parser("attractor", help="band attractor cloud and raster")
    s.add_argument("--map", required=True)
    s.add_argument("--delta", type=_rational, default=as_rational("1/8"))
    s.add_argument("--iters", type=int, required=True)
    s.add_argument("--burn-in", type=int, default=100)
    s.add_argument("--seeds", type=int, default=256)
    s.add_argument("--width", type=int, default=1024)
    s.add_argument("--height", type=int, default=1024)
    s.add_argument("--out", required=True)
    s.add_argument("--cloud")

    s = sub.add_parser("invlim", help="inverse-limit sampling")
    s.add_argument("action", choices=["sample", "birkhoff"])
    s.add_argument("--map", required=True)
    s.add_argument("--depth", type=int, default=20)
    s.add_argument("--count", type=int, default=100_000)
    s.add_argument("--m", type=int)
    s.add_argument("--ks-tol", type=float, default=0.02)
    s.add_argument("--x0", type=float, default=0.3)
    s.add_argument("--steps", type=int, default=100_000)
    s.add_argument("--out")

    s = sub.add_parser("crooked", help="crookedness of a stored map")
    s.add_argument("--map", required=True)
    s.add_argument("--delta", type=_rational, required=True)
    s.add_argument("--a", type=_rational)
    s.add_argument("--b", type=_rational)
    s.add_argument("--grid-step", type=_rational)

    sub.add_parser("verify", help="quick exact self-check")
    return p


COMMANDS = {
    "sigma": cmd_sigma,
    "lambda": cmd_lambda,
    "family": cmd_family,
    "crookify": cmd_crookify,
    "attractor": cmd_attractor,
    "invlim": cmd_invlim,
    "crooked": cmd_crooked,
    "verify": cmd_verify,
}


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
    np.seterr(all="ignore")
    report = RunReport(["pseudoarc"] + argv)
    code = 0
    try:
        COMMANDS[args.command](args, report)
        if not report.ok:
            code = CHECK_FAILED
    except (DomainError, UnsupportedError, ValueError) as exc:
        parser.print_usage(sys.stderr)
        print(f"pseudoarc: error: {exc}", file=sys.stderr)
        report.add("usage", "fail", reason=str(exc))
        code = USAGE_ERROR
    except ResourceError as exc:
        print(f"pseudoarc: budget exhausted: {exc}", file=sys.stderr)
        code = BUDGET_EXHAUSTED
    report_path = args.report or os.path.join(args.out_dir or ".", "report.txt")
    with open(report_path, "w") as fh:
        fh.write(report.to_text())
    return code


if __name__ == "__main__":
    sys.exit(main())
