"""``kw-lab`` command line: every verification as a reproducible JSON report.

Exit codes: 0 all checks within tolerance, 1 a check failed, 2 usage or input error.

Default tolerances (override with ``--tol NAME=VALUE``):

=================  =======  =====================================================
name               default  meaning
=================  =======  =====================================================
slope              1.9      minimum observed convergence order
analytic           1e-13    residual of closed-form data with exact derivatives
identity           1e-10    closed-grid Weitzenbock relative discrepancy
chern              1e-6     instanton number of a globally defined field
halfspace          1e-3     half-space identity relative discrepancy
halfspace_pole     1e-12    I' of the unperturbed Nahm pole
flux               2e-2     flux read-off versus degree profile
=================  =======  =====================================================
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import asdict, dataclass, field
from fractions import Fraction

from . import __version__

DEFAULT_TOLERANCES = {
    "slope": 1.9,
    "analytic": 1e-13,
    "identity": 1e-10,
    "chern": 1e-6,
    "halfspace": 1e-3,
    "halfspace_pole": 1e-12,
    "flux": 2e-2,
}

DEFAULT_CHARGES = {"sites": [{"pos": [0.0, 0.0, 0.25], "n": 1}, {"pos": [0.0, 0.0, -0.25], "n": -1}]}
DEFAULT_HECKE = {"events": [{"y": -0.5, "p": [0.0, 0.0], "n": 1}, {"y": 0.5, "p": [0.5, 0.0], "n": -1}]}

_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


class InputError(Exception):
    """Unreadable or invalid input (exit code 2)."""


@dataclass
class RunConfig:
    """Everything that determines a run; embedded in every report."""

    subcommand: str
    grid: dict = field(default_factory=dict)
    seed: int | None = None
    tolerance_overrides: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)
    output: str | None = None
    options: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


class Report:
    def __init__(self, config: RunConfig, tolerances: dict):
        self.config = config
        self.tolerances = tolerances
        self.checks: list[dict] = []
        self.results: dict = {}
        self.table: list[dict] = []

    def check(self, name: str, value, tolerance, passed: bool):
        self.checks.append({"name": name, "value": value, "tolerance": tolerance, "passed": bool(passed)})

    def at_most(self, name: str, value: float, tol_key: str):
        tol = self.tolerances[tol_key]
        self.check(name, float(value), tol, abs(value) <= tol)

    def at_least(self, name: str, value: float, tol_key: str):
        tol = self.tolerances[tol_key]
        self.check(name, float(value), tol, value >= tol)

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)

    def to_dict(self) -> dict:
        return {"tool": "kw-lab", "version": __version__, "config": self.config.to_dict(),
                "tolerances": self.tolerances, "checks": self.checks, "results": self.results,
                "passed": self.passed}

    def to_json(self) -> str:
        return json.dumps(_jsonable(self.to_dict()), sort_keys=True, indent=2)


def _jsonable(x):
    import numpy as np

    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, Fraction):
        return str(x)
    return x


# --- argument helpers -------------------------------------------------------------

def _number(text: str) -> float:
    """Float that also accepts fractions such as ``1/16``."""
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}") from exc


def _tol_override(text: str) -> tuple[str, float]:
    name, sep, value = text.partition("=")
    if not sep or name not in DEFAULT_TOLERANCES:
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE with NAME in {sorted(DEFAULT_TOLERANCES)}")
    return name, _number(value)


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _load_json(path: str | None, default: dict) -> dict:
    if path is None:
        return default
    try:
        return json.loads(_read(path))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def _levels(h: float, refine: int) -> list[float]:
    if refine < 2:
        raise InputError("--refine needs at least 2 levels to measure an order")
    return [h / 2 ** k for k in range(refine)]


def _sites_per_span(span: float, h: float) -> int:
    n = int(round(span / h))
    if n < 1 or abs(n * h - span) > 1e-9 * span:
        raise InputError(f"spacing {h} does not divide the span {span}")
    return n


def _convergence(report: Report, hs, errors, label: str):
    from .residuals import convergence_slopes

    slopes = convergence_slopes(hs, errors)
    report.table = [{"h": h, "error": e, "slope": (None if k == 0 else slopes[k - 1])}
                    for k, (h, e) in enumerate(zip(hs, errors))]
    report.results[label] = {"h": list(hs), "max_residual": list(errors), "slopes": slopes}
    report.at_least(f"{label}: min slope", min(slopes), "slope")


# --- verify -----------------------------------------------------------------------

def _monopole_levels(args, cfg: RunConfig):
    from . import solutions as so
    from . import fields as fl

    data = _load_json(args.charges, DEFAULT_CHARGES)
    try:
        sites = so.SingularityData.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"invalid singularity data: {exc}") from exc
    sol = so.multi_monopole(sites)
    hs = _levels(args.h, args.refine)
    cfg.grid = {"box_half_width": args.box, "h": hs, "boundary_mode": fl.CLAMPED, "r_min": args.r_min}
    cfg.inputs = {"charges": args.charges}
    out = []
    for h in hs:
        n = _sites_per_span(2 * args.box, h)
        g = fl.Grid((n + 1,) * 3, h, (-args.box,) * 3, fl.CLAMPED)
        out.append(sol.sample(g, r_min=args.r_min))
    return sites, hs, out


def cmd_verify_bogomolny(args, report: Report):
    from . import residuals as rs

    sites, hs, levels = _monopole_levels(args, report.config)
    reps = [rs.bogomolny_residual(c, m) for c, m in levels]
    report.results["flags"] = sites.flags()
    _convergence(report, hs, rs.common_point_errors(reps), "bogomolny")


def cmd_verify_kw(args, report: Report):
    from . import residuals as rs
    from .solutions import kw_pullback

    sites, hs, levels = _monopole_levels(args, report.config)
    reps = []
    for c, m in levels:
        c4, m4 = kw_pullback(c, m)
        reps.append(rs.kw_residual(c4, m4))
        del c4
    report.results["flags"] = sites.flags()
    _convergence(report, hs, rs.common_point_errors(reps), "kw")


def _nahm_setup(args, report: Report):
    hs = _levels(args.h, args.refine)
    report.config.grid = {"h": hs, "y0": args.y0, "y_max": args.y_max, "r_min": args.r_min,
                          "boundary_mode": "periodic x, clamped y"}
    return hs


def cmd_verify_nahm(args, report: Report):
    import numpy as np
    from . import residuals as rs
    from . import solutions as so
    from .liealg import principal_su2

    hs = _nahm_setup(args, report)
    y = np.linspace(args.r_min, 4.0, 64)
    for N in args.dims:
        sol = so.nahm_pole(principal_su2(N))
        pts = np.zeros((y.size, 4))
        pts[:, 3] = y
        _, phi, _, dphi = sol.evaluate(pts)
        r = rs.nahm_residual(y, phi[:3], dphi[3, :3])
        report.results[f"nahm dim {N}"] = {"y_range": [float(y[0]), float(y[-1])], "max_residual": r.max_norm,
                                          "max_relative": float(np.max(r.total_site_norm() * y ** 2))}
        report.at_most(f"nahm dim {N}: analytic residual", r.max_norm, "analytic")
        reps = []
        for h in hs:
            g = so.halfspace_grid(4, _sites_per_span(args.y_max - args.y0, h) + 1, h, args.y0)
            c, m = sol.sample(g, r_min=args.r_min)
            reps.append(rs.kw_residual(c, m))
        _convergence(report, hs, rs.common_point_errors(reps), f"kw dim {N}")


def cmd_verify_extended(args, report: Report):
    from . import residuals as rs
    from . import solutions as so
    from .liealg import principal_su2

    hs = _nahm_setup(args, report)
    for N in args.dims:
        sol = so.nahm_pole_extended(principal_su2(N))
        reps = []
        for k, h in enumerate(hs):
            g = so.extended_grid(_sites_per_span(args.y_max - args.y0, h) + 1, h, args.y0)
            c, m = sol.sample(g, r_min=args.r_min)
            reps.append(rs.extended_bogomolny_residual(c, m))
            if k == 0:
                ce, me = sol.sample(g, r_min=args.r_min, exact_derivatives=True)
                report.at_most(f"extended dim {N}: exact-derivative residual",
                               rs.extended_bogomolny_residual(ce, me).max_norm, "analytic")
        _convergence(report, hs, rs.common_point_errors(reps), f"extended dim {N}")


# --- weitzenbock / chern ------------------------------------------------------------

def _torus_field(args, report: Report):
    import numpy as np
    from . import fields as fl

    if getattr(args, "config", None):
        try:
            cfg = fl.from_json(_read(args.config))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"invalid field configuration: {exc}") from exc
        report.config.inputs = {"config": args.config}
        report.config.grid = cfg.grid.to_dict()
        return cfg
    g = fl.Grid((args.n,) * 4, 2 * np.pi / args.n, scheme=args.scheme)
    report.config.grid = g.to_dict()
    return fl.random_smooth_field(g, args.seed, args.mode_cutoff, args.amplitude, args.dim)


def cmd_weitzenbock_closed(args, report: Report):
    from . import weitzenbock as wz

    cfg = _torus_field(args, report)
    for t in args.t:
        r = wz.t_identity_check(cfg, t)
        report.results[f"t={t}"] = r.to_dict()
        report.at_most(f"t={t}: relative discrepancy", r.discrepancy, "identity")


def cmd_weitzenbock_halfspace(args, report: Report):
    from . import solutions as so
    from . import weitzenbock as wz
    from .liealg import principal_su2

    hs = _levels(args.h, args.refine)
    report.config.grid = {"h": hs, "bump_radius": args.radius, "boundary_mode": "periodic x, clamped y"}
    errs = []
    for k, h in enumerate(hs):
        r = wz.perturbed_nahm_pole_check(h, args.seed, args.radius, args.amplitude, args.dim)
        report.results[f"h={h}"] = r.to_dict()
        errs.append(r.discrepancy)
        if k == 0:
            report.at_most(f"h={h}: relative discrepancy", r.discrepancy, "halfspace")
    _convergence(report, hs, errs, "halfspace identity")
    n = _sites_per_span(1.0, args.h)
    g = so.halfspace_grid(4, n + 1, args.h, 0.5)
    bg, m = so.nahm_pole(principal_su2(args.dim)).sample(g, exact_derivatives=True)
    ip = wz.halfspace_energy_Iprime(bg, m)
    report.results["unperturbed"] = ip.to_dict()
    report.at_most("unperturbed Nahm pole: I'", ip.total, "halfspace_pole")


def cmd_chern(args, report: Report):
    from . import weitzenbock as wz

    cfg = _torus_field(args, report)
    P = wz.chern_charge(cfg)
    report.results["chern"] = P.to_dict()
    report.at_most("instanton number", P.value, "chern")


# --- morse / hecke / jones ------------------------------------------------------------

def cmd_morse(args, report: Report):
    from . import morse as mo

    if args.problem == "sphere":
        prob = mo.sphere_height()
    elif args.problem == "torus":
        prob = mo.torus_height(tilt=args.tilt, bump=args.bump)
    else:
        prob = mo.box_paraboloid()
    report.config.options.update({"problem": prob.label})
    try:
        cx = mo.build_complex(prob, seeds_per_cell=args.seeds_per_cell)
    except mo.TransversalityError as exc:
        report.results["error"] = str(exc)
        report.check("d o d = 0 (Morse-Smale)", False, True, False)
        return
    report.results["complex"] = cx.to_dict()
    report.check("d o d = 0", cx.d_squared_zero(), True, cx.d_squared_zero())
    report.check("signed count = Euler characteristic", cx.euler_characteristic, prob.euler_characteristic,
                 cx.euler_characteristic == prob.euler_characteristic)
    if args.expect_betti is not None:
        b = list(cx.betti())
        report.check("Betti numbers", b, args.expect_betti, b == args.expect_betti)


def cmd_hecke(args, report: Report):
    from . import hecke as hk

    try:
        seq = hk.HeckeSequence.from_dict(_load_json(args.sequence, DEFAULT_HECKE))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"invalid Hecke sequence: {exc}") from exc
    report.config.inputs = {"sequence": args.sequence}
    report.config.grid = {"disk_radius": args.radius, "resolution": args.resolution}
    prof = hk.degree_profile(seq)
    ys = seq.heights
    if not ys:
        raise InputError("the Hecke sequence has no events")
    probes = [ys[0] - 1.0] + [0.5 * (a + b) for a, b in zip(ys, ys[1:])] + [ys[-1] + 1.0]
    data = seq.to_singularity_data()
    rows = []
    for y in probes:
        try:
            flux = hk.flux_degree_check(data, y, args.radius, args.resolution)
        except ValueError as exc:
            raise InputError(str(exc)) from exc
        deg = prof(y)
        rows.append({"y": y, "flux": flux, "degree": deg})
        report.at_most(f"y={y:g}: |flux - degree|", abs(flux - deg), "flux")
    report.results.update({"probes": rows, "profile": prof.to_dict(), "flags": prof.flags(),
                           "final_bundle_degree": seq.states()[-1].degree})


def cmd_jones(args, report: Report):
    from . import jones as jn

    if args.pd is not None:
        text = _read(args.pd)
        report.config.inputs = {"pd": args.pd}
    elif args.knot is not None:
        corpus = jn.corpus()
        if args.knot not in corpus:
            raise InputError(f"unknown knot {args.knot!r}; known: {', '.join(sorted(corpus))}")
        text = None
        d = corpus[args.knot]
    else:
        raise InputError("give --pd FILE or --knot NAME")
    if text is not None:
        try:
            d = jn.parse_pd(text)
        except ValueError as exc:
            raise InputError(str(exc)) from exc
    J = jn.jones_polynomial(d, framing=args.framing)
    report.results.update({"diagram": d.to_dict(), "framing": args.framing, "polynomial": str(J),
                           "coefficients": J.to_dict()["terms"], "writhe": d.writhe,
                           "components": d.components})
    if args.framing == 0:
        S = jn.jones_from_skein(d)
        report.results["skein"] = str(S)
        report.check("state sum = skein recursion", str(J), str(S), J == S)
    print(str(J), file=sys.stderr)


# --- parser -----------------------------------------------------------------------

def _common(p: argparse.ArgumentParser):
    p.add_argument("--out", help="write the JSON report here (default: stdout)")
    p.add_argument("--csv", help="also write the convergence table as CSV")
    p.add_argument("--tol", action="append", type=_tol_override, default=[], metavar="NAME=VALUE",
                   help="override a tolerance (repeatable)")
    p.add_argument("--threads", type=int, help="cap BLAS/OpenMP threads")


def _monopole_args(p):
    p.add_argument("--charges", help="SingularityData JSON (default: +1/-1 pair at z = +-1/4)")
    p.add_argument("--h", type=_number, default=1 / 16, help="coarsest spacing")
    p.add_argument("--refine", type=int, default=3, help="number of grids, halving h each time")
    p.add_argument("--box", type=_number, default=0.5, help="half width of the cubic box")
    p.add_argument("--r-min", type=_number, default=0.2, help="excision radius around sites and strings")


def _nahm_args(p):
    p.add_argument("--dims", type=_int_list, default=[2, 3, 5], help="principal su(2) representation dims")
    p.add_argument("--h", type=_number, default=1 / 8)
    p.add_argument("--refine", type=int, default=3)
    p.add_argument("--y0", type=_number, default=0.125, help="first y site")
    p.add_argument("--y-max", type=_number, default=1.125)
    p.add_argument("--r-min", type=_number, default=0.25, help="wall excision y >= r_min")


def _torus_args(p, config: bool = True):
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--n", type=int, default=16, help="sites per axis of the periodic 4-torus")
    p.add_argument("--mode-cutoff", type=int, default=2)
    p.add_argument("--amplitude", type=_number, default=0.1)
    p.add_argument("--dim", type=int, default=2, help="N in su(N)")
    p.add_argument("--scheme", choices=("spectral", "central"), default="spectral")
    if config:
        p.add_argument("--config", help="FieldConfiguration JSON instead of a random field")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kw-lab", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=f"kw-lab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    verify = sub.add_parser("verify", help="residual convergence of exact solutions")
    vsub = verify.add_subparsers(dest="which", required=True)
    for name, fn, adder in (("bogomolny", cmd_verify_bogomolny, _monopole_args),
                            ("kw", cmd_verify_kw, _monopole_args),
                            ("nahm", cmd_verify_nahm, _nahm_args),
                            ("extended", cmd_verify_extended, _nahm_args)):
        p = vsub.add_parser(name)
        adder(p)
        _common(p)
        p.set_defaults(func=fn, name=f"verify {name}")

    wz = sub.add_parser("weitzenbock", help="Weitzenbock identities")
    wsub = wz.add_subparsers(dest="which", required=True)
    p = wsub.add_parser("closed", help="t-family identity on a periodic 4-torus")
    _torus_args(p)
    p.add_argument("--t", type=_number, action="append", help="t values (repeatable; default +-1/2, +-1, +-2)")
    _common(p)
    p.set_defaults(func=cmd_weitzenbock_closed, name="weitzenbock closed")
    p = wsub.add_parser("halfspace", help="half-space identity for a perturbed Nahm pole")
    p.add_argument("--seed", type=int, default=11)
    p.add_argument("--h", type=_number, default=1 / 32)
    p.add_argument("--refine", type=int, default=2)
    p.add_argument("--radius", type=_number, default=0.25, help="bump radius")
    p.add_argument("--amplitude", type=_number, default=0.05)
    p.add_argument("--dim", type=int, default=2)
    _common(p)
    p.set_defaults(func=cmd_weitzenbock_halfspace, name="weitzenbock halfspace")

    p = sub.add_parser("chern", help="instanton number on the periodic 4-torus")
    _torus_args(p)
    _common(p)
    p.set_defaults(func=cmd_chern, name="chern")

    p = sub.add_parser("morse", help="Morse complex and mod-2 homology")
    p.add_argument("--problem", choices=("sphere", "torus", "box"), default="sphere")
    p.add_argument("--tilt", type=_number, default=0.3)
    p.add_argument("--bump", type=_number, default=0.0)
    p.add_argument("--seeds-per-cell", type=int, default=2)
    p.add_argument("--expect-betti", type=_int_list)
    _common(p)
    p.set_defaults(func=cmd_morse, name="morse")

    p = sub.add_parser("hecke", help="flux read-off versus Hecke degree profile")
    p.add_argument("--sequence", help="HeckeSequence JSON (default: a two-event sequence)")
    p.add_argument("--radius", type=_number, default=50.0)
    p.add_argument("--resolution", type=int, default=256)
    _common(p)
    p.set_defaults(func=cmd_hecke, name="hecke")

    p = sub.add_parser("jones", help="Jones polynomial of a PD code")
    p.add_argument("--pd", help="PD file: X[a,b,c,d] text or JSON")
    p.add_argument("--knot", help="name from the built-in corpus")
    p.add_argument("--framing", type=int, default=0)
    _common(p)
    p.set_defaults(func=cmd_jones, name="jones")
    return ap


def _options(args) -> dict:
    skip = {"func", "name", "command", "which", "out", "csv", "tol", "threads"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.threads is not None:
        if args.threads < 1:
            print("kw-lab: error: --threads must be positive", file=sys.stderr)
            return 2
        for var in _THREAD_VARS:
            os.environ[var] = str(args.threads)
    if getattr(args, "t", "absent") is None:
        args.t = [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0]
    overrides = dict(args.tol)
    tolerances = dict(DEFAULT_TOLERANCES, **overrides)
    config = RunConfig(args.name, seed=getattr(args, "seed", None), tolerance_overrides=overrides,
                       output=args.out, options=_options(args))
    if args.threads is not None:
        config.options["threads"] = args.threads
    report = Report(config, tolerances)
    try:
        args.func(args, report)
    except InputError as exc:
        print(f"kw-lab: error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"kw-lab: error: {exc}", file=sys.stderr)
        return 2
    text = report.to_json()
    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        except OSError as exc:
            print(f"kw-lab: error: cannot write {args.out}: {exc.strerror or exc}", file=sys.stderr)
            return 2
    else:
        print(text)
    if args.csv and report.table:
        with open(args.csv, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=["h", "error", "slope"])
            w.writeheader()
            w.writerows(report.table)
    for c in report.checks:
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}: {c['value']} (tolerance {c['tolerance']})",
              file=sys.stderr)
    return 0 if report.passed else 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
