"""Command-line front end.

Every subcommand takes the polynomial via ``--poly FILE`` or ``--coeffs``,
optional ``--config FILE`` (flat JSON whose keys mirror the long flags;
flags on the command line win) and ``--out DIR``.  With ``--out`` the
artifacts and a ``manifest.json`` go to the directory; otherwise the main
result is printed.

Exit status: 0 on success, 1 when a verification verdict fails, 2 on a
configuration or numerical error.
"""

from __future__ import annotations

import argparse
import json
import math
import platform
import sys
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from . import __version__
from . import io as fio
from .bell import build_bell_table
from .equidist import m1_telescoping_check, theorem_a_run
from .errors import ConfigError, IterZerosError, NonFinite
from .jets import iterate_coeffs, iterate_log_coeffs
from .linearize import find_cycle, make_linearizer, verify_theorem_b
from .measure import EmpiricalMeasure
from .polycore import ComplexPoly, detect_exceptional, filled_radius
from .potential import brolin_sample, green_grid, l1_distance, normalized_logmod_grid
from .rootfinder import find_roots, roots_of_iterated_derivative

EXIT_OK, EXIT_VERDICT, EXIT_ERROR = 0, 1, 2


# -- value parsers ---------------------------------------------------------------------

def parse_rect(text) -> tuple:
    if isinstance(text, (list, tuple)):
        parts = list(text)
    else:
        parts = str(text).split(",")
    try:
        r = tuple(float(v) for v in parts)
    except ValueError:
        raise ConfigError(f"expected x0,x1,y0,y1, got {text!r}", field="rect")
    if len(r) != 4 or not (r[1] > r[0] and r[3] > r[2]):
        raise ConfigError(f"rectangle {text!r} is degenerate or malformed", field="rect")
    return r


def parse_grid(text) -> tuple:
    try:
        if isinstance(text, int):
            return text, text
        parts = str(text).lower().split("x")
        nx, ny = (int(parts[0]), int(parts[-1]))
    except ValueError:
        raise ConfigError(f"expected NXxNY, got {text!r}", field="grid")
    if nx < 1 or ny < 1 or len(parts) > 2:
        raise ConfigError(f"grid {text!r} must be positive", field="grid")
    return nx, ny


def parse_n_range(text, field: str = "n") -> List[int]:
    """``6..11`` (inclusive), ``2^4..2^12`` (powers of two) or ``5,7,9``."""
    if isinstance(text, int):
        return [text]
    if isinstance(text, list):
        return [int(v) for v in text]
    s = str(text).replace(" ", "")
    try:
        if ".." in s:
            lo, hi = s.split("..")
            if lo.startswith("2^") and hi.startswith("2^"):
                return [2 ** k for k in range(int(lo[2:]), int(hi[2:]) + 1)]
            out = list(range(int(lo), int(hi) + 1))
        else:
            out = [int(v) for v in s.split(",")]
    except ValueError:
        raise ConfigError(f"cannot parse range {text!r}", field=field)
    if not out or min(out) < 1:
        raise ConfigError(f"range {text!r} is empty or non-positive", field=field)
    return out


def parse_complex(text, field: str) -> complex:
    if isinstance(text, (int, float, complex)):
        return complex(text)
    if isinstance(text, list) and len(text) == 2:
        return complex(text[0], text[1])
    try:
        return complex(str(text).replace(" ", "").replace("i", "j"))
    except ValueError:
        raise ConfigError(f"cannot parse complex number {text!r}", field=field)


# -- parser -------------------------------------------------------------------------------

def _common(p: argparse.ArgumentParser, poly: bool = True):
    if poly:
        p.add_argument("--poly", help="JSON file with [[re, im], ...] coefficients")
        p.add_argument("--coeffs", help="inline coefficients, JSON or comma-separated complex")
    p.add_argument("--config", help="flat JSON file mirroring the flags")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="iterzeros", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("green", help="escape-rate Green function on a grid")
    _common(p)
    p.add_argument("--rect", default="-2,2,-2,2")
    p.add_argument("--grid", default="256x256")
    p.add_argument("--n-esc", type=int, default=64)

    p = sub.add_parser("brolin", help="harmonic-measure sample by backward random walks")
    _common(p)
    p.add_argument("--a", default=None, help="start point (default: outside K(f))")
    p.add_argument("--depth", type=int, default=14)
    p.add_argument("--count", type=int, default=4096)

    p = sub.add_parser("roots", help="all zeros of a polynomial, or of (f^n)^(m)")
    _common(p)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--n", type=int, default=None, help="iterate count; with --m gives (f^n)^(m)")
    p.add_argument("--m", type=int, default=0)

    p = sub.add_parser("jet-eval", help="derivatives of f^n at a point")
    _common(p)
    p.add_argument("--z", required=False, default="0")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--t", type=int, default=2)

    p = sub.add_parser("bell-table", help="the integer polynomials A_{s,u}")
    _common(p, poly=False)
    p.add_argument("--smax", type=int, default=4)

    p = sub.add_parser("linearize", help="derivative-ratio rate at an attracting or parabolic cycle")
    _common(p)
    p.add_argument("--period", type=int, default=1)
    p.add_argument("--mode", choices=["schroeder", "abel"], default=None)
    p.add_argument("--points", default=None, help="test points file (CSV re,im or JSON)")
    p.add_argument("--t", type=int, default=2)
    p.add_argument("--n-range", default=None)

    p = sub.add_parser("verify-a", help="zeros of (f^n)^(m) against the harmonic measure")
    _common(p)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--n", default="6..11")
    p.add_argument("--rect", default="-2.5,2.5,-2.5,2.5")
    p.add_argument("--grid", default="256x256")
    p.add_argument("--depth", type=int, default=14)
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--tol", type=float, default=0.05)

    p = sub.add_parser("m1-check", help="zeros of (f^n)' against pulled-back critical points")
    _common(p)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--tol", type=float, default=1e-6)

    p = sub.add_parser("potential-l1", help="L1 gap between log|(f^n)^(m)|/(d^n-m) and g_f")
    _common(p)
    p.add_argument("--n", type=int, default=6)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--rect", default="-2,2,-2,2")
    p.add_argument("--grid", default="256x256")
    p.add_argument("--n-esc", type=int, default=64)
    return ap


def _subparser(ap: argparse.ArgumentParser, name: str) -> argparse.ArgumentParser:
    for action in ap._subparsers._group_actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)


def load_config(path: str, sub: argparse.ArgumentParser) -> Dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", field="config") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}: {exc.msg}", field="config") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object", field="config")
    known = {a.dest for a in sub._actions}
    out = {}
    for key, val in cfg.items():
        dest = key.replace("-", "_")
        if dest not in known or dest in ("config", "help"):
            raise ConfigError(f"unknown key {key!r}", field=key)
        if dest == "coeffs" and isinstance(val, list):
            val = json.dumps(val)
        out[dest] = val
    return out


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    ap = build_parser()
    first = ap.parse_args(argv)
    if first.config:
        sub = _subparser(ap, first.command)
        sub.set_defaults(**load_config(first.config, sub))
        first = ap.parse_args(argv)
    return first


# -- helpers -----------------------------------------------------------------------------

def get_poly(args) -> ComplexPoly:
    if getattr(args, "coeffs", None):
        return fio.parse_coeffs(str(args.coeffs))
    if getattr(args, "poly", None):
        return fio.read_poly(args.poly)
    raise ConfigError("one of --poly or --coeffs is required", field="poly")


def _require_degree(f: ComplexPoly, lo: int = 2):
    if f.degree < lo:
        raise ConfigError(f"degree {f.degree} is below {lo}", field="poly")


def _versions() -> dict:
    import scipy
    import sympy
    return {"iterzeros": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "sympy": sympy.__version__}


def _config_dict(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("out", "config")}


class Output:
    """Collects named artifacts; writes them under ``--out`` or prints the primary one."""

    def __init__(self, args):
        self.args = args
        self.files: Dict[str, bytes] = {}
        self.primary: Optional[str] = None

    def add(self, name: str, data, primary: bool = False):
        self.files[name] = data if isinstance(data, bytes) else data.encode()
        if primary or self.primary is None:
            self.primary = name

    def flush(self):
        if self.args.out:
            out = Path(self.args.out)
            out.mkdir(parents=True, exist_ok=True)
            for name, data in self.files.items():
                (out / name).write_bytes(data)
            manifest = {"command": self.args.command, "config": _config_dict(self.args),
                        "seed": self.args.seed, "versions": _versions(), "files": sorted(self.files)}
            (out / "manifest.json").write_text(fio.dump_json(manifest))
        elif self.primary is not None:
            sys.stdout.write(self.files[self.primary].decode())


# -- subcommands --------------------------------------------------------------------------

def cmd_green(args, out: Output) -> int:
    f = get_poly(args)
    _require_degree(f)
    rect, (nx, ny) = parse_rect(args.rect), parse_grid(args.grid)
    g = green_grid(f, rect, nx, ny, args.n_esc)
    out.add("green.csv", fio.grid_to_csv(g), primary=True)
    out.add("green.bin", fio.grid_to_bytes(g))
    return EXIT_OK


def _default_start(f: ComplexPoly) -> complex:
    return complex(1.1 * filled_radius(f) * np.exp(0.7j))


def cmd_brolin(args, out: Output) -> int:
    f = get_poly(args)
    _require_degree(f)
    a = _default_start(f) if args.a is None else parse_complex(args.a, "a")
    exc = detect_exceptional(f)
    if exc.has_finite_exceptional and abs(a - exc.b) <= 1e-12 * (1 + abs(a)):
        raise ConfigError(f"start point {a} is the exceptional point of f", field="a")
    if args.depth < 1 or args.count < 1:
        raise ConfigError("depth and count must be positive", field="depth")
    mu = brolin_sample(f, a, args.depth, args.count, seed=args.seed)
    out.add("brolin.csv", fio.measure_to_csv(mu, args.seed), primary=True)
    return EXIT_OK


def cmd_roots(args, out: Output) -> int:
    f = get_poly(args)
    if args.n is not None:
        if args.m < 1:
            raise ConfigError("--n needs --m >= 1", field="m")
        cloud = roots_of_iterated_derivative(f, args.n, args.m, args.tol, args.max_iter)
    else:
        _require_degree(f, 1)
        cloud = find_roots(f, args.tol, args.max_iter)
    out.add("roots.csv", fio.roots_to_csv(cloud.points, cloud.residuals), primary=True)
    out.add("roots.json", fio.dump_json({"degree": len(cloud), "converged": cloud.converged,
                                         "iterations": cloud.iterations}))
    return EXIT_OK if cloud.converged else EXIT_VERDICT


def _log_scaled_derivatives(f, z, n, t):
    """Derivatives from the extended-range jet; moduli beyond double range become inf."""
    u, s = iterate_log_coeffs(f, np.array([z]), n, t)
    vals = []
    for k in range(t + 1):
        c = u[k, 0]
        if c == 0:
            vals.append([0.0, 0.0])
            continue
        mag = float(s[0]) + math.log(abs(c)) + math.lgamma(k + 1)
        phase = complex(c / abs(c))
        if mag < 709:
            v = phase * math.exp(mag)
        else:
            v = complex(*(math.copysign(math.inf, x) if abs(x) > 1e-15 else 0.0
                          for x in (phase.real, phase.imag)))
        vals.append([v.real, v.imag])
    return vals


def cmd_jet_eval(args, out: Output) -> int:
    f = get_poly(args)
    z = parse_complex(args.z, "z")
    if args.n < 1 or args.t < 0:
        raise ConfigError("need n >= 1 and t >= 0", field="n")
    try:
        c = iterate_coeffs(f, z, args.n, args.t)
        fact = np.array([math.factorial(k) for k in range(args.t + 1)], dtype=float)
        vals = [[float(v.real), float(v.imag)] for v in c * fact]
    except NonFinite:
        vals = _log_scaled_derivatives(f, z, args.n, args.t)
    res = {"z": [z.real, z.imag], "n": args.n, "t": args.t, "value": vals[0], "derivatives": vals[1:]}
    out.add("jet.json", fio.dump_json(res), primary=True)
    return EXIT_OK


def cmd_bell_table(args, out: Output) -> int:
    if args.smax < 1:
        raise ConfigError("smax must be >= 1", field="smax")
    table = build_bell_table(args.smax)
    lines, entries = [], []
    for (s, u), a in sorted(table.entries.items()):
        lines.append(f"A_{{{s},{u}}} = {a}")
        entries.append({"s": s, "u": u, "terms": a.to_json()})
    out.add("bell.txt", "\n".join(lines) + "\n", primary=True)
    out.add("bell.json", fio.dump_json(entries))
    return EXIT_OK


def _pick_cycle(f, period, mode):
    want = {"schroeder": ("attracting",), "abel": ("parabolic",), None: ("attracting", "parabolic")}[mode]
    for c in find_cycle(f, period):
        if c.kind in want:
            return c
    raise ConfigError(f"no {'/'.join(want)} cycle of period {period}", field="period")


def cmd_linearize(args, out: Output) -> int:
    f = get_poly(args)
    cyc = _pick_cycle(f, args.period, args.mode)
    lin = make_linearizer(f, cyc, args.mode)
    if args.points:
        pts = fio.read_points(args.points)
    elif lin.mode == "abel":
        pts = cyc.a + lin.petal.direction * lin.petal.radius * np.array([0.4, 0.8, 1.2, 1.6])
    else:
        r = 0.5 * lin.trust_radius
        pts = cyc.a + r * np.exp(1j * np.linspace(0.3, 6.0, 10))
    if args.t < 2:
        raise ConfigError("t must be >= 2", field="t")
    default = "2^4..2^12" if lin.mode == "abel" else "5..40"
    ns = parse_n_range(args.n_range or default, "n_range")
    rep = verify_theorem_b(f, cyc, args.t, pts, ns, lin)
    passed = rep.slope_ok(absolute=0.2) if lin.mode == "abel" else rep.slope_ok(rel=0.1)
    res = rep.to_json()
    res.update({"cycle": cyc.to_json(), "mode": lin.mode, "passed": passed})
    out.add("rate.json", fio.dump_json(res), primary=True)
    return EXIT_OK if passed else EXIT_VERDICT


def cmd_verify_a(args, out: Output) -> int:
    f = get_poly(args)
    _require_degree(f)
    ns = parse_n_range(args.n)
    rect, grid = parse_rect(args.rect), parse_grid(args.grid)
    d = f.degree
    count = args.count or max(4096, d ** max(ns))
    mu = brolin_sample(f, _default_start(f), args.depth, count, seed=args.seed)
    rep = theorem_a_run(f, args.m, ns, mu, rect, grid, args.tol)
    res = rep.to_json()
    res["seed"] = args.seed
    out.add("report.json", fio.dump_json(res), primary=True)
    for n, pts in zip(ns, rep.clouds):
        out.add(f"cloud_n{n}.csv", fio.measure_to_csv(EmpiricalMeasure.uniform(pts), args.seed))
    out.add("reference.csv", fio.measure_to_csv(mu, args.seed))
    return EXIT_OK if rep.verdict in ("converging", "counterexample_expected") else EXIT_VERDICT


def cmd_m1_check(args, out: Output) -> int:
    f = get_poly(args)
    _require_degree(f)
    rep = m1_telescoping_check(f, args.n, args.tol)
    res = {"n": rep.n, "zero_count": rep.zero_count, "predicted_count": rep.predicted_count,
           "level_counts": rep.level_counts, "max_match_distance": rep.max_match_distance,
           "passed": rep.passed}
    out.add("m1.json", fio.dump_json(res), primary=True)
    return EXIT_OK if rep.passed else EXIT_VERDICT


def cmd_potential_l1(args, out: Output) -> int:
    f = get_poly(args)
    _require_degree(f)
    rect, (nx, ny) = parse_rect(args.rect), parse_grid(args.grid)
    u = normalized_logmod_grid(f, args.n, args.m, rect, nx, ny)
    g = green_grid(f, rect, nx, ny, args.n_esc)
    res = {"n": args.n, "m": args.m, "rect": list(rect), "grid": [nx, ny], "l1": l1_distance(u, g)}
    out.add("l1.json", fio.dump_json(res), primary=True)
    out.add("logmod.csv", fio.grid_to_csv(u))
    return EXIT_OK


COMMANDS = {
    "green": cmd_green, "brolin": cmd_brolin, "roots": cmd_roots, "jet-eval": cmd_jet_eval,
    "bell-table": cmd_bell_table, "linearize": cmd_linearize, "verify-a": cmd_verify_a,
    "m1-check": cmd_m1_check, "potential-l1": cmd_potential_l1,
}


def dispatch(args: argparse.Namespace) -> int:
    out = Output(args)
    status = COMMANDS[args.command](args, out)
    out.flush()
    return status


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = parse_args(argv)
        return dispatch(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except IterZerosError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
