"""Command-line front end: analyze, trace, confine, area, halphen, egyptian, report.

Every JSON output carries the resolved run configuration and is written with
sorted keys, so identical configurations give byte-identical files.
Exit codes: 0 success, 2 precondition failure, 3 input parse error,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field as dc_field
from pathlib import Path

import numpy as np
import sympy

from . import __version__
from .halphen import (HalphenError, build_triangle_group, egyptian_enumerate, geodesic_ray, leaf_type,
                      poincare_series, prebuilt_group, verify_relations)
from .infinity_form import ResidueError, h_singular_loci
from .polyfield import MultiPoly, PolyError, PolyVectorField, rotate_chart, to_infinity_chart
from .singularities import semicomplete_report, singularity_table, table_to_csv
from .trajectory import (Neighborhood, TraceError, affine_to_chart, area_ratio, confinement_measure,
                         contraction_check, default_neighborhood, time_integral, trace, trajectory_svg,
                         trajectory_to_csv)

EXIT_OK, EXIT_PRECONDITION, EXIT_PARSE, EXIT_NUMERICAL = 0, 2, 3, 4


class ParseError(ValueError):
    """Malformed input file or argument."""


@dataclass
class RunConfig:
    command: str
    field: str | None = None
    seed: int = 0
    chart: str = "identity"
    theta: float = 0.0
    t_max: float = 10.0
    tol: float = 1e-10
    radius: float = 0.1
    out: str = "."
    formats: list = dc_field(default_factory=list)
    extra: dict = dc_field(default_factory=dict)

    def validate(self) -> None:
        if not self.radius > 0:
            raise ParseError("radius must be positive")
        if not self.t_max > 0:
            raise ParseError("t_max must be positive")
        if not 0 < self.tol <= 1e-2:
            raise ParseError("tol must lie in (0, 1e-2]")

    def to_json(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# input parsing
# ---------------------------------------------------------------------------


def parse_field_data(data) -> PolyVectorField:
    """Field from JSON data: term lists or polynomial strings in x, y, z."""
    try:
        comps = data["components"]
        n = int(data.get("n", len(comps)))
    except (TypeError, KeyError, ValueError) as exc:
        raise ParseError(f"field needs 'components': {exc}") from exc
    if not comps or len(comps) != n or n not in (2, 3):
        raise ParseError("field needs 2 or 3 non-empty components matching n")
    out = []
    gens = sympy.symbols("x y z")[:n]
    for c in comps:
        if isinstance(c, str):
            try:
                expr = sympy.sympify(c, locals={str(g): g for g in gens})
                poly = sympy.Poly(sympy.expand(expr), *gens)
            except (sympy.SympifyError, sympy.PolynomialError, TypeError) as exc:
                raise ParseError(f"cannot parse component {c!r}: {exc}") from exc
            terms = {m: complex(sympy.N(k)) for m, k in poly.terms()}
            out.append(MultiPoly(n, terms))
        elif isinstance(c, list):
            try:
                out.append(MultiPoly.from_json(n, c))
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"bad term list: {exc}") from exc
        else:
            raise ParseError("components must be strings or term lists")
    return PolyVectorField(n, tuple(out))


def load_field_file(path: str | None) -> PolyVectorField:
    if not path:
        raise ParseError("--field is required")
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path} is not valid JSON: {exc}") from exc
    return parse_field_data(data)


def parse_point(text: str) -> tuple:
    try:
        return tuple(complex(v.replace(" ", "")) for v in text.split(","))
    except ValueError as exc:
        raise ParseError(f"bad point {text!r}; use comma separated complex numbers") from exc


def parse_re_im(text: str) -> complex:
    try:
        parts = [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise ParseError(f"bad value {text!r}; use re,im") from exc
    if len(parts) == 1:
        return complex(parts[0])
    if len(parts) != 2:
        raise ParseError(f"bad value {text!r}; use re,im")
    return complex(parts[0], parts[1])


def parse_orbifold(text: str):
    if text.replace(" ", "") in ("2,2,inf", "2,2,2,2"):
        return text.replace(" ", "")
    try:
        ms = tuple(int(v) for v in text.split(","))
    except ValueError as exc:
        raise ParseError(f"bad orbifold {text!r}") from exc
    if len(ms) != 3:
        raise ParseError("orbifold needs three orders m1,m2,m3")
    return ms


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------


def _jsonable(obj):
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.complexfloating):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=1) + "\n"


class Writer:
    def __init__(self, cfg: RunConfig, default_formats: list):
        self.cfg = cfg
        self.formats = cfg.formats or default_formats
        self.dir = Path(cfg.out)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.written: list[str] = []

    def wants(self, fmt: str) -> bool:
        return fmt in self.formats

    def json(self, name: str, payload: dict) -> None:
        if self.wants("json"):
            payload = dict(payload, config=self.cfg.to_json())
            self._write(name + ".json", dumps(payload))

    def text(self, name: str, fmt: str, content: str, header: str | None = None) -> None:
        if self.wants(fmt):
            if header and fmt == "csv":
                content = "# " + header + "\n" + content
            self._write(f"{name}.{fmt}", content)

    def _write(self, fname: str, content: str) -> None:
        path = self.dir / fname
        path.write_text(content)
        self.written.append(str(path))


def _config_line(cfg: RunConfig) -> str:
    return "config " + json.dumps(_jsonable(cfg.to_json()), sort_keys=True)


def _chart_for(X: PolyVectorField, cfg: RunConfig):
    if cfg.chart == "rotate":
        return rotate_chart(X, cfg.seed)
    return to_infinity_chart(X)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_analyze(cfg: RunConfig) -> int:
    X = load_field_file(cfg.field)
    chart = _chart_for(X, cfg)
    table = singularity_table(chart) if chart.dim == 2 else []
    loci = h_singular_loci(chart)
    report = semicomplete_report(X, chart=chart, seed=cfg.seed)
    w = Writer(cfg, ["json", "csv"])
    w.json("analysis", {"chart": chart.describe(), "singularities": [r.to_json() for r in table],
                        "loci": loci.to_json(), "semicomplete": report.to_json()})
    w.text("singularities", "csv", table_to_csv(table), _config_line(cfg))
    print(f"{len(table)} singular points at infinity; semicomplete checks: "
          f"{', '.join(f'{n} {st}' for n, st, _ in report.verdicts)}")
    for r in table:
        loc = ", ".join(f"{complex(v):.6g}" for v in r.location)
        print(f"  ({loc})  {r.classification}  residues {[f'{complex(v):.6g}' for v in r.residues]}")
    return EXIT_OK


def cmd_trace(cfg: RunConfig) -> int:
    X = load_field_file(cfg.field)
    chart = _chart_for(X, cfg)
    start = cfg.extra.get("start")
    if start is None:
        raise ParseError("--start is required")
    z0 = cfg.extra.get("z0", 1.0)
    traj = trace(chart, start, z0, cfg.theta, cfg.t_max, tol=cfg.tol,
                 sample_dt=cfg.extra.get("sample_dt", 0.05))
    T, tail = time_integral(traj)
    summary = {"termination": traj.termination, "events": traj.events, "t_end": traj.end.t, "T": T,
               "tail_bound": tail, "samples": len(traj.states)}
    if chart.homogeneous:
        summary["contraction"] = contraction_check(traj, chart).to_json()
    w = Writer(cfg, ["json", "csv", "svg"])
    w.json("trace", summary)
    w.text("trajectory", "csv", trajectory_to_csv(traj), _config_line(cfg))
    stamp = cfg.extra.get("stamp")
    w.text("trajectory", "svg", trajectory_svg(traj, stamp=stamp))
    print(f"trace {traj.termination} at t = {traj.end.t:.6g}; T = {complex(T):.10g}; tail bound {tail:.3g}")
    return EXIT_NUMERICAL if traj.termination == "step-failure" else EXIT_OK


def _neighborhood(chart, cfg: RunConfig) -> Neighborhood:
    if cfg.extra.get("everything"):
        return Neighborhood([], cfg.radius, everything=True)
    return default_neighborhood(chart, cfg.radius)


def cmd_confine(cfg: RunConfig) -> int:
    X = load_field_file(cfg.field)
    chart = to_infinity_chart(X)
    p = cfg.extra.get("point")
    if p is None:
        raise ParseError("--point is required")
    V = _neighborhood(chart, cfg)
    total, prof = confinement_measure(X, p, cfg.theta, V, cfg.t_max, chart=chart, assume_complete=True,
                                      tol=cfg.tol)
    half = float(np.interp(cfg.t_max / 2, prof[:, 0], prof[:, 1]))
    growth = (total - half) / total if total > 0 else 0.0
    w = Writer(cfg, ["json", "csv"])
    w.json("confine", {"outside_measure": total, "measure_at_half_budget": half, "relative_growth": growth,
                       "neighborhood": V.to_json()})
    buf = io.StringIO()
    cw = csv.writer(buf, lineterminator="\n")
    cw.writerow(["t", "outside_measure"])
    for t, m in prof:
        cw.writerow([f"{t:.10g}", f"{m:.15g}"])
    w.text("confine_profile", "csv", buf.getvalue(), _config_line(cfg))
    print(f"outside measure {total:.10g}; growth over the second half of the budget {growth:.3%}")
    return EXIT_OK


def cmd_area(cfg: RunConfig) -> int:
    X = load_field_file(cfg.field)
    chart = to_infinity_chart(X)
    p = cfg.extra.get("point")
    if p is None:
        raise ParseError("--point is required")
    V = _neighborhood(chart, cfg)
    n = cfg.extra.get("n_theta", 9)
    grid = [0.0] if n == 1 else list(np.linspace(-1.2, 1.2, n))
    rows = []
    for r in cfg.extra.get("r_values", [10.0, 20.0, 40.0]):
        ratio = area_ratio(X, p, grid, r, V, chart=chart, t_max=cfg.t_max, tol=max(cfg.tol, 1e-9))
        rows.append({"r": r, "ratio": ratio})
        print(f"r = {r:g}: area ratio {ratio:.6f}")
    w = Writer(cfg, ["json"])
    w.json("area", {"theta_grid": grid, "ratios": rows})
    return EXIT_OK


def cmd_halphen(cfg: RunConfig) -> int:
    orb = cfg.extra.get("orbifold", (2, 3, 7))
    G = prebuilt_group(orb) if isinstance(orb, str) else build_triangle_group(*orb)
    rel = verify_relations(G)
    payload = {"group": G.to_json(), "relations": rel.to_json()}
    w = Writer(cfg, ["json", "csv"])
    if G.regime != "spherical":
        w0 = cfg.extra.get("w0", 0j)
        J = cfg.extra.get("J", 200)
        rays, series = [], []
        for sel in cfg.extra.get("rays") or ["auto", "auto:2"]:
            ray = geodesic_ray(G, sel, J, w0)
            rep = poincare_series(G, ray)
            rays.append(ray)
            series.append({"selector": sel, "word_period": ray.word[:12], **rep.to_json()})
        payload["series"] = series
        payload["leaf_type"] = leaf_type(G, w0, rays)
        buf = io.StringIO()
        cw = csv.writer(buf, lineterminator="\n")
        cw.writerow(["j"] + [f"S_{s['selector']}" for s in series])
        sums = [poincare_series(G, r).partial_sums for r in rays]
        for j in range(len(sums[0])):
            cw.writerow([j] + [f"{s[j]:.15g}" for s in sums])
        w.text("partial_sums", "csv", buf.getvalue(), _config_line(cfg))
    else:
        payload["leaf_type"] = leaf_type(G)
    w.json("halphen", payload)
    print(f"{G.regime} group {G.orders}; max relation deviation {rel.max_deviation:.3g}; "
          f"leaf type {payload['leaf_type']}")
    return EXIT_OK


def cmd_egyptian(cfg: RunConfig) -> int:
    n = cfg.extra.get("n", 2)
    bound = cfg.extra.get("bound", 3)
    sols = egyptian_enumerate(n, bound)
    w = Writer(cfg, ["json", "csv"])
    w.json("egyptian", {"n": n, "bound": bound, "count": len(sols), "solutions": [list(s) for s in sols]})
    w.text("egyptian", "csv", "".join(",".join(map(str, s)) + "\n" for s in sols), _config_line(cfg))
    print(f"{len(sols)} solutions")
    for s in sols[:20]:
        print("  " + " ".join(map(str, s)))
    return EXIT_OK


def cmd_report(cfg: RunConfig) -> int:
    """Index the JSON outputs found in the output directory."""
    d = Path(cfg.out)
    lines = ["# run report", ""]
    for path in sorted(d.glob("*.json")):
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError:
            lines.append(f"- {path.name}: unreadable")
            continue
        cmd = data.get("config", {}).get("command", "?")
        keys = ", ".join(k for k in sorted(data) if k != "config")
        lines.append(f"- {path.name} ({cmd}): {keys}")
    text = "\n".join(lines) + "\n"
    (d / "report.md").write_text(text)
    print(text, end="")
    return EXIT_OK


COMMANDS = {"analyze": cmd_analyze, "trace": cmd_trace, "confine": cmd_confine, "area": cmd_area,
            "halphen": cmd_halphen, "egyptian": cmd_egyptian, "report": cmd_report}


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--field", default=d, help="field file (JSON)")
    p.add_argument("--seed", type=int, default=d, help="seed for chart rotation")
    p.add_argument("--out", default=d, help="output directory")
    p.add_argument("--format", action="append", choices=["json", "csv", "svg"], default=d,
                   help="output format (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polyinf", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    _add_common(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_):
        p = sub.add_parser(name, help=help_)
        _add_common(p, suppress=True)
        return p

    def traj_opts(p, tmax):
        p.add_argument("--theta", type=float, default=0.0)
        p.add_argument("--tmax", type=float, default=tmax)
        p.add_argument("--tol", type=float, default=1e-10)

    p = add("analyze", "singularity table and H loci at infinity")
    p.add_argument("--chart", choices=["identity", "rotate"], default="identity")
    p = add("trace", "trace one oriented trajectory")
    traj_opts(p, 10.0)
    p.add_argument("--chart", choices=["identity", "rotate"], default="identity")
    p.add_argument("--start", required=True, help="chart point, e.g. -1,-1")
    p.add_argument("--z0", default="1", help="height re,im")
    p.add_argument("--sample-dt", type=float, default=0.05)
    p.add_argument("--stamp", default=None, help="comment embedded in the SVG")
    for name, help_ in (("confine", "outside-V time-plane measure"), ("area", "time-plane area ratio")):
        p = add(name, help_)
        traj_opts(p, 100.0 if name == "confine" else 60.0)
        p.add_argument("--point", required=True, help="affine point, e.g. 1,2")
        p.add_argument("--radius", type=float, default=0.1)
        p.add_argument("--everything", action="store_true", help="take V to be the whole chart")
        if name == "area":
            p.add_argument("--r", type=float, action="append", help="time-plane radius (repeatable)")
            p.add_argument("--n-theta", type=int, default=9)
    p = add("halphen", "triangle group, relations, Poincare series")
    p.add_argument("--orbifold", default="2,3,7")
    p.add_argument("--ray", action="append", help="auto, auto:k, alt or custom:<word> (repeatable)")
    p.add_argument("--J", type=int, default=200)
    p.add_argument("--w0", default="0,0", help="base point re,im")
    p = add("egyptian", "egyptian fraction solutions")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--bound", type=int, default=3)
    add("report", "index the outputs in --out")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=args.command, field=args.field, seed=args.seed or 0, out=args.out or ".",
                    formats=sorted(set(args.format or [])))
    for name in ("theta", "tol", "radius", "chart"):
        if hasattr(args, name):
            setattr(cfg, name, getattr(args, name))
    if hasattr(args, "tmax"):
        cfg.t_max = args.tmax
    extra = cfg.extra
    if args.command == "trace":
        extra.update(start=parse_point(args.start), z0=parse_re_im(args.z0), sample_dt=args.sample_dt)
        if args.stamp:
            extra["stamp"] = args.stamp
    elif args.command in ("confine", "area"):
        extra.update(point=parse_point(args.point), everything=args.everything)
        if args.command == "area":
            extra.update(r_values=args.r or [10.0, 20.0, 40.0], n_theta=args.n_theta)
    elif args.command == "halphen":
        extra.update(orbifold=parse_orbifold(args.orbifold), rays=args.ray, J=args.J, w0=parse_re_im(args.w0))
    elif args.command == "egyptian":
        extra.update(n=args.n, bound=args.bound)
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        return COMMANDS[cfg.command](cfg)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (PolyError, TraceError, HalphenError) as exc:
        print(f"precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (ResidueError, FloatingPointError, ArithmeticError, np.linalg.LinAlgError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
