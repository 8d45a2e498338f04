"""``wagner`` command-line interface.

Exit codes: 0 success, 1 configuration or parse error, 2 numerical failure.
Settings are merged as defaults < ``--spec`` file < explicit flags.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    ConfigError,
    ExprSyntaxError,
    NumericalError,
    SingularApproach,
)
from .expr import evaluate, parse
from .integrators import IntegratorConfig
from .io import load_surface, write_csv, write_json
from .ode import (
    LiftedState,
    ProjectedState,
    Trajectory,
    integrate_lifted,
    integrate_projected,
    lift_solution,
)

log = logging.getLogger("wagner")

DEFAULTS = {
    "surface": None,
    "C": "0",
    "init": None,
    "t_span": "0:20",
    "method": "rkf45",
    "atol": 1e-10,
    "rtol": 1e-10,
    "h_init": 1e-2,
    "h_min": 1e-12,
    "h_max": 0.5,
    "max_steps": 2_000_000,
    "events": True,
    "out": None,
    "svg": None,
    "report": None,
    "jobs": 1,
    "phi0": 0.0,
    "lift_solution": False,
    "lifted": False,
    "u2_span": None,
    "samples": 201,
    "point": None,
    "phi": 0.0,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


# -- small parsers -----------------------------------------------------------------


def _number(text, what: str) -> float:
    if isinstance(text, (int, float)):
        return float(text)
    try:
        return float(evaluate(parse(str(text), variables=())))
    except ExprSyntaxError as exc:
        raise ConfigError(f"{what}: {exc}") from exc


def parse_span(text) -> tuple[float, float]:
    if isinstance(text, (list, tuple)):
        a, b = text
    else:
        if ":" not in str(text):
            raise ConfigError(f"span {text!r} must look like start:end")
        a, b = str(text).split(":", 1)
    return _number(a, "span"), _number(b, "span")


def parse_list(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [_number(x, "C") for x in text]
    if isinstance(text, (int, float)):
        return [float(text)]
    return [_number(x, "C") for x in str(text).split(",") if x.strip()]


_INIT_KEYS = {"u1", "u2", "angle", "speed", "Q1", "Q2", "Q3", "phi", "t"}


def parse_init(text, surface=None) -> dict:
    """``"u1=0,u2=0.3,angle=0.4,speed=1"``; the bare token ``minK`` starts at the least-curvature point."""
    if isinstance(text, dict):
        items = dict(text)
    else:
        items = {}
        for tok in str(text).split(","):
            tok = tok.strip()
            if not tok:
                continue
            if tok == "minK":
                items["minK"] = True
                continue
            if "=" not in tok:
                raise ConfigError(f"bad init item {tok!r}; expected key=value")
            k, v = tok.split("=", 1)
            items[k.strip()] = v.strip()
    out = {}
    if items.pop("minK", False):
        if surface is None or surface.catalog is None or surface.catalog.K_exact is None:
            raise ConfigError("minK start needs a built-in surface with known curvature")
        out["u1"], out["u2"] = surface.catalog.min_curvature_point
    for k, v in items.items():
        if k not in _INIT_KEYS:
            raise ConfigError(f"unknown init key {k!r}")
        out[k] = _number(v, f"init {k}")
    if "u1" not in out or "u2" not in out:
        raise ConfigError("init needs u1 and u2")
    if "angle" in out and ("Q1" in out or "Q2" in out):
        raise ConfigError("give either angle/speed or Q1/Q2")
    speed = out.get("speed", 1.0)
    if "Q1" in out or "Q2" in out:
        out.setdefault("Q1", 0.0)
        out.setdefault("Q2", 0.0)
    else:
        a = out.get("angle", 0.0)
        out["Q1"], out["Q2"] = speed * math.cos(a), speed * math.sin(a)
    out.setdefault("t", 0.0)
    return out


def _projected_init(d: dict) -> ProjectedState:
    return ProjectedState(d["u1"], d["u2"], d["Q1"], d["Q2"], d["t"])


# -- settings ------------------------------------------------------------------------


def _settings(args) -> dict:
    s = dict(DEFAULTS)
    if getattr(args, "spec", None):
        try:
            spec = json.loads(Path(args.spec).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read spec {args.spec}: {exc.strerror}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"spec {args.spec} is not valid JSON: {exc}") from exc
        if not isinstance(spec, dict):
            raise ConfigError("run spec must be a JSON object")
        for k, v in spec.items():
            key = k.replace("-", "_")
            if key in ("command", "mode"):
                continue
            if key not in s:
                raise ConfigError(f"unknown spec field {k!r}")
            s[key] = v
    for k, v in vars(args).items():
        if k in s and v is not None:
            s[k] = v
    if s["surface"] is None:
        raise ConfigError("a surface is required (--surface or spec field 'surface')")
    if s["init"] is not None and not isinstance(s["init"], list):
        s["init"] = [s["init"]]
    return s


def _config(s: dict) -> IntegratorConfig:
    try:
        return IntegratorConfig(
            method=s["method"],
            abs_tol=float(s["atol"]),
            rel_tol=float(s["rtol"]),
            h_init=float(s["h_init"]),
            h_min=float(s["h_min"]),
            h_max=float(s["h_max"]),
            t_span=parse_span(s["t_span"]),
            max_steps=int(s["max_steps"]),
            events=bool(s["events"]),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _cfg_kwargs(cfg: IntegratorConfig) -> dict:
    return {k: getattr(cfg, k) for k in ("method", "abs_tol", "rel_tol", "h_init", "h_min", "h_max",
                                         "t_span", "max_steps", "events")}


def _inits(s: dict, surface) -> list[dict]:
    if not s["init"]:
        raise ConfigError("an initial state is required (--init)")
    return [parse_init(x, surface) for x in s["init"]]


def _output_paths(base, n: int) -> list[Path | None]:
    if base is None:
        return [None] * n
    base = Path(base)
    if n == 1:
        return [base]
    return [base.with_name(f"{base.stem}_run{k}{base.suffix}") for k in range(n)]


# -- workers (module level so they can run in a process pool) ------------------------


def _work_projected(ref: str, init: dict, C: float, cfg_kw: dict, lift: bool, phi0: float):
    surface = load_surface(ref)
    cfg = IntegratorConfig(**cfg_kw)
    tr = integrate_projected(surface.chart, _projected_init(init), C, cfg)
    if lift:
        tr = lift_solution(surface.chart, tr, phi0, C)
    return _pack(tr)


def _pack(tr: Trajectory) -> dict:
    return {"kind": tr.kind, "t": tr.t, "y": tr.y, "dy": tr.dy, "C": tr.C, "diagnostics": tr.diagnostics,
            "crossings": tr.crossings, "stats": tr.stats, "status": tr.status}


def _unpack(d: dict, chart) -> Trajectory:
    return Trajectory(kind=d["kind"], chart=chart, t=d["t"], y=d["y"], dy=d["dy"], C=d["C"],
                      diagnostics=d["diagnostics"], crossings=d["crossings"], stats=d["stats"],
                      status=d["status"])


def _map(fn, jobs_args, jobs: int):
    if jobs > 1 and len(jobs_args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(fn, *a) for a in jobs_args]
            return [f.result() for f in futures]
    return [fn(*a) for a in jobs_args]


# -- rendering -------------------------------------------------------------------------


def _svg(path, surface, trajs, labels, extra=None) -> None:
    from .plotting import new_figure, plot_3d, plot_development, save_svg

    with_3d = surface.catalog is not None and surface.embed is not None
    fig, ax, ax3 = new_figure(with_3d)
    if extra is not None:
        extra(ax)
    sigma = surface.catalog.sigma if surface.catalog is not None else None
    plot_development(ax, trajs, labels, surface.chart, sigma)
    if with_3d:
        plot_3d(ax3, trajs, labels, surface.embed, surface.chart)
    save_svg(fig, path)


def _crossings_json(tr: Trajectory) -> list[dict]:
    return [asdict(e) for e in tr.crossings]


def _summary(tr: Trajectory, init: dict, C) -> dict:
    return {
        "kind": tr.kind,
        "C": C,
        "init": init,
        "status": tr.status,
        "t_end": float(tr.t[-1]),
        "samples": len(tr.t),
        "stats": tr.stats,
        "crossings": _crossings_json(tr),
    }


def _emit_report(report: dict, path) -> None:
    if path:
        write_json(report, path)
    else:
        from .io import to_jsonable

        json.dump(to_jsonable(report), sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")


# -- commands -------------------------------------------------------------------------


def cmd_integrate(args) -> int:
    s = _settings(args)
    surface = load_surface(s["surface"])
    cfg = _config(s)
    inits = _inits(s, surface)
    Cs = parse_list(s["C"])
    runs = [(init, C) for init in inits for C in Cs]
    work = [(s["surface"], init, C, _cfg_kwargs(cfg), bool(s["lift_solution"]), float(s["phi0"]))
            for init, C in runs]
    packs = _map(_work_projected, work, int(s["jobs"]))
    trajs = [_unpack(p, surface.chart) for p in packs]
    for tr, path in zip(trajs, _output_paths(s["out"], len(trajs))):
        if path is not None:
            write_csv(tr, path)
            log.info("wrote %s", path)
    labels = [f"C={C:g}" for _, C in runs]
    if s["svg"]:
        _svg(s["svg"], surface, trajs, labels)
    report = {"command": "integrate", "runs": [_summary(tr, i, C) for tr, (i, C) in zip(trajs, runs)]}
    if s["report"]:
        write_json(report, s["report"])
    return 0


def cmd_lift(args) -> int:
    s = _settings(args)
    surface = load_surface(s["surface"])
    chart = surface.chart
    cfg = _config(s)
    inits = _inits(s, surface)
    Cs = parse_list(s["C"])
    status = 0
    trajs, runs = [], []
    for init in inits:
        if "Q3" in init:
            Q3s = [(init["Q3"], None)]
        else:
            K0 = chart.frame_terms(init["u1"], init["u2"])[6]
            Q3s = [(C * K0, C) for C in Cs]
        for Q3, C in Q3s:
            state = LiftedState(init["u1"], init["u2"], init.get("phi", float(s["phi"])), init["Q1"], init["Q2"],
                                Q3, init["t"])
            try:
                tr = integrate_lifted(chart, state, cfg)
            except SingularApproach as exc:
                log.error("%s", exc)
                print(f"error: SingularApproach: {exc}", file=sys.stderr)
                tr = exc.trajectory
                status = 2
            trajs.append(tr)
            runs.append((init, C))
    for tr, path in zip(trajs, _output_paths(s["out"], len(trajs))):
        if path is not None and tr is not None:
            write_csv(tr, path)
    if s["svg"]:
        _svg(s["svg"], surface, trajs, [f"Q3/K={tr.diagnostics['C1'][0]:.3g}" for tr in trajs])
    if s["report"]:
        write_json({"command": "lift", "runs": [_summary(tr, i, C) for tr, (i, C) in zip(trajs, runs)]},
                   s["report"])
    return status


def cmd_invariants(args) -> int:
    from .revolution import first_integrals

    s = _settings(args)
    surface = load_surface(s["surface"])
    chart = surface.chart
    cfg = _config(s)
    out = []
    trajs = []
    for init in _inits(s, surface):
        for C in parse_list(s["C"]):
            if s["lifted"]:
                K0 = chart.frame_terms(init["u1"], init["u2"])[6]
                state = LiftedState(init["u1"], init["u2"], float(s["phi"]), init["Q1"], init["Q2"], C * K0,
                                    init["t"])
                tr = integrate_lifted(chart, state, cfg)
            else:
                tr = integrate_projected(chart, _projected_init(init), C, cfg)
            fi = first_integrals(tr, C=C)
            trajs.append(tr)
            out.append({"init": init, "C": C, "kind": tr.kind, "initial": fi.initial(), "drift": fi.drift,
                        "t_end": float(tr.t[-1])})
    for tr, path in zip(trajs, _output_paths(s["out"], len(trajs))):
        if path is not None:
            write_csv(tr, path)
    _emit_report({"command": "invariants", "runs": out}, s["report"])
    return 0


def cmd_region(args) -> int:
    from .revolution import forbidden_region

    s = _settings(args)
    surface = load_surface(s["surface"])
    chart = surface.chart
    cfg = _config(s)
    Cs = parse_list(s["C"])
    if len(Cs) != 1:
        raise ConfigError("region takes a single C")
    C = Cs[0]
    if C == 0:
        raise ConfigError("region needs C != 0")
    init = _inits(s, surface)[0]
    state = _projected_init(init)
    tr = integrate_projected(chart, state, C, cfg)
    K = tr.diagnostics["K"]
    report = {"command": "region", "C": C, "init": init}
    extra = None
    if surface.profile is not None:
        region = forbidden_region(surface.profile, state, C)
        report["K_max"] = region.K_max
        report["bands"] = [{"u2_lo": a, "u2_hi": b} for a, b in region.bands]
        report["trajectory_inside"] = bool(all(region.contains(v) for v in tr.u2)
                                           and np.all(np.abs(K) <= region.K_max + 1e-7))

        def extra(ax):
            from .plotting import plot_bands

            plot_bands(ax, region.bands, chart)
    else:
        from .figures import region_grid
        from .plotting import plot_contour

        K0 = chart.frame_terms(state.u1, state.u2)[6]
        K_max = math.sqrt(state.Q1**2 + state.Q2**2 + (C * K0) ** 2) / abs(C)
        U1, U2, Kg = region_grid(chart)
        report["K_max"] = K_max
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots()
        cs = ax.contour(U1, U2, np.abs(Kg), levels=[K_max])
        report["contour"] = [seg.tolist() for seg in cs.allsegs[0]]
        plt.close(fig)
        report["trajectory_inside"] = bool(np.all(np.abs(K) <= K_max + 1e-7))

        def extra(ax):
            plot_contour(ax, U1, U2, Kg, K_max)

    report["max_abs_K"] = float(np.max(np.abs(K)))
    if s["out"]:
        write_csv(tr, s["out"])
    if s["svg"]:
        _svg(s["svg"], surface, [tr], [f"C={C:g}"], extra)
    _emit_report(report, s["report"])
    return 0


def cmd_quadrature(args) -> int:
    from scipy.optimize import brentq

    from .revolution import first_turning_point, graph_quadrature

    s = _settings(args)
    surface = load_surface(s["surface"])
    prof = surface.profile
    if prof is None:
        raise ConfigError("quadrature needs a surface of revolution")
    chart = surface.chart
    C = parse_list(s["C"])[0]
    init = _inits(s, surface)[0]
    u2_0 = init["u2"]
    A, A1, A2, _ = prof.jet3(u2_0)
    K0 = -A2 / A
    C2 = A * init["Q1"] - C * A1
    C3sq = init["Q1"] ** 2 + init["Q2"] ** 2 + (C * K0) ** 2
    sigma = 1 if init["Q2"] >= 0 else -1
    if s["u2_span"] is not None:
        span = parse_span(s["u2_span"])
    else:
        lo, hi = chart._sample_bounds(2)
        limit = u2_0 + sigma * (hi - lo) if chart.u2_period else (hi if sigma > 0 else lo)
        tp = first_turning_point(prof, C, C2, C3sq, u2_0, sigma, limit)
        end = (tp if tp is not None else limit) - sigma * 1e-3
        span = (u2_0, end)
    graph = graph_quadrature(prof, C, C2, C3sq, span, u2_0, init["u1"], sigma, int(s["samples"]))
    # ODE comparison up to the first turning point
    cfg = _config(s)
    tr = integrate_projected(chart, _projected_init(init), C, cfg)
    turn = np.nonzero(np.sign(tr.Q2) != sigma)[0]
    stop = int(turn[0]) if len(turn) else len(tr.t)
    dev = []
    for v, u1q in zip(graph.u2, graph.u1):
        if v == u2_0:
            continue
        idx = np.nonzero((tr.u2[:stop] - v) * sigma >= 0)[0]
        if len(idx) == 0 or idx[0] == 0:
            continue
        i = int(idx[0])
        tv = brentq(lambda t: tr.sample(t)[1] - v, tr.t[i - 1], tr.t[i], xtol=1e-14)
        dev.append(abs(tr.sample(tv)[0] - u1q))
    report = {"command": "quadrature", "C": C, "C2": C2, "C3sq": C3sq, "direction": sigma, "u2_span": span,
              "compared_samples": len(dev), "max_u1_deviation": max(dev) if dev else None}
    if s["out"]:
        with open(s["out"], "w", encoding="utf-8", newline="\n") as fh:
            fh.write("u2,u1\n")
            for v, u in zip(graph.u2, graph.u1):
                fh.write(f"{format(v, '.17g')},{format(u, '.17g')}\n")
    if s["svg"]:
        from .plotting import new_figure, save_svg

        fig, ax, _ = new_figure(False)
        ax.plot(tr.u1[:stop], tr.u2[:stop], lw=2.5, color="0.8", label="ODE")
        ax.plot(graph.u1, graph.u2, lw=1.0, label="quadrature")
        ax.set_xlabel("u1")
        ax.set_ylabel("u2")
        ax.legend(fontsize=8)
        save_svg(fig, s["svg"])
    _emit_report(report, s["report"])
    return 0


def cmd_tables(args) -> int:
    from .lift import lift_connection, lift_curvature, lift_structure_functions
    from .oracles import table_deltas

    s = _settings(args)
    surface = load_surface(s["surface"])
    chart = surface.chart
    if s["point"] is None:
        raise ConfigError("tables needs --point u1=..,u2=..")
    pt = parse_init(s["point"], surface)
    p = (pt["u1"], pt["u2"])
    report = {
        "command": "tables",
        "point": list(p),
        "K": chart.frame_terms(*p)[6],
        "c_hat": lift_structure_functions(chart, p),
        "gamma_hat": lift_connection(chart, p),
        "r_hat": lift_curvature(chart, p),
        "oracle_deltas": table_deltas(chart, p, float(s["phi"])),
        "index_convention": "c_hat[k][i][j], gamma_hat[k][i][j] (0-based); r_hat keys ijkl (1-based)",
    }
    _emit_report(report, s["report"])
    return 0


def cmd_figure(args) -> int:
    from .figures import run_figure

    checks = run_figure(args.number, args.outdir)
    _emit_report({"figure": args.number, "checks": checks}, None)
    return 0 if checks.get("passed") else 2


def _run_spec(path: str) -> int:
    try:
        spec = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: ConfigError: cannot load spec {path}: {exc}", file=sys.stderr)
        return 1
    cmd = spec.get("command") or spec.get("mode")
    mode_map = {"project": "integrate", "lift-solution": "integrate"}
    argv = [mode_map.get(cmd, cmd), "--spec", path]
    if cmd == "lift-solution":
        argv.append("--lift-solution")
    return main(argv)


def cmd_batch(args) -> int:
    codes = _map(_run_spec, [(p,) for p in args.specs], args.jobs or 1)
    for p, c in zip(args.specs, codes):
        log.info("%s -> exit %d", p, c)
    return max(codes) if codes else 0


# -- parser ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wagner", description="Geodesics of the lifted metric on a surface's frame bundle.")
    parser.add_argument("--version", action="version", version=f"wagner {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--surface", help="surface JSON file or builtin:name[:k=v,...]")
    common.add_argument("--spec", help="run spec JSON; explicit flags override it")
    common.add_argument("--C", dest="C", help="charge, or a comma-separated list")
    common.add_argument("--init", action="append", help='e.g. "u1=0,u2=0.3,angle=0.4,speed=1" (repeatable)')
    common.add_argument("--t-span", dest="t_span", help="start:end")
    common.add_argument("--method", choices=["rkf45", "rk4"])
    common.add_argument("--atol", type=float)
    common.add_argument("--rtol", type=float)
    common.add_argument("--h-init", dest="h_init", type=float)
    common.add_argument("--h-min", dest="h_min", type=float)
    common.add_argument("--h-max", dest="h_max", type=float)
    common.add_argument("--max-steps", dest="max_steps", type=int)
    common.add_argument("--no-events", dest="events", action="store_false", default=None)
    common.add_argument("--out", help="CSV output path")
    common.add_argument("--svg", help="SVG output path")
    common.add_argument("--report", help="JSON report path (stdout if omitted where applicable)")
    common.add_argument("--jobs", type=int, help="worker processes for multiple runs")

    p = sub.add_parser("integrate", parents=[common], help="integrate the projected equation")
    p.add_argument("--lift-solution", dest="lift_solution", action="store_true", default=None,
                   help="lift the projected curve to the bundle")
    p.add_argument("--phi0", type=float)
    p.set_defaults(func=cmd_integrate)

    p = sub.add_parser("lift", parents=[common], help="integrate the lifted geodesic system")
    p.add_argument("--phi", type=float)
    p.set_defaults(func=cmd_lift)

    p = sub.add_parser("invariants", parents=[common], help="first integrals and their drift")
    p.add_argument("--lifted", action="store_true", default=None)
    p.add_argument("--phi", type=float)
    p.set_defaults(func=cmd_invariants)

    p = sub.add_parser("region", parents=[common], help="curvature band confining the trajectory")
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("quadrature", parents=[common], help="trajectory graph u1(u2) by quadrature")
    p.add_argument("--u2-span", dest="u2_span")
    p.add_argument("--samples", type=int)
    p.set_defaults(func=cmd_quadrature)

    p = sub.add_parser("tables", parents=[common], help="lifted structure, connection and curvature tables")
    p.add_argument("--point", help="u1=..,u2=..")
    p.add_argument("--phi", type=float)
    p.set_defaults(func=cmd_tables)

    p = sub.add_parser("figure", help="regenerate a figure recipe (1-4)")
    p.add_argument("number", type=int, choices=[1, 2, 3, 4])
    p.add_argument("--outdir", default=".")
    p.set_defaults(func=cmd_figure)

    p = sub.add_parser("batch", help="run several spec files")
    p.add_argument("specs", nargs="+")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_batch)
    return parser


def _setup_logging() -> None:
    level = os.environ.get("WAGNER_LOG", "warn").lower()
    levels = {"error": logging.ERROR, "warn": logging.WARNING, "warning": logging.WARNING,
              "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=levels.get(level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: ConfigError: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
