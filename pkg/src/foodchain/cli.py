"""Command-line interface.

Exit codes: 0 success, 2 usage or domain error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import scenarios
from .cycles import CYCLE_CONFIG, f_condition, find_h2_cycle, floquet
from .equilibria import all_equilibria, classification_report, routh_hurwitz
from .errors import ConsistencyError, ConvergenceError, DomainError, IntegrationError, UsageError
from .integrator import IntegratorConfig, Thresholds, attracting_set_check, classify_attractor, integrate
from .model import EPS_CLASS, PARAM_NAMES, ParameterSet
from .report import dumps, envelope, write_json

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3

_INTEGRATOR_FLAGS = {
    "rtol": float, "atol": float, "max_step": float, "t_end": float, "t_transient": float, "dense_output_dt": float,
}
_THRESHOLD_FLAGS = {"delta_eq": float, "delta_z": float, "delta_osc": float, "delta_rec": float}


def g10(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.10g}"
    return str(v)


# ---------------------------------------------------------------- configuration


def _load_json(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    # accept an emitted report: its effective config sits under "config"
    if isinstance(doc, dict) and "schema" in doc and "config" in doc:
        doc = doc["config"]
    return doc


def effective_config(args) -> dict:
    """Defaults, then ``--config``, then ``--params``, then inline flags."""
    cfg = {
        "params": {},
        "integrator": IntegratorConfig().to_dict(),
        "thresholds": Thresholds().to_dict(),
        "seed": 0,
        "lambda_tolerance": EPS_CLASS,
    }
    if getattr(args, "config", None):
        doc = _load_json(args.config)
        for key in ("params", "integrator", "thresholds"):
            cfg[key].update(doc.get(key, {}))
        for key in ("seed", "lambda_tolerance"):
            if key in doc:
                cfg[key] = doc[key]
    if getattr(args, "params", None):
        doc = _load_json(args.params)
        cfg["params"].update(doc.get("params", doc))
    for name in PARAM_NAMES:
        v = getattr(args, name, None)
        if v is not None:
            cfg["params"][name] = v
    for name in _INTEGRATOR_FLAGS:
        v = getattr(args, name, None)
        if v is not None:
            cfg["integrator"][name] = v
    for name in _THRESHOLD_FLAGS:
        v = getattr(args, name, None)
        if v is not None:
            cfg["thresholds"][name] = v
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = args.seed
        cfg["integrator"]["seed"] = args.seed
    if getattr(args, "lambda_tolerance", None) is not None:
        cfg["lambda_tolerance"] = args.lambda_tolerance
    cfg["command"] = args.command
    return cfg


def _params(cfg: dict) -> ParameterSet:
    missing = [n for n in PARAM_NAMES if n not in cfg["params"]]
    if missing:
        raise UsageError("missing parameter(s): " + ", ".join("--" + n for n in missing))
    return ParameterSet.from_dict(cfg["params"])


def _integrator(cfg: dict) -> IntegratorConfig:
    try:
        return IntegratorConfig(**cfg["integrator"])
    except TypeError as exc:
        raise UsageError(f"bad integrator config: {exc}") from exc


def _thresholds(cfg: dict) -> Thresholds:
    try:
        return Thresholds(**cfg["thresholds"])
    except TypeError as exc:
        raise UsageError(f"bad thresholds config: {exc}") from exc


class Output:
    """Writes a command's JSON/CSV artifacts into ``--out`` (or stdout)."""

    def __init__(self, args, cfg: dict):
        self.out = Path(args.out) if args.out else None
        self.fmt = args.format
        self.cfg = cfg
        self.print_json = args.json

    def json(self, name: str, kind: str, payload) -> dict:
        doc = envelope(kind, payload, self.cfg)
        if self.out is not None and self.fmt in ("json", "both"):
            write_json(self.out / f"{name}.json", doc)
        if self.print_json:
            print(dumps(doc))
        return doc

    def csv(self, name: str, text: str) -> None:
        if self.out is not None and self.fmt in ("csv", "both"):
            self.out.mkdir(parents=True, exist_ok=True)
            header = "# " + json.dumps({"version": __version__, "config": self.cfg}) + "\n"
            (self.out / f"{name}.csv").write_text(header + text)

    def say(self, *lines) -> None:
        if not self.print_json:
            for line in lines:
                print(line)


def _warn_flags(flags) -> None:
    if flags:
        print("warning: near a classification boundary: " + ", ".join(flags), file=sys.stderr)


def _equilibria_table(eqs) -> list:
    lines = [f"{'kind':<9}{'x':>18}{'y':>18}{'z':>18}  stability"]
    for e in eqs:
        e = e if isinstance(e, dict) else e.to_dict()
        x, y, z = (g10(c) for c in e["coords"])
        lines.append(f"{e['kind']:<9}{x:>18}{y:>18}{z:>18}  {e['stability']}")
    return lines


# ---------------------------------------------------------------- commands


def cmd_classify(args, cfg, out: Output) -> int:
    p = _params(cfg)
    rep = classification_report(p, cfg["lambda_tolerance"])
    out.json("classify", "classify", rep)
    out.say(
        f"lambda1          {g10(rep['lambda1'])}",
        f"lambda2          {g10(rep['lambda2'])}",
        f"p(lambda1)       {g10(rep['p_lambda1'])}",
        f"(1-a1)/2         {g10(rep['hopf_threshold'])}",
        f"(1+a1)^2/4       {g10(rep['p_max'])}",
        f"case             {rep['label']}",
        f"known result     {rep['known_result']}",
    )
    for note in rep["notes"]:
        out.say(f"note             {note}")
    out.say("", *_equilibria_table(rep["equilibria"]))
    _warn_flags(rep["boundary_flags"])
    return EXIT_OK


def cmd_equilibria(args, cfg, out: Output) -> int:
    p = _params(cfg)
    eqs = all_equilibria(p, cfg["lambda_tolerance"])
    out.json("equilibria", "equilibria", {"params": p, "equilibria": eqs})
    out.say(*_equilibria_table(eqs))
    for e in eqs:
        if e.kind == "Interior":
            rh = e.rh or routh_hurwitz(p, e)
            out.say(f"RH at x={g10(e.coords[0])}: b2={g10(rh.b2)} b1={g10(rh.b1)} b0={g10(rh.b0)} "
                    f"b2*b1-b0={g10(rh.hurwitz_margin)} -> {'stable' if rh.stable else 'unstable'}")
    return EXIT_OK


def _initial(args) -> np.ndarray:
    try:
        s0 = np.array([float(v) for v in args.initial.split(",")])
    except ValueError as exc:
        raise UsageError(f"--initial must be x,y,z: {exc}") from exc
    if s0.shape != (3,):
        raise UsageError("--initial must have three components")
    if np.any(s0 < 0):
        raise DomainError(f"initial state must be nonnegative, got {s0.tolist()}")
    return s0


def cmd_simulate(args, cfg, out: Output) -> int:
    p = _params(cfg)
    s0 = _initial(args)
    cfg["options"] = {"initial": s0.tolist()}
    ic = _integrator(cfg)
    try:
        tr = integrate(p, s0, ic)
    except IntegrationError as exc:
        if out.out is not None and exc.partial is not None:
            out.out.mkdir(parents=True, exist_ok=True)
            exc.partial.to_csv(out.out / "trajectory_partial.csv")
        raise
    verdict = classify_attractor(tr, all_equilibria(p, cfg["lambda_tolerance"]), _thresholds(cfg))
    inside, entry = attracting_set_check(tr, p)
    if out.out is not None and out.fmt in ("csv", "both"):
        out.out.mkdir(parents=True, exist_ok=True)
        tr.to_csv(out.out / "trajectory.csv")
    out.json("verdict", "simulate", {
        "verdict": verdict,
        "attracting_set": {"tail_inside": inside, "first_entry_time": entry},
        "n_steps": tr.n_steps,
        "final_state": tr.states[-1],
    })
    out.say(f"verdict          {verdict.kind}")
    if verdict.target is not None:
        tgt = verdict.target
        if hasattr(tgt, "coords"):
            out.say(f"target           {tgt.kind} ({', '.join(g10(c) for c in tgt.coords)})")
        else:
            out.say(f"period           {g10(tgt.period)}", f"y range          [{g10(tgt.y_min)}, {g10(tgt.y_max)}]")
    out.say(f"final state      ({', '.join(g10(c) for c in tr.states[-1])})")
    return EXIT_OK


def cmd_cycle(args, cfg, out: Output) -> int:
    p = _params(cfg)
    c = find_h2_cycle(p, CYCLE_CONFIG, delta_cycle=args.delta_cycle)
    cfg["options"] = {"delta_cycle": args.delta_cycle, "cycle_integrator": CYCLE_CONFIG.to_dict()}
    out.json("cycle", "cycle", c)
    if out.out is not None and out.fmt in ("csv", "both"):
        rows = "\n".join(",".join(repr(float(v)) for v in (t, *s)) for t, s in zip(c.times, c.samples))
        out.csv("cycle", "t,x,y,z\n" + rows + "\n")
    out.say(f"period           {g10(c.period)}", f"y_max            {g10(c.y_max)}",
            f"y_min            {g10(c.y_min)}", f"returns          {c.n_returns}",
            f"residual         {g10(c.convergence_residual)}")
    return EXIT_OK


def cmd_floquet(args, cfg, out: Output) -> int:
    p = _params(cfg)
    c = find_h2_cycle(p, CYCLE_CONFIG, delta_cycle=args.delta_cycle)
    fl = floquet(p, c, CYCLE_CONFIG)
    cfg["options"] = {"delta_cycle": args.delta_cycle, "cycle_integrator": CYCLE_CONFIG.to_dict()}
    payload = {"cycle": c, "floquet": fl}
    try:
        payload["f_condition"] = f_condition(p)
    except DomainError:
        payload["f_condition"] = None
    out.json("floquet", "floquet", payload)
    out.say(f"period               {g10(c.period)}",
            "multipliers          " + ", ".join(g10(abs(m)) for m in fl.multipliers),
            f"M33                  {g10(fl.m33)}",
            f"M33 closed form      {g10(fl.m33_closed_form)}",
            f"transversal average  {g10(fl.transversal_average)}",
            f"stable in R3         {fl.stable_in_R3}")
    return EXIT_OK


def cmd_sweep(args, cfg, out: Output) -> int:
    if not cfg["params"]:
        # no parameters given: sweep around the three-value m2 experiment
        cfg["params"] = scenarios.M2_EXPERIMENT_BASE.to_dict()
    p = _params(cfg)
    s0 = _initial(args)
    cfg["options"] = {"param": args.param, "from": args.lo, "to": args.hi, "step": args.step,
                      "initial": s0.tolist()}
    res = scenarios.sweep(p, args.param, args.lo, args.hi, args.step, _integrator(cfg), _thresholds(cfg), s0)
    out.json("sweep", "sweep", res)
    out.csv("sweep", res.summary_csv())
    out.csv("bifurcation", res.bifurcation_csv())
    out.say(f"records          {len(res.records)}")
    for a, b, ca, cb in res.transitions():
        out.say(f"transition       {ca} -> {cb} between {g10(a)} and {g10(b)}")
    return EXIT_OK


def cmd_basin(args, cfg, out: Output) -> int:
    p = _params(cfg)
    grid = scenarios.default_grid(p, args.grid_n)
    seeds = [tuple(float(v) for v in s.split(",")) for s in (args.seed_point or [])]
    cfg["options"] = {"grid_n": args.grid_n, "seed_points": seeds}
    bm = scenarios.basin_sample(p, grid, _integrator(cfg), _thresholds(cfg), extra_seeds=seeds)
    out.json("basin", "basin", bm)
    out.csv("basin", bm.to_csv())
    out.say(f"verdict          {bm.verdict}")
    for k, v in bm.counts().items():
        out.say(f"  {k:<24}{v}")
    return EXIT_OK


def cmd_lyapunov(args, cfg, out: Output) -> int:
    p = _params(cfg)
    s0 = _initial(args)
    lc = scenarios.LyapunovConfig(t_average=args.t_average, t_discard=args.t_discard, tau=args.tau,
                                  seed=cfg["seed"])
    cfg["options"] = {"initial": s0.tolist(), "lyapunov": lc.to_dict()}
    est = scenarios.lyapunov_exponent(p, s0, lc)
    out.json("lyapunov", "lyapunov", est)
    out.say(f"lambda_max       {g10(est.value)}", f"sigma            {g10(est.sigma)}",
            f"verdict          {est.verdict}")
    return EXIT_OK


def cmd_probe(args, cfg, out: Output) -> int:
    p = _params(cfg)
    cfg["options"] = {"n": args.n}
    res = scenarios.global_stability_probe(p, args.n, _integrator(cfg), _thresholds(cfg), seed=cfg["seed"])
    out.json("probe", "probe", res)
    out.say(f"case             {res.case}", f"predicted        {res.predicted}",
            f"fraction         {g10(res.fraction)}", f"counterexamples  {len(res.counterexamples)}")
    return EXIT_OK


def cmd_reproduce(args, cfg, out: Output) -> int:
    out.fmt = "both" if out.fmt is None else out.fmt
    if out.out is None:
        out.out = Path(f"reproduce-{args.experiment}")
    cfg["options"] = {"experiment": args.experiment}
    if args.experiment == "table3":
        rep = scenarios.run_literature_rows()
        out.json("report", "reproduce-table3", rep)
        for r in rep["rows"]:
            out.say(f"{r['name']:<10} m1={g10(r['params']['m1'])} m2={g10(r['params']['m2'])} "
                    f"a1={g10(r['params']['a1'])} a2={g10(r['params']['a2'])} -> {r['case']} "
                    f"(exact rescaling: {r['exact_rescaling']['case']})")
    elif args.experiment == "table2":
        rep = scenarios.run_m2_experiment(_integrator(cfg), _thresholds(cfg))
        out.json("report", "reproduce-table2", rep)
        for c in rep["cases"]:
            out.csv(f"basin_m2_{c['m2']}", c["basin"].to_csv())
            out.say(f"m2={c['m2']:<6} lambda2={g10(c['lambda2'])} case={c['classification']['label']} "
                    f"transversal={g10(c['floquet'].transversal_average)} basin={c['basin'].verdict}")
        cr = rep["crossings"]
        out.say(f"lambda2 = p_max at m2 = {g10(cr['lambda2_eq_p_max'])}",
                f"lambda2 = p(lambda1) at m2 = {g10(cr['lambda2_eq_p_lambda1'])}")
    else:
        rep = scenarios.run_cycle_gas(args.n, _integrator(cfg), seed=cfg["seed"])
        out.json("report", "reproduce-cycle-gas", rep)
        out.say(f"f-condition lhs={g10(rep['f_condition'].lhs)} rhs={g10(rep['f_condition'].rhs)}",
                f"period={g10(rep['cycle'].period)} transversal={g10(rep['floquet'].transversal_average)}",
                f"probe fraction={g10(rep['probe'].fraction)} of {rep['probe'].n}")
    out.say(f"report written to {out.out}")
    return EXIT_OK


# ---------------------------------------------------------------- parser


def _add_common(sp, params: bool = True, integ: bool = True) -> None:
    g = sp.add_argument_group("parameters")
    if params:
        for name in PARAM_NAMES:
            g.add_argument(f"--{name}", type=float, default=None)
        g.add_argument("--params", metavar="FILE", help="JSON file with the six parameters")
    sp.add_argument("--config", metavar="FILE", help="JSON config (or an emitted report) to start from")
    sp.add_argument("--lambda-tolerance", type=float, default=None, dest="lambda_tolerance",
                    help="tie band for classification comparisons")
    sp.add_argument("--out", metavar="DIR", help="directory for JSON/CSV artifacts")
    sp.add_argument("--format", choices=("json", "csv", "both"), default="both")
    sp.add_argument("--json", action="store_true", help="print the JSON report to stdout")
    sp.add_argument("--seed", type=int, default=None)
    if integ:
        gi = sp.add_argument_group("integration")
        for name, typ in _INTEGRATOR_FLAGS.items():
            gi.add_argument("--" + name.replace("_", "-"), type=typ, default=None, dest=name)
        for name, typ in _THRESHOLD_FLAGS.items():
            gi.add_argument("--" + name.replace("_", "-"), type=typ, default=None, dest=name)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="foodchain", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"foodchain {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("classify", help="break-even densities, case label and equilibria")
    _add_common(sp, integ=False)
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("equilibria", help="all equilibria with Routh-Hurwitz records")
    _add_common(sp, integ=False)
    sp.set_defaults(func=cmd_equilibria)

    sp = sub.add_parser("simulate", help="integrate one trajectory and classify its attractor")
    _add_common(sp)
    sp.add_argument("--initial", required=True, metavar="X,Y,Z")
    sp.set_defaults(func=cmd_simulate)

    for name, fn, hlp in (("cycle", cmd_cycle, "planar limit cycle"),
                          ("floquet", cmd_floquet, "Floquet multipliers of the planar cycle")):
        sp = sub.add_parser(name, help=hlp)
        _add_common(sp, integ=False)
        sp.add_argument("--delta-cycle", type=float, default=1e-9, dest="delta_cycle")
        sp.set_defaults(func=fn)

    sp = sub.add_parser("sweep", help="vary one parameter on a grid")
    _add_common(sp)
    sp.add_argument("--param", required=True, choices=PARAM_NAMES)
    sp.add_argument("--from", type=float, required=True, dest="lo")
    sp.add_argument("--to", type=float, required=True, dest="hi")
    sp.add_argument("--step", type=float, required=True)
    sp.add_argument("--initial", default=",".join(str(v) for v in scenarios.CANONICAL_STATE), metavar="X,Y,Z")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("basin", help="sample initial states and detect bistability")
    _add_common(sp)
    sp.add_argument("--grid-n", type=int, default=5, dest="grid_n")
    sp.add_argument("--seed-point", action="append", metavar="X,Y,Z", dest="seed_point")
    sp.set_defaults(func=cmd_basin)

    sp = sub.add_parser("lyapunov", help="largest Lyapunov exponent")
    _add_common(sp, integ=False)
    sp.add_argument("--initial", required=True, metavar="X,Y,Z")
    sp.add_argument("--t-average", type=float, default=1e5, dest="t_average")
    sp.add_argument("--t-discard", type=float, default=2000.0, dest="t_discard")
    sp.add_argument("--tau", type=float, default=0.5)
    sp.set_defaults(func=cmd_lyapunov)

    sp = sub.add_parser("probe", help="random-start check of a proved global attractor")
    _add_common(sp)
    sp.add_argument("--n", type=int, default=125)
    sp.set_defaults(func=cmd_probe)

    sp = sub.add_parser("reproduce", help="run a named experiment into a report directory")
    sp.add_argument("experiment", choices=("table2", "table3", "hsu-gas", "cycle-gas"),
                    help="hsu-gas and cycle-gas are the same experiment")
    sp.add_argument("--n", type=int, default=125, help="random starts for the cycle experiment")
    _add_common(sp, params=False)
    sp.set_defaults(func=cmd_reproduce)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = effective_config(args)
        out = Output(args, cfg)
        return args.func(args, cfg, out)
    except (UsageError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (IntegrationError, ConvergenceError, ConsistencyError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
