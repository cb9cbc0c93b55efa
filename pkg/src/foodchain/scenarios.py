"""Experiment drivers: fixed experiments, parameter sweeps, basins, chaos and global-stability probes."""

from __future__ import annotations

import io
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .cycles import CYCLE_CONFIG, f_condition, find_h2_cycle, floquet
from .equilibria import (
    all_equilibria,
    classification_report,
    classify,
    interior_equilibria,
)
from .errors import DomainError, IntegrationError, NoCyclePredicted, UsageError
from .integrator import (
    AttractorVerdict,
    IntegratorConfig,
    Thresholds,
    attracting_set_bounds,
    classify_attractor,
    in_attracting_set,
    integrate,
)
from .model import PARAM_NAMES, ParameterSet, derived, hp_convert, hp_convert_exact

#: Fixed in-plane parameters of the m2 experiments.
M2_EXPERIMENT_BASE = ParameterSet(a1=0.3, a2=0.9, d1=0.4, d2=0.01, m1=5.0 / 3.0, m2=0.033)
M2_VALUES = (0.033, 0.042, 0.065)
#: Planar-cycle case whose top predator provably dies out.
CYCLE_GAS_SET = ParameterSet(a1=0.24, a2=0.4, d1=0.3, d2=0.39, m1=0.5, m2=0.4)
#: Seeds straddling the two attractors at m2 = 0.033.
BISTABLE_SEEDS_033 = ((0.5266, 0.3913, 0.8546), (0.1734, 0.3913, 0.2717))

#: Literature rows written with ``a_i u / (1 + b_i u)`` responses: (a1, b1, a2, b2, d1, d2).
LITERATURE_ROWS = {
    "Hogeweg": (1.81, 4.5, 0.181, 0.45, 0.16, 0.08),
    "Scheffer": (8.0, 6.66, 2.88, 2.4, 0.87, 0.25),
    "Hastings": (5.0, 4.0, 0.1, 2.0, 0.4, 0.01),
}

CANONICAL_STATE = (0.5, 0.5, 0.5)
BISTABILITY_VERDICTS = ("monostable", "point_cycle", "cycle_cycle", "undetermined")
_EQ_KINDS = ("equilibrium", "z_extinct_equilibrium")


def m2_for_lambda2(p: ParameterSet, lambda2: float) -> float:
    """The ``m2`` at which ``a2 d2 / (m2 - d2)`` equals ``lambda2``."""
    if not lambda2 > 0:
        raise DomainError("target lambda2 must be positive")
    return p.d2 + p.a2 * p.d2 / lambda2


# ---------------------------------------------------------------- basins


@dataclass
class BasinMap:
    grid: np.ndarray
    labels: np.ndarray
    registry: list
    verdict: str
    verdicts: list = field(default_factory=list)

    def counts(self) -> dict:
        out = {"undetermined": int(np.sum(self.labels < 0))}
        for i, a in enumerate(self.registry):
            out[f"{i}:{a.kind}"] = int(np.sum(self.labels == i))
        return out

    def label_names(self) -> list:
        return ["undetermined" if k < 0 else f"{k}:{self.registry[k].kind}" for k in self.labels]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("x0,y0,z0,label\n")
        for s, name in zip(self.grid, self.label_names()):
            buf.write(f"{s[0]!r},{s[1]!r},{s[2]!r},{name}\n")
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "registry": [a.to_dict() for a in self.registry],
            "counts": self.counts(),
            "points": [
                {"initial": s.tolist(), "label": int(k), "kind": v.kind}
                for s, k, v in zip(self.grid, self.labels, self.verdicts)
            ],
        }


def default_grid(p: ParameterSet, n: int = 5) -> np.ndarray:
    """``n^3`` log-spaced starts, restricted to the attracting set."""
    xs = np.geomspace(1e-3, 1.0, n)
    ys = np.geomspace(1e-3, 1.6, n)
    zs = np.geomspace(1e-3, 1.0, n)
    g = np.array(np.meshgrid(xs, ys, zs, indexing="ij")).reshape(3, -1).T
    return g[in_attracting_set(p, g, tol=0.0)]


def _same_attractor(a: AttractorVerdict, b: AttractorVerdict, th: Thresholds) -> bool:
    if a.kind != b.kind:
        return False
    if a.kind in _EQ_KINDS:
        return bool(np.max(np.abs(a.target.state - b.target.state)) < th.delta_eq)
    ra, rb = a.target, b.target

    def close(u, v):
        return abs(u - v) <= 0.01 * max(abs(u), abs(v))

    return close(ra.period, rb.period) and close(ra.y_amplitude, rb.y_amplitude)


def bistability_verdict(registry) -> str:
    kinds = [a.kind for a in registry]
    if not kinds:
        return "undetermined"
    if len(kinds) == 1:
        return "monostable"
    if "equilibrium" in kinds and "boundary_cycle" in kinds:
        return "point_cycle"
    if "interior_cycle" in kinds and "boundary_cycle" in kinds:
        return "cycle_cycle"
    return "undetermined"


def classify_start(p: ParameterSet, s0, cfg: IntegratorConfig, th: Thresholds, eqs=None) -> AttractorVerdict:
    """Integrate from ``s0`` and classify the tail; failures become undetermined."""
    eqs = all_equilibria(p) if eqs is None else eqs
    try:
        tr = integrate(p, s0, cfg)
    except IntegrationError as exc:
        return AttractorVerdict("chaotic_or_undetermined", None, {"reason": str(exc)})
    return classify_attractor(tr, eqs, th)


def basin_sample(
    p: ParameterSet,
    grid=None,
    cfg: IntegratorConfig = IntegratorConfig(),
    th: Thresholds = Thresholds(),
    extra_seeds=(),
) -> BasinMap:
    """Integrate from every start, deduplicate attractors and judge bistability."""
    g = default_grid(p) if grid is None else np.atleast_2d(np.asarray(grid, dtype=float))
    if len(extra_seeds):
        g = np.vstack([g, np.atleast_2d(np.asarray(extra_seeds, dtype=float))])
    if g.size == 0:
        raise UsageError("basin grid is empty")
    if g.shape[1] != 3 or np.any(g <= 0):
        raise DomainError("basin grid points must lie in the open positive octant")
    eqs = all_equilibria(p)
    registry: list = []
    labels = np.full(len(g), -1, dtype=int)
    verdicts = []
    for i, s0 in enumerate(g):
        v = classify_start(p, s0, cfg, th, eqs)
        verdicts.append(v)
        if v.kind == "chaotic_or_undetermined":
            continue
        for k, a in enumerate(registry):
            if _same_attractor(a, v, th):
                labels[i] = k
                break
        else:
            registry.append(v)
            labels[i] = len(registry) - 1
    return BasinMap(g, labels, registry, bistability_verdict(registry), verdicts)


# ---------------------------------------------------------------- sweeps


@dataclass
class SweepRecord:
    value: float
    lambda2: Optional[float]
    case: str
    interior: list
    transversal_average: Optional[float]
    attractor: AttractorVerdict
    y_min: float
    y_max: float
    y_peaks: np.ndarray

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "lambda2": self.lambda2,
            "case": self.case,
            "interior_equilibria": [e.to_dict() for e in self.interior],
            "transversal_average": self.transversal_average,
            "attractor": self.attractor.to_dict(),
            "y_min": self.y_min,
            "y_max": self.y_max,
            "n_y_peaks": int(len(self.y_peaks)),
        }


@dataclass
class SweepResult:
    name: str
    values: np.ndarray
    records: list
    base: ParameterSet
    initial_state: tuple

    def transitions(self) -> list:
        """``(value_before, value_after, case_before, case_after)`` where the case changes."""
        out = []
        for a, b in zip(self.records[:-1], self.records[1:]):
            if a.case != b.case:
                out.append((a.value, b.value, a.case, b.case))
        return out

    def summary_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"{self.name},lambda2,case,n_interior,n_stable_interior,transversal_average,"
                  "verdict,period,y_min,y_max\n")
        for r in self.records:
            n_st = sum(1 for e in r.interior if e.stability == "stable")
            period = r.attractor.diagnostics.get("period", "")
            cells = [r.value, r.lambda2, r.case, len(r.interior), n_st, r.transversal_average,
                     r.attractor.kind, period, r.y_min, r.y_max]
            buf.write(",".join("" if c is None else (repr(float(c)) if isinstance(c, float) else str(c))
                               for c in cells) + "\n")
        return buf.getvalue()

    def bifurcation_csv(self) -> str:
        """Tail local maxima of ``y`` against the swept value."""
        buf = io.StringIO()
        buf.write(f"{self.name},y_peak\n")
        for r in self.records:
            peaks = r.y_peaks if len(r.y_peaks) else np.array([r.y_max])
            for yp in peaks:
                buf.write(f"{r.value!r},{float(yp)!r}\n")
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "parameter": self.name,
            "base_params": self.base.to_dict(),
            "initial_state": list(self.initial_state),
            "n_records": len(self.records),
            "transitions": [
                {"between": [a, b], "from": ca, "to": cb} for a, b, ca, cb in self.transitions()
            ],
            "records": [r.to_dict() for r in self.records],
        }


def sweep_values(lo: float, hi: float, step: float) -> np.ndarray:
    """``lo, lo + step, ...`` up to and including ``hi`` (to rounding)."""
    if not (lo < hi and step > 0):
        raise UsageError("sweep needs lo < hi and step > 0")
    n = int(np.floor((hi - lo) / step + 1e-9))
    # rounding keeps 0.02 + 16 * 0.001 printing as 0.036
    return np.round(lo + step * np.arange(n + 1), 12)


def _tail_peaks(y: np.ndarray) -> np.ndarray:
    inner = (y[1:-1] > y[:-2]) & (y[1:-1] >= y[2:])
    return y[1:-1][inner]


def sweep(
    p: ParameterSet,
    name: str,
    lo: float,
    hi: float,
    step: float,
    cfg: IntegratorConfig = IntegratorConfig(),
    th: Thresholds = Thresholds(),
    s0=CANONICAL_STATE,
    max_peaks: int = 200,
) -> SweepResult:
    """Classify, analyse and simulate at every value of one parameter."""
    if name not in PARAM_NAMES:
        raise UsageError(f"unknown parameter {name!r}; expected one of {PARAM_NAMES}")
    values = sweep_values(lo, hi, step)
    cycle_cache: dict = {}
    records = []
    for v in values:
        q = p.replace(**{name: float(v)})
        dp = derived(q)
        case = classify(q)
        interior = interior_equilibria(q)
        key = (q.a1, q.d1, q.m1)
        if key not in cycle_cache:
            try:
                cycle_cache[key] = find_h2_cycle(q)
            except NoCyclePredicted:
                cycle_cache[key] = None
        cyc = cycle_cache[key]
        trans = None
        if cyc is not None and dp.lambda2 is not None:
            trans = floquet(q, cyc).transversal_average
        try:
            tr = integrate(q, s0, cfg)
        except IntegrationError as exc:
            verdict = AttractorVerdict("chaotic_or_undetermined", None, {"reason": str(exc)})
            y_min = y_max = float("nan")
            peaks = np.empty(0)
        else:
            verdict = classify_attractor(tr, all_equilibria(q), th)
            y = tr.tail()[1][:, 1]
            y_min, y_max, peaks = float(y.min()), float(y.max()), _tail_peaks(y)[-max_peaks:]
        records.append(SweepRecord(float(v), dp.lambda2, case.label, interior, trans, verdict,
                                   y_min, y_max, peaks))
    return SweepResult(name, values, records, p, tuple(float(c) for c in s0))


# ---------------------------------------------------------------- Lyapunov


@dataclass(frozen=True)
class LyapunovConfig:
    tau: float = 0.5
    t_discard: float = 2000.0
    t_average: float = 1e5
    rtol: float = 1e-9
    atol: float = 1e-12
    max_step: float = 1.0
    zero_tol: float = 1e-5
    seed: int = 0

    def __post_init__(self):
        if not (self.tau > 0 and self.t_average > self.tau and self.t_discard >= 0):
            raise UsageError("need tau > 0, t_average > tau and t_discard >= 0")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class LyapunovEstimate:
    value: float
    interval: float
    history: np.ndarray
    sigma: float
    verdict: str
    final_state: np.ndarray
    config: LyapunovConfig

    def to_dict(self) -> dict:
        return {
            "lambda_max": self.value,
            "renormalization_interval": self.interval,
            "sigma": self.sigma,
            "verdict": self.verdict,
            "final_state": self.final_state.tolist(),
            "history_every_1000": self.history[:: max(1, int(round(1000 / self.interval)))].tolist(),
            "config": self.config.to_dict(),
        }


def lyapunov_verdict(value: float, sigma: float, zero_tol: float) -> str:
    band = max(3.0 * sigma, zero_tol)
    if value > band:
        return "positive"
    if value < -band:
        return "negative"
    return "near_zero"


def lyapunov_exponent(p: ParameterSet, s0, cfg: LyapunovConfig = LyapunovConfig()) -> LyapunovEstimate:
    """Largest exponent by tangent-vector renormalization every ``cfg.tau``.

    ``sigma`` is the standard deviation of the running estimate over the
    second half of the averaging window.
    """
    s0 = np.asarray(s0, dtype=float)
    if s0.shape != (3,) or np.any(s0 < 0):
        raise DomainError("initial state must be three nonnegative numbers")
    rng = np.random.default_rng(cfg.seed)
    v = rng.standard_normal(3)
    v /= np.linalg.norm(v)
    y0 = np.concatenate([s0, v])
    hist, y, status = _kernels.lyapunov(
        y0, p.as_array(), cfg.t_discard, cfg.t_discard + cfg.t_average, cfg.tau, cfg.rtol,
        np.full(6, cfg.atol), cfg.max_step,
    )
    if status != _kernels.STATUS_OK or not np.all(np.isfinite(hist)):
        raise IntegrationError(f"base trajectory failed (status {status})")
    final = y[:3].copy()
    if not in_attracting_set(p, final, tol=1e-6)[0]:
        raise IntegrationError("base trajectory left the attracting set")
    value = float(hist[-1])
    sigma = float(np.std(hist[len(hist) // 2 :]))
    return LyapunovEstimate(value, cfg.tau, hist, sigma, lyapunov_verdict(value, sigma, cfg.zero_tol),
                            final, cfg)


# ---------------------------------------------------------------- global stability probes


@dataclass
class ProbeResult:
    case: str
    predicted: str
    n: int
    fraction: float
    counterexamples: list
    seed: int
    max_tail_z: float

    def to_dict(self) -> dict:
        return asdict(self)


_PROVED = {
    "I": "Ex",
    "II.1.a": "Exy",
    "II.2.a.i": "Exy",
    "II.2.b.i": "boundary_cycle",
}


def random_attracting_states(p: ParameterSet, n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform samples from the attracting set (rejection from its bounding box)."""
    bx, bxy, bxyz = attracting_set_bounds(p)
    out = []
    while len(out) < n:
        s = rng.uniform(0.0, 1.0, size=(4 * n, 3)) * np.array([bx, bxy, bxyz])
        s = s[np.all(s > 0, axis=1) & in_attracting_set(p, s, tol=0.0)]
        out.extend(s[: n - len(out)])
    return np.array(out)


def global_stability_probe(
    p: ParameterSet,
    n: int = 125,
    cfg: IntegratorConfig = IntegratorConfig(),
    th: Thresholds = Thresholds(),
    seed: int = 0,
) -> ProbeResult:
    """Check that random starts reach the attractor a global result predicts."""
    case = classify(p)
    if case.label not in _PROVED:
        raise UsageError(f"case {case.label} has no proved global attractor")
    predicted = _PROVED[case.label]
    cycle = None
    if predicted == "boundary_cycle":
        cycle = find_h2_cycle(p)
        fl = floquet(p, cycle)
        fc = f_condition(p)
        if not (fl.transversal_average < 0 and fc.holds):
            raise UsageError(
                f"case {case.label}: global premises fail (transversal_average={fl.transversal_average:.6g}, "
                f"f-condition holds={fc.holds})"
            )
    rng = np.random.default_rng(seed)
    starts = random_attracting_states(p, n, rng)
    eqs = all_equilibria(p)
    bad = []
    max_z = 0.0
    for s0 in starts:
        v = classify_start(p, s0, cfg, th, eqs)
        max_z = max(max_z, float(v.diagnostics.get("tail_max_z", np.inf)))
        if not _matches(v, predicted, cycle):
            bad.append({"initial": s0.tolist(), "verdict": v.to_dict()})
    return ProbeResult(case.label, predicted, n, 1.0 - len(bad) / n, bad, seed, max_z)


def _matches(v: AttractorVerdict, predicted: str, cycle) -> bool:
    if predicted in ("Ex", "Exy"):
        return v.kind == "z_extinct_equilibrium" and v.target.kind == predicted
    if v.kind != "boundary_cycle":
        return False
    ref = v.target
    amp = cycle.y_max - cycle.y_min
    return abs(ref.period - cycle.period) <= 0.01 * cycle.period and abs(ref.y_amplitude - amp) <= 0.01 * amp


# ---------------------------------------------------------------- fixed experiments


def _seed_near(state, rel: float = 0.01) -> tuple:
    return tuple(float(c) * (1.0 + rel) for c in state)


def m2_case(m2: float, cfg: IntegratorConfig = IntegratorConfig(), th: Thresholds = Thresholds(),
                grid=None, cycle=None) -> dict:
    """Everything reported for one ``m2`` of the three-value table."""
    p = M2_EXPERIMENT_BASE.replace(m2=m2)
    cls = classification_report(p)
    cycle = find_h2_cycle(p) if cycle is None else cycle
    fl = floquet(p, cycle)
    interior = interior_equilibria(p)
    if m2 == 0.033:
        seeds = list(BISTABLE_SEEDS_033)
    else:
        seeds = [_seed_near(e.coords) for e in interior]
    # lift the cycle's section point slightly off the z = 0 face
    seeds.append((float(cycle.samples[0, 0]), float(cycle.samples[0, 1]), 1e-3))
    basin = basin_sample(p, grid, cfg, th, extra_seeds=seeds)
    n_seed = len(seeds)
    seed_verdicts = [
        {"initial": list(s), "kind": v.kind, "label": int(k)}
        for s, v, k in zip(seeds, basin.verdicts[-n_seed:], basin.labels[-n_seed:])
    ]
    return {
        "m2": m2,
        "params": p.to_dict(),
        "lambda2": derived(p).lambda2,
        "classification": cls,
        "cycle": cycle,
        "floquet": fl,
        "basin": basin,
        "seed_verdicts": seed_verdicts,
    }


def run_m2_experiment(cfg: IntegratorConfig = IntegratorConfig(), th: Thresholds = Thresholds(), grid=None) -> dict:
    """The three-value ``m2`` table with basins and threshold crossings."""
    base = M2_EXPERIMENT_BASE
    dp = derived(base)
    cycle = find_h2_cycle(base, CYCLE_CONFIG)
    cases = [m2_case(m2, cfg, th, grid, cycle) for m2 in M2_VALUES]
    crossings = {
        "lambda2_eq_p_max": m2_for_lambda2(base, dp.p_max),
        "lambda2_eq_p_lambda1": m2_for_lambda2(base, dp.p_of_lambda1),
    }
    return {
        "base_params": {k: v for k, v in base.to_dict().items() if k != "m2"},
        "lambda1": dp.lambda1,
        "p_lambda1": dp.p_of_lambda1,
        "p_max": dp.p_max,
        "hopf_threshold": dp.hopf_threshold,
        "crossings": crossings,
        "cases": cases,
    }


def run_literature_rows() -> dict:
    """Literature parameter rows converted and classified."""
    rows = []
    for name, raw in LITERATURE_ROWS.items():
        p = hp_convert(*raw)
        q = hp_convert_exact(*raw)
        dp = derived(p)
        rows.append({
            "name": name,
            "raw": dict(zip(("a1", "b1", "a2", "b2", "d1", "d2"), raw)),
            "params": p.to_dict(),
            "lambda1": dp.lambda1,
            "lambda2": dp.lambda2,
            "p_lambda1": dp.p_of_lambda1,
            "p_max": dp.p_max,
            "case": classify(p).label,
            "exact_rescaling": {"params": q.to_dict(), "case": classify(q).label},
        })
    return {"rows": rows, "all_II.2.b.iv": all(r["case"] == "II.2.b.iv" for r in rows)}


def run_cycle_gas(n: int = 125, cfg: IntegratorConfig = IntegratorConfig(), seed: int = 0) -> dict:
    """Planar-cycle global stability check on the extinction parameter set."""
    p = CYCLE_GAS_SET
    dp = derived(p)
    cycle = find_h2_cycle(p)
    fl = floquet(p, cycle)
    probe = global_stability_probe(p, n, cfg, seed=seed)
    return {
        "params": p.to_dict(),
        "lambda1": dp.lambda1,
        "lambda2": dp.lambda2,
        "hopf_threshold": dp.hopf_threshold,
        "f_condition": f_condition(p),
        "cycle": cycle,
        "floquet": fl,
        "probe": probe,
    }


__all__ = [
    "BISTABILITY_VERDICTS",
    "BasinMap",
    "CYCLE_GAS_SET",
    "LyapunovConfig",
    "LyapunovEstimate",
    "ProbeResult",
    "M2_EXPERIMENT_BASE",
    "SweepResult",
    "basin_sample",
    "default_grid",
    "global_stability_probe",
    "lyapunov_exponent",
    "m2_for_lambda2",
    "run_cycle_gas",
    "run_m2_experiment",
    "run_literature_rows",
    "sweep",
]
