"""Adaptive integration, trajectory storage and attractor classification."""

from __future__ import annotations

import io
import json
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .equilibria import Equilibrium
from .errors import DomainError, IntegrationError, UsageError
from .model import EPS_NEG, ParameterSet, derived

SECTION_X = "x=lambda1 up"
SECTION_Y = "y=lambda2 up"

_MAX_STEPS = 200_000_000
_SECTION_CAP = 1_000_000


@dataclass(frozen=True)
class IntegratorConfig:
    rtol: float = 1e-9
    atol: float = 1e-12
    max_step: float = 1.0
    t_end: float = 20000.0
    t_transient: float = 5000.0
    dense_output_dt: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise UsageError("rtol and atol must be positive")
        if not (0 <= self.t_transient < self.t_end):
            raise UsageError("need 0 <= t_transient < t_end")
        if not (self.max_step > 0 and self.dense_output_dt > 0):
            raise UsageError("max_step and dense_output_dt must be positive")

    def replace(self, **changes) -> "IntegratorConfig":
        return IntegratorConfig(**{**asdict(self), **changes})

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Thresholds:
    """Tolerances behind every attractor verdict (reported with it)."""

    delta_eq: float = 1e-5
    delta_z: float = 1e-4
    delta_osc: float = 1e-3
    delta_rec: float = 1e-4
    max_section_period: int = 16

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    params: ParameterSet
    initial: np.ndarray
    config: IntegratorConfig
    crossings: dict = field(default_factory=dict)
    n_steps: int = 0

    @property
    def events(self) -> list:
        """``(time, tag)`` pairs for every recorded section crossing, time-ordered."""
        ev = [(float(t), tag) for tag, (ts, _) in self.crossings.items() for t in ts]
        return sorted(ev)

    def tail(self, t_from: Optional[float] = None):
        t_from = self.config.t_transient if t_from is None else t_from
        mask = self.times >= t_from
        return self.times[mask], self.states[mask]

    def section(self, tag: str, t_from: float = -np.inf):
        ts, ys = self.crossings.get(tag, (np.empty(0), np.empty((0, 3))))
        mask = ts >= t_from
        return ts[mask], ys[mask]

    def provenance(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "initial_state": [float(v) for v in self.initial],
            "integrator": self.config.to_dict(),
        }

    def to_csv(self, path=None) -> str:
        """``t,x,y,z`` CSV with ``#``-prefixed JSON provenance lines."""
        buf = io.StringIO()
        buf.write("# " + json.dumps(self.provenance()) + "\n")
        buf.write("t,x,y,z\n")
        np.savetxt(buf, np.column_stack([self.times, self.states]), delimiter=",", fmt="%.17g")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def read_trajectory_csv(path) -> tuple:
    """Inverse of :meth:`Trajectory.to_csv`: ``(provenance, times, states)``."""
    prov = {}
    with open(path) as fh:
        lines = fh.readlines()
    n_comment = 0
    for line in lines:
        if line.startswith("#"):
            prov.update(json.loads(line[1:]))
            n_comment += 1
    data = np.loadtxt(path, delimiter=",", skiprows=n_comment + 1, ndmin=2)
    return prov, data[:, 0], data[:, 1:]


def _sections(p: ParameterSet):
    dp = derived(p)
    idx, lv, tags = [], [], []
    if dp.lambda1 is not None:
        idx.append(0)
        lv.append(dp.lambda1)
        tags.append(SECTION_X)
    if dp.lambda2 is not None:
        idx.append(1)
        lv.append(dp.lambda2)
        tags.append(SECTION_Y)
    return np.array(idx, dtype=np.int64), np.array(lv, dtype=float), np.ones(len(idx), dtype=np.int64), tags


def output_grid(t_end: float, dt: float) -> np.ndarray:
    n = int(np.floor(t_end / dt + 1e-9))
    t = np.arange(n + 1) * dt
    if t[-1] < t_end:
        t = np.append(t, t_end)
    return t


def integrate(p: ParameterSet, s0, cfg: IntegratorConfig = IntegratorConfig()) -> Trajectory:
    """Integrate the full system from ``s0`` over ``[0, cfg.t_end]``.

    Initially-zero coordinates stay exactly zero: every stage of the
    scheme multiplies them by zero.  Crossings of ``x = lambda1`` and
    ``y = lambda2`` (upward) are recorded as events.
    """
    s0 = np.asarray(s0, dtype=float)
    if s0.shape != (3,) or np.any(s0 < 0) or not np.all(np.isfinite(s0)):
        raise DomainError(f"initial state must be three nonnegative numbers, got {s0.tolist()}")
    idx, lv, dirs, tags = _sections(p)
    t_out = output_grid(cfg.t_end, cfg.dense_output_dt)
    res = _kernels.solve(
        _kernels.FULL, 0.0, s0.copy(), float(cfg.t_end), p.as_array(),
        np.zeros((2, 6)), np.zeros(2), cfg.rtol, np.full(3, cfg.atol), cfg.max_step, 0.0,
        t_out, idx, lv, dirs, _SECTION_CAP, -1, _MAX_STEPS,
    )
    Y, n_filled, ct, cy, cs, t_fin, _, _, n_steps, status = res
    crossings = {tag: (ct[cs == j], cy[cs == j]) for j, tag in enumerate(tags)}
    if status != _kernels.STATUS_OK:
        partial = Trajectory(t_out[:n_filled], Y[:n_filled], p, s0, cfg, crossings, n_steps)
        raise IntegrationError(f"integration stopped at t={t_fin:.6g} (status {status})", partial)
    # components decaying below atol wander in sign at round-off level
    neg_tol = max(EPS_NEG, 100.0 * cfg.atol)
    if np.any(Y < -neg_tol):
        partial = Trajectory(t_out, Y, p, s0, cfg, crossings, n_steps)
        raise IntegrationError("trajectory left the nonnegative octant", partial)
    Y[Y < 0.0] = 0.0
    return Trajectory(t_out, Y, p, s0, cfg, crossings, n_steps)


def attracting_set_bounds(p: ParameterSet) -> tuple:
    """``(1, 1 + 1/(4 d1), 1 + 1/(4 d1) + 1/(4 d2))``."""
    b2 = 1.0 + 1.0 / (4.0 * p.d1)
    return 1.0, b2, b2 + 1.0 / (4.0 * p.d2)


def in_attracting_set(p: ParameterSet, states, tol: float = 1e-6) -> np.ndarray:
    s = np.atleast_2d(states)
    bx, bxy, bxyz = attracting_set_bounds(p)
    return (
        (s[:, 0] <= bx + tol)
        & (s[:, 0] + s[:, 1] <= bxy + tol)
        & (s.sum(axis=1) <= bxyz + tol)
    )


def attracting_set_check(tr: Trajectory, p: ParameterSet, tol: float = 1e-6) -> tuple:
    """Whether the tail lies in the attracting set, and the first-entry time.

    The entry time is the earliest sample after which every sample stays
    inside; ``None`` if the final sample is outside.
    """
    if not tr.config.t_end > tr.config.t_transient:
        raise UsageError("trajectory must extend past the transient")
    inside = in_attracting_set(p, tr.states, tol)
    _, tail = tr.tail()
    ok = bool(np.all(in_attracting_set(p, tail, tol)))
    if not inside[-1]:
        return ok, None
    outside = np.nonzero(~inside)[0]
    first = 0 if outside.size == 0 else outside[-1] + 1
    return ok, float(tr.times[first])


@dataclass(frozen=True)
class CycleRef:
    """Signature of a periodic attractor observed on a trajectory."""

    period: float
    y_min: float
    y_max: float
    section: str
    section_multiplicity: int = 1

    @property
    def y_amplitude(self) -> float:
        return self.y_max - self.y_min

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class AttractorVerdict:
    kind: str
    target: object = None
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        tgt = None if self.target is None else self.target.to_dict()
        return {"kind": self.kind, "target": tgt, "diagnostics": self.diagnostics}


VERDICT_KINDS = (
    "equilibrium",
    "boundary_cycle",
    "interior_cycle",
    "chaotic_or_undetermined",
    "z_extinct_equilibrium",
)


def classify_attractor(tr: Trajectory, eqs, th: Thresholds = Thresholds()) -> AttractorVerdict:
    """Decide what the tail of ``tr`` converged to.

    Rules, in order: a stationary tail near a listed equilibrium; a tail
    with vanishing ``z`` and an oscillating ``(x, y)`` (boundary cycle); a
    tail whose returns to ``y = lambda2`` recur with some multiplicity
    (interior cycle); otherwise chaotic or undetermined.
    """
    from .cycles import section_recurrence

    if tr.times[-1] <= tr.config.t_transient:
        raise UsageError("trajectory is shorter than the transient")
    t_tail, tail = tr.tail()
    amp = tail.max(axis=0) - tail.min(axis=0)
    final = tail[-1]
    diag = {
        "tail_amplitude": amp.tolist(),
        "tail_mean_z": float(tail[:, 2].mean()),
        "tail_max_z": float(tail[:, 2].max()),
        "tail_min_z": float(tail[:, 2].min()),
        "final_state": final.tolist(),
        "thresholds": th.to_dict(),
        "tail_span": float(t_tail[-1] - t_tail[0]),
    }

    if np.all(amp < th.delta_eq):
        best, dist = None, np.inf
        for e in eqs:
            d = float(np.max(np.abs(final - e.state)))
            if d < dist:
                best, dist = e, d
        diag["distance_to_equilibrium"] = dist
        if best is not None and dist < th.delta_eq:
            kind = "equilibrium" if best.kind == "Interior" else "z_extinct_equilibrium"
            return AttractorVerdict(kind, best, diag)
        diag["reason"] = "stationary tail not near any listed equilibrium"
        return AttractorVerdict("chaotic_or_undetermined", None, diag)

    if diag["tail_max_z"] < th.delta_z and np.all(amp[:2] > th.delta_osc):
        ts, _ = tr.section(SECTION_X, t_tail[0])
        period = float(np.mean(np.diff(ts))) if ts.size >= 2 else float("nan")
        diag["period"] = period
        diag["n_returns"] = int(ts.size)
        if ts.size >= 2 and 20 * period > diag["tail_span"]:
            diag["warning"] = "tail covers fewer than 20 periods"
        ref = CycleRef(period, float(tail[:, 1].min()), float(tail[:, 1].max()), SECTION_X)
        return AttractorVerdict("boundary_cycle", ref, diag)

    if diag["tail_min_z"] > th.delta_z:
        ts, ys = tr.section(SECTION_Y, t_tail[0])
        rec = section_recurrence(ts, ys[:, [0, 2]], th.delta_rec, th.max_section_period)
        diag["n_returns"] = int(ts.size)
        if rec is not None:
            k, period, residual = rec
            diag["period"] = period
            diag["section_multiplicity"] = k
            diag["recurrence_residual"] = residual
            if 20 * period > diag["tail_span"]:
                diag["warning"] = "tail covers fewer than 20 periods"
            ref = CycleRef(period, float(tail[:, 1].min()), float(tail[:, 1].max()), SECTION_Y, k)
            return AttractorVerdict("interior_cycle", ref, diag)
        diag["reason"] = "no recurrence on the y = lambda2 section"
    else:
        diag["reason"] = "z neither extinct nor bounded away from zero"
    return AttractorVerdict("chaotic_or_undetermined", None, diag)
