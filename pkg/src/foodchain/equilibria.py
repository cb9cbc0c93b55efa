"""Equilibria, local stability and the lambda1/lambda2 classification table."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConsistencyError, UsageError
from .model import EPS_CLASS, ParameterSet, derived, jacobian, p_poly

KINDS = ("E0", "Ex", "Exy", "Interior")

LABELS = (
    "I",
    "II.1.a",
    "II.1.b",
    "II.2.a.i",
    "II.2.a.ii",
    "II.2.b.i",
    "II.2.b.ii",
    "II.2.b.iii",
    "II.2.b.iv",
)
#: Outcome reported before classification when the top predator cannot persist.
Z_EXTINCT = "z-extinct"

KNOWN_RESULTS = {
    "I": "Ex_GAS",
    "II.1.a": "Exy_GAS_R3",
    "II.1.b": "persistence",
    "II.2.a.i": "Exy_GAS_R3",
    "II.2.a.ii": "persistence",
    "II.2.b.i": "cycle_GAS_conditional",
    "II.2.b.ii": "open",
    "II.2.b.iii": "open",
    "II.2.b.iv": "open",
    Z_EXTINCT: "z_extinct",
}


@dataclass(frozen=True)
class RouthHurwitzRecord:
    b0: float
    b1: float
    b2: float
    hurwitz_margin: float
    necessary_x_condition: bool

    @property
    def stable(self) -> bool:
        return self.b0 > 0 and self.b1 > 0 and self.b2 > 0 and self.hurwitz_margin > 0

    def to_dict(self) -> dict:
        return {
            "b0": self.b0,
            "b1": self.b1,
            "b2": self.b2,
            "hurwitz_margin": self.hurwitz_margin,
            "necessary_x_condition": self.necessary_x_condition,
            "stable": self.stable,
        }


@dataclass(frozen=True)
class Equilibrium:
    kind: str
    coords: tuple
    eigenvalues: tuple
    stability: str
    rh: Optional[RouthHurwitzRecord] = None
    note: Optional[str] = None

    @property
    def state(self) -> np.ndarray:
        return np.array(self.coords, dtype=float)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "coords": list(self.coords),
            "eigenvalues": [{"re": ev.real, "im": ev.imag} for ev in self.eigenvalues],
            "stability": self.stability,
            "routh_hurwitz": None if self.rh is None else self.rh.to_dict(),
            "note": self.note,
        }


@dataclass(frozen=True)
class ClassificationCase:
    label: str
    known_result: str
    boundary_flags: tuple = ()
    notes: tuple = ()

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "known_result": self.known_result,
            "boundary_flags": list(self.boundary_flags),
            "notes": list(self.notes),
        }


def stability_from_eigenvalues(eigs, eps: float = EPS_CLASS) -> str:
    re = np.real(np.asarray(eigs))
    if np.any(re > eps):
        return "unstable"
    if np.any(np.abs(re) <= eps):
        return "marginal"
    return "stable"


def _sorted_eigs(eigs) -> tuple:
    return tuple(sorted((complex(e) for e in eigs), key=lambda c: (c.real, c.imag)))


def _quadratic_roots(b, c) -> tuple:
    """Roots of ``l^2 + b l + c`` (complex when needed)."""
    disc = b * b - 4.0 * c
    if disc >= 0:
        sq = math.sqrt(disc)
        q = -0.5 * (b + math.copysign(sq, b)) if b != 0 else -0.5 * sq
        if q == 0:
            return (0.0 + 0j, 0.0 + 0j)
        return (complex(q), complex(c / q))
    sq = math.sqrt(-disc)
    return (complex(-b / 2, sq / 2), complex(-b / 2, -sq / 2))


def exy_planar_eigenvalues(p: ParameterSet) -> tuple:
    """In-plane eigenvalues of the x-y coexistence state (needs 0 < lambda1 < 1)."""
    dp = derived(p)
    x = dp.lambda1
    y = dp.p_of_lambda1
    tr = -x + x * y / (p.a1 + x) ** 2
    det = p.a1 * p.m1 * x * y / (p.a1 + x) ** 3
    return _quadratic_roots(-tr, det)


def boundary_equilibria(p: ParameterSet, eps: float = EPS_CLASS) -> list:
    """E0 and Ex always; Exy = (lambda1, p(lambda1), 0) when 0 < lambda1 < 1."""
    dp = derived(p)
    out = []
    e0 = (1.0, -p.d1, -p.d2)
    out.append(Equilibrium("E0", (0.0, 0.0, 0.0), _sorted_eigs(e0), stability_from_eigenvalues(e0, eps)))
    ex = (-1.0, p.m1 / (p.a1 + 1.0) - p.d1, -p.d2)
    out.append(Equilibrium("Ex", (1.0, 0.0, 0.0), _sorted_eigs(ex), stability_from_eigenvalues(ex, eps)))
    if dp.A1_holds:
        x, y = dp.lambda1, dp.p_of_lambda1
        transverse = -p.d2 + p.m2 * y / (p.a2 + y)
        eigs = exy_planar_eigenvalues(p) + (complex(transverse),)
        # stable iff lambda1 > (1 - a1)/2 and p(lambda1) < lambda2
        ties: list = []
        in_plane = _cmp(x, dp.hopf_threshold, eps, "", ties)
        across = 1 if dp.lambda2 is None else _cmp(dp.lambda2, y, eps, "", ties)
        if in_plane > 0 and across > 0:
            verdict = "stable"
        elif in_plane < 0 or across < 0:
            verdict = "unstable"
        else:
            verdict = "marginal"
        out.append(Equilibrium("Exy", (x, y, 0.0), _sorted_eigs(eigs), verdict))
    return out


def why_no_interior(p: ParameterSet, eps: float = EPS_CLASS) -> Optional[str]:
    """Reason no interior equilibrium exists, or ``None`` if one may."""
    dp = derived(p)
    if not dp.A1_holds:
        return "assumption A1 (0 < lambda1 < 1) fails"
    if not dp.A2_holds:
        return "assumption A2 (d2 < m2) fails"
    if dp.lambda2 > dp.p_max + eps:
        return "lambda2 exceeds the maximum of p"
    if not interior_equilibria(p, eps):
        return "no root of p(x) = lambda2 in (lambda1, 1)"
    return None


def _z_star(p: ParameterSet, x: float, y: float) -> float:
    return (p.m1 * x / (p.a1 + x) - p.d1) * (p.a2 + y)


def interior_equilibria(p: ParameterSet, eps: float = EPS_CLASS) -> list:
    """Positive equilibria: y* = lambda2, p(x*) = lambda2, x* in (lambda1, 1)."""
    dp = derived(p)
    if not (dp.A1_holds and dp.A2_holds):
        return []
    lam1, lam2 = dp.lambda1, dp.lambda2
    b = 1.0 - p.a1
    disc = (1.0 + p.a1) ** 2 - 4.0 * lam2
    notes = {}
    if abs(disc) <= eps:
        roots = [b / 2.0]
        notes[roots[0]] = "tangency/multiplicity-2 boundary"
    elif disc < 0:
        return []
    else:
        # x^2 - b x + (lam2 - a1) = 0, cancellation-free
        sq = math.sqrt(disc)
        q = 0.5 * (b + math.copysign(sq, b)) if b != 0 else 0.5 * sq
        c = lam2 - p.a1
        roots = [q, c / q] if q != 0 else [0.0]
    out = []
    for x in sorted(roots):
        if not (lam1 < x < 1.0):
            continue
        y = lam2
        z = _z_star(p, x, y)
        if z <= 0:
            continue
        s = (x, y, z)
        rh = _rh_record(p, s)
        eigs = _sorted_eigs(np.roots([1.0, rh.b2, rh.b1, rh.b0]))
        out.append(Equilibrium("Interior", s, eigs, stability_from_eigenvalues(eigs, eps), rh, notes.get(x)))
    for e in out:
        _cross_check(p, e, eps)
    return out


def _rh_record(p: ParameterSet, s) -> RouthHurwitzRecord:
    x, y, z = s
    A = x / (p.a1 + x)
    B = y / (p.a1 + x)
    C = p.a1 * p.m1 / (p.a1 + x)
    D = y / (p.a2 + y)
    E = p.a2 * p.m2 / (p.a2 + y)
    F = z / (p.a2 + y)
    b2 = x - A * B - D * F
    b1 = (E - x) * D * F + A * B * D * F + A * B * C
    b0 = (x - A * B) * D * E * F
    return RouthHurwitzRecord(
        b0=b0,
        b1=b1,
        b2=b2,
        hurwitz_margin=b2 * b1 - b0,
        necessary_x_condition=x > (1.0 - p.a1) / 2.0,
    )


def _cross_check(p: ParameterSet, e: Equilibrium, eps: float, near: float = 1e-8) -> None:
    num = np.linalg.eigvals(jacobian(p, e.coords))
    re = np.real(num)
    if np.min(np.abs(re)) < near:
        return
    if (e.rh.stable) != bool(np.all(re < 0)):
        raise ConsistencyError(
            f"Routh-Hurwitz verdict {e.rh.stable} disagrees with eigenvalues {num} at {e.coords}"
        )


def routh_hurwitz(p: ParameterSet, e: Equilibrium) -> RouthHurwitzRecord:
    """Routh-Hurwitz coefficients of the characteristic cubic at an interior equilibrium.

    The verdict is checked against the numerically computed eigenvalues of
    the Jacobian.  ``e`` may be built by hand (e.g. from approximate
    rounded coordinates); the formulas use only its coordinates.
    """
    if e.kind != "Interior":
        raise UsageError(f"Routh-Hurwitz record is defined for interior equilibria, not {e.kind}")
    rec = _rh_record(p, e.coords)
    checked = Equilibrium(e.kind, tuple(e.coords), e.eigenvalues, e.stability, rec)
    _cross_check(p, checked, EPS_CLASS)
    return rec


def interior_at(p: ParameterSet, coords) -> Equilibrium:
    """An interior ``Equilibrium`` at given coordinates (for approximate points)."""
    coords = tuple(float(c) for c in coords)
    rec = _rh_record(p, coords)
    eigs = _sorted_eigs(np.roots([1.0, rec.b2, rec.b1, rec.b0]))
    return Equilibrium("Interior", coords, eigs, stability_from_eigenvalues(eigs), rec, "user-supplied coordinates")


def all_equilibria(p: ParameterSet, eps: float = EPS_CLASS) -> list:
    return boundary_equilibria(p, eps) + interior_equilibria(p, eps)


def _cmp(a, b, eps, name, flags):
    """Three-way comparison with an equality band; records ties in ``flags``."""
    if abs(a - b) <= eps:
        flags.append(name)
        return 0
    return 1 if a > b else -1


def classify(p: ParameterSet, eps: float = EPS_CLASS) -> ClassificationCase:
    """Locate the parameters in the lambda1/lambda2 classification table."""
    dp = derived(p)
    flags: list = []
    notes: list = []
    if dp.lambda1 is None:
        notes.append("d1 >= m1: y and z go extinct")
        return ClassificationCase("I", KNOWN_RESULTS["I"], (), tuple(notes))
    if _cmp(dp.lambda1, 1.0, eps, "lambda1=1", flags) >= 0:
        notes.append("lambda1 >= 1 (d1 >= m1/(a1+1)): y and z go extinct")
        return ClassificationCase("I", KNOWN_RESULTS["I"], tuple(flags), tuple(notes))
    if dp.lambda2 is None:
        notes.append("d2 >= m2: z goes extinct")
        return ClassificationCase(Z_EXTINCT, KNOWN_RESULTS[Z_EXTINCT], tuple(flags), tuple(notes))

    lam1, lam2, pl1, pmax = dp.lambda1, dp.lambda2, dp.p_of_lambda1, dp.p_max
    if _cmp(p.a1, 1.0, eps, "a1=1", flags) >= 0:
        rel = _cmp(lam2, pl1, eps, "lambda2=p(lambda1)", flags)
        label = "II.1.a" if rel > 0 else "II.1.b"
    elif _cmp(lam1, dp.hopf_threshold, eps, "lambda1=(1-a1)/2", flags) >= 0:
        rel = _cmp(lam2, pl1, eps, "lambda2=p(lambda1)", flags)
        # the equality lambda2 = p(lambda1) is not covered by either row; it is
        # assigned to (i), whose global result includes the equality case
        label = "II.2.a.i" if rel >= 0 else "II.2.a.ii"
    else:
        top = _cmp(lam2, pmax, eps, "lambda2=p_max", flags)
        if top > 0:
            label = "II.2.b.i"
        elif top == 0:
            label = "II.2.b.ii"
        elif _cmp(lam2, pl1, eps, "lambda2=p(lambda1)", flags) > 0:
            label = "II.2.b.iii"
        else:
            label = "II.2.b.iv"
    return ClassificationCase(label, KNOWN_RESULTS[label], tuple(flags), tuple(notes))


def classification_report(p: ParameterSet, eps: float = EPS_CLASS) -> dict:
    """JSON-ready classification summary."""
    dp = derived(p)
    case = classify(p, eps)
    return {
        "label": case.label,
        "known_result": case.known_result,
        "lambda1": dp.lambda1,
        "lambda2": dp.lambda2,
        "p_lambda1": dp.p_of_lambda1,
        "p_max": dp.p_max,
        "hopf_threshold": dp.hopf_threshold,
        "boundary_flags": list(case.boundary_flags),
        "notes": list(case.notes),
        "epsilon_class": eps,
        "equilibria": [e.to_dict() for e in all_equilibria(p, eps)],
    }
