"""Nondimensional Holling type II food chain: parameters, vector field, Jacobian.

The rescaled system is::

    x' = x (1 - x - y / (a1 + x))
    y' = y (-d1 + m1 x / (a1 + x) - z / (a2 + y))
    z' = z (-d2 + m2 y / (a2 + y))

Everything else in the package evaluates these functions or their
closed-form consequences.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError

#: Equality tolerance for threshold comparisons (lambda1 vs 1, lambda2 vs p(lambda1), ...).
EPS_CLASS = 1e-12
#: Negative overshoot below this magnitude is clamped to zero.
EPS_NEG = 1e-12

PARAM_NAMES = ("a1", "a2", "d1", "d2", "m1", "m2")


def _check_positive(obj, names):
    for name in names:
        value = getattr(obj, name)
        if not (isinstance(value, (int, float, np.floating, np.integer)) and math.isfinite(value)):
            raise DomainError(f"{name} must be a finite real number, got {value!r}")
        if value <= 0:
            raise DomainError(f"{name} must be strictly positive, got {value!r}")


@dataclass(frozen=True)
class DimensionalParams:
    """Parameters of the dimensional model (rates in 1/time)."""

    R: float
    K: float
    C1: float
    C2: float
    D1: float
    D2: float
    M1: float
    M2: float
    A1: float
    A2: float

    def __post_init__(self):
        _check_positive(self, [f.name for f in dataclasses.fields(self)])


@dataclass(frozen=True)
class ParameterSet:
    """The six dimensionless parameters of the rescaled model."""

    a1: float
    a2: float
    d1: float
    d2: float
    m1: float
    m2: float

    def __post_init__(self):
        _check_positive(self, PARAM_NAMES)
        for name in PARAM_NAMES:
            object.__setattr__(self, name, float(getattr(self, name)))

    def as_array(self) -> np.ndarray:
        """Pack as ``[a1, a2, d1, d2, m1, m2]`` (the kernel layout)."""
        return np.array([self.a1, self.a2, self.d1, self.d2, self.m1, self.m2])

    def replace(self, **changes) -> "ParameterSet":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    @classmethod
    def from_dict(cls, data: dict) -> "ParameterSet":
        missing = [n for n in PARAM_NAMES if n not in data]
        if missing:
            raise DomainError(f"missing parameter(s): {', '.join(missing)}")
        return cls(**{n: float(data[n]) for n in PARAM_NAMES})

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "ParameterSet":
        return cls.from_dict(json.loads(text))

    @property
    def derived(self) -> "DerivedParams":
        return derived(self)


@dataclass(frozen=True)
class DerivedParams:
    """Break-even densities and the thresholds built from them.

    ``lambda1`` is ``None`` when ``m1 <= d1`` (``lambda1_reason`` says why);
    likewise ``lambda2`` when ``m2 <= d2``.
    """

    lambda1: Optional[float]
    lambda2: Optional[float]
    p_of_lambda1: Optional[float]
    hopf_threshold: float
    p_max: float
    a1_ge_one: bool
    A1_holds: bool
    A2_holds: bool
    lambda1_reason: Optional[str] = None
    lambda2_reason: Optional[str] = None

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def p_poly(x, a1):
    """Prey isocline ``p(x) = (1 - x)(a1 + x)``."""
    return (1.0 - x) * (a1 + x)


def break_even(a, d, m) -> Optional[float]:
    """``a d / (m - d)``, or ``None`` when ``m <= d``."""
    if m <= d:
        return None
    return a * d / (m - d)


def derived(p: ParameterSet) -> DerivedParams:
    lam1 = break_even(p.a1, p.d1, p.m1)
    lam2 = break_even(p.a2, p.d2, p.m2)
    hopf = (1.0 - p.a1) / 2.0
    return DerivedParams(
        lambda1=lam1,
        lambda2=lam2,
        p_of_lambda1=None if lam1 is None else p_poly(lam1, p.a1),
        hopf_threshold=hopf,
        p_max=p_poly(hopf, p.a1),
        a1_ge_one=p.a1 >= 1.0,
        A1_holds=lam1 is not None and 0.0 < lam1 < 1.0,
        A2_holds=p.d2 < p.m2,
        lambda1_reason=None if lam1 is not None else "m1 <= d1",
        lambda2_reason=None if lam2 is not None else "m2 <= d2",
    )


def rescale(dp: DimensionalParams) -> ParameterSet:
    """Map dimensional parameters to the dimensionless set."""
    return ParameterSet(
        a1=dp.A1 / dp.K,
        a2=dp.M1 * dp.A2 / (dp.C1 * dp.K * dp.R),
        d1=dp.D1 / dp.R,
        d2=dp.D2 / dp.R,
        m1=dp.M1 / dp.R,
        m2=dp.M2 / dp.R,
    )


def state_scales(dp: DimensionalParams) -> tuple[float, float, float, float]:
    """Factors ``(sx, sy, sz, st)`` with ``x = sx X``, ..., ``t = st T``."""
    sx = 1.0 / dp.K
    sy = dp.M1 / (dp.C1 * dp.K * dp.R)
    sz = dp.M1 * dp.M2 / (dp.C1 * dp.C2 * dp.K * dp.R**2)
    return sx, sy, sz, dp.R


def dimensional_rhs(dp: DimensionalParams, S) -> np.ndarray:
    """Vector field of the original (dimensional) model."""
    X, Y, Z = S
    fx = dp.M1 * X / (dp.A1 + X)
    fy = dp.M2 * Y / (dp.A2 + Y)
    return np.array(
        [
            dp.R * X * (1.0 - X / dp.K) - fx * Y / dp.C1,
            -dp.D1 * Y + fx * Y - fy * Z / dp.C2,
            -dp.D2 * Z + fy * Z,
        ]
    )


def rhs(p: ParameterSet, s) -> np.ndarray:
    x, y, z = s
    return np.array(
        [
            x * (1.0 - x - y / (p.a1 + x)),
            y * (-p.d1 + p.m1 * x / (p.a1 + x) - z / (p.a2 + y)),
            z * (-p.d2 + p.m2 * y / (p.a2 + y)),
        ]
    )


def jacobian(p: ParameterSet, s) -> np.ndarray:
    x, y, z = s
    a1, a2 = p.a1, p.a2
    return np.array(
        [
            [1.0 - 2.0 * x - a1 * y / (a1 + x) ** 2, -x / (a1 + x), 0.0],
            [
                a1 * p.m1 * y / (a1 + x) ** 2,
                -p.d1 + p.m1 * x / (a1 + x) - a2 * z / (a2 + y) ** 2,
                -y / (a2 + y),
            ],
            [0.0, a2 * p.m2 * z / (a2 + y) ** 2, -p.d2 + p.m2 * y / (a2 + y)],
        ]
    )


def clamp_state(s, eps: float = EPS_NEG) -> np.ndarray:
    """Zero out tiny negative overshoot; larger negatives are a domain error."""
    s = np.array(s, dtype=float)
    if np.any(s < -eps):
        raise DomainError(f"state has negative component beyond {eps:g}: {s.tolist()}")
    s[s < 0.0] = 0.0
    return s


def hp_convert(a1: float, b1: float, a2: float, b2: float, d1: float, d2: float) -> ParameterSet:
    """Convert parameters written with ``a_i u / (1 + b_i u)`` responses.

    Uses the literature conversion ``m_i = a_i / b_i`` and half-saturation
    ``1 / b_i``, death rates unchanged.
    """
    for name, value in (("a1", a1), ("b1", b1), ("a2", a2), ("b2", b2), ("d1", d1), ("d2", d2)):
        if not value > 0:
            raise DomainError(f"{name} must be strictly positive, got {value!r}")
    return ParameterSet(a1=1.0 / b1, a2=1.0 / b2, d1=d1, d2=d2, m1=a1 / b1, m2=a2 / b2)


def hp_convert_exact(a1: float, b1: float, a2: float, b2: float, d1: float, d2: float) -> ParameterSet:
    """Exact variable change for the same literature form.

    The intermediate predator must be rescaled by ``m1`` for the prey
    equation to carry a unit coefficient, which multiplies the second
    half-saturation constant by ``m1``: ``a2 = (a1 / b1) / b2``.
    """
    p = hp_convert(a1, b1, a2, b2, d1, d2)
    return p.replace(a2=p.m1 / b2)
