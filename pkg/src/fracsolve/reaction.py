"""Reaction data: singular forcing families, the gradient-dependent
convective bound, the floor truncation with closed-form antiderivative,
and the hypothesis checker gating the main solve.

The default forcing family is f(x, t) = a(x) (c1 t^-gamma + c2 t^r),
weakly singular at t = 0; the bounded alternative replaces t^-gamma by
(1 + t)^-gamma so the t -> 0+ limit is finite.  The convective bound is
g(x, xi) = c3 (1 + |xi|^zeta), a function of |xi| alone.

The truncation replaces f(x, t) by f(x, max(floor(x), t)) for a strictly
positive floor field, removing the singularity from the optimizer's path
while leaving values above the floor untouched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .grids import ScalarField

_FAMILIES = ("singular", "bounded")
_EQ_TOL = 1e-12


@dataclass(frozen=True)
class ProblemExponents:
    """Orders and integrability exponents of the double-operator problem.

    The constructor enforces only structural sanity (orderings and open
    ranges needed for the formulas to make sense); the full solvability
    window is the job of check_hypotheses, so that operator-level oracles
    may run outside it (e.g. p = q = 2).
    """

    s: float
    s1: float
    s2: float
    p: float
    q: float
    dim: int

    def __post_init__(self):
        if not 0.0 < self.s2 <= self.s <= self.s1 <= 1.0:
            raise ValueError(
                f"orders must satisfy 0 < s2 <= s <= s1 <= 1, got "
                f"s2={self.s2}, s={self.s}, s1={self.s1}"
            )
        if self.p <= 1.0 or self.q <= 1.0:
            raise ValueError(f"exponents must exceed 1, got p={self.p}, q={self.q}")
        if self.dim < 1:
            raise ValueError(f"dimension must be positive, got {self.dim}")

    @property
    def p_prime(self) -> float:
        return self.p / (self.p - 1.0)

    @property
    def q_prime(self) -> float:
        return self.q / (self.q - 1.0)


@dataclass(frozen=True)
class SingularReaction:
    """Forcing family c1 t^-gamma + c2 t^r ('singular') or
    c1 (1+t)^-gamma + c2 t^r ('bounded'), optionally weighted by a
    positive bounded factor a(x)."""

    gamma: float
    c1: float
    c2: float
    r: float
    family: str = "singular"
    weight: Callable[[np.ndarray], np.ndarray] | None = field(
        default=None, compare=False
    )

    def __post_init__(self):
        if self.gamma <= 0.0:
            raise ValueError(f"singular exponent gamma must be positive, got {self.gamma}")
        if self.c1 < 0.0 or self.c2 < 0.0:
            raise ValueError(f"coefficients must be nonnegative, got c1={self.c1}, c2={self.c2}")
        if self.r <= 0.0:
            raise ValueError(f"growth exponent r must be positive, got {self.r}")
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; choose from {_FAMILIES}")


@dataclass(frozen=True)
class ConvectiveReaction:
    """Gradient-dependent bound g(x, xi) = c3 (1 + |xi|^zeta)."""

    c3: float
    zeta: float

    def __post_init__(self):
        if self.c3 < 0.0:
            raise ValueError(f"convective coefficient c3 must be nonnegative, got {self.c3}")
        if self.zeta <= 0.0:
            raise ValueError(f"growth exponent zeta must be positive, got {self.zeta}")


def _weight_at(reaction: SingularReaction, x) -> np.ndarray | float:
    if reaction.weight is None or x is None:
        return 1.0
    w = np.asarray(reaction.weight(np.asarray(x, dtype=float)))
    if np.any(w <= 0.0):
        raise ValueError("reaction weight must be strictly positive")
    return w


def _base_value(reaction: SingularReaction, t: np.ndarray) -> np.ndarray:
    if reaction.family == "singular":
        return reaction.c1 * t**-reaction.gamma + reaction.c2 * t**reaction.r
    return reaction.c1 * (1.0 + t) ** -reaction.gamma + reaction.c2 * t**reaction.r


def f_eval(reaction: SingularReaction, x, t):
    """Forcing value at states t > 0, optionally weighted at points x."""
    scalar = np.isscalar(t)
    tv = np.asarray(t, dtype=float)
    if np.any(tv <= 0.0):
        raise ValueError("forcing is only defined for positive states")
    out = _weight_at(reaction, x) * _base_value(reaction, tv)
    return float(out) if scalar and np.isscalar(out) or (scalar and out.ndim == 0) else out


def liminf_at_zero(reaction: SingularReaction) -> float:
    """Limit inferior of the forcing as t -> 0+."""
    return math.inf if reaction.family == "singular" else reaction.c1


def g_eval(conv: ConvectiveReaction, xi: np.ndarray) -> np.ndarray:
    """Convective bound at gradient samples xi of shape (m, dim)."""
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    mags = np.linalg.norm(xi, axis=-1)
    return conv.c3 * (1.0 + mags**conv.zeta)


class TruncatedReaction:
    """Forcing frozen below a strictly positive floor field.

    Evaluation acts on interior-node value vectors aligned with the
    floor's grid packing.
    """

    def __init__(self, base: SingularReaction, lower: ScalarField):
        floor = lower.grid.pack(lower)
        if np.any(floor <= 0.0):
            raise ValueError("truncation floor must be strictly positive on interior nodes")
        self.base = base
        self.grid = lower.grid
        self.lower = lower
        self.floor = floor
        self._points = lower.grid.interior_points
        self._weight = np.asarray(_weight_at(base, self._points)) * np.ones(floor.size)
        self._f_floor = self._weight * _base_value(base, floor)
        self._A_floor = self._weight * _antiderivative(base, floor)

    def _coerce(self, t) -> np.ndarray:
        """Accept one state per interior node, or a batch with the node
        axis leading (shape (n, ...))."""
        tv = np.asarray(t, dtype=float)
        if tv.ndim == 0:
            tv = np.full(self.floor.size, float(tv))
        if tv.shape[:1] != self.floor.shape:
            raise ValueError(
                f"expected a leading axis of {self.floor.size} interior values, "
                f"got shape {tv.shape}"
            )
        return tv

    def _per_node(self, arr: np.ndarray, like: np.ndarray) -> np.ndarray:
        return arr.reshape(arr.shape + (1,) * (like.ndim - 1))

    def f(self, t) -> np.ndarray:
        return f_truncated(self, t)

    def F(self, tau) -> np.ndarray:
        return F_truncated(self, tau)


def _antiderivative(reaction: SingularReaction, t: np.ndarray) -> np.ndarray:
    """Integral of the unweighted family from 0 to t >= 0."""
    power = reaction.c2 * t ** (reaction.r + 1.0) / (reaction.r + 1.0)
    if reaction.family == "singular":
        head = reaction.c1 * t ** (1.0 - reaction.gamma) / (1.0 - reaction.gamma)
    else:
        head = reaction.c1 * ((1.0 + t) ** (1.0 - reaction.gamma) - 1.0) / (1.0 - reaction.gamma)
    return head + power


def f_truncated(trunc: TruncatedReaction, t) -> np.ndarray:
    """Truncated forcing at interior-node states; finite for every real t."""
    tv = trunc._coerce(t)
    weight = trunc._per_node(trunc._weight, tv)
    floor = trunc._per_node(trunc.floor, tv)
    return weight * _base_value(trunc.base, np.maximum(floor, tv))


def F_truncated(trunc: TruncatedReaction, tau) -> np.ndarray:
    """Antiderivative of the truncated forcing from 0, in closed form.

    Linear with slope f(floor) below the floor; above it, the frozen
    segment [0, floor] plus the exact power antiderivative beyond.
    """
    tv = trunc._coerce(tau)
    weight = trunc._per_node(trunc._weight, tv)
    floor = trunc._per_node(trunc.floor, tv)
    f_floor = trunc._per_node(trunc._f_floor, tv)
    a_floor = trunc._per_node(trunc._A_floor, tv)
    below = f_floor * tv
    above = f_floor * floor + weight * _antiderivative(
        trunc.base, np.maximum(floor, tv)
    ) - a_floor
    return np.where(tv <= floor, below, above)


@dataclass(frozen=True)
class HypothesisCheck:
    name: str
    ok: bool
    detail: str


@dataclass(frozen=True)
class HypothesisReport:
    checks: tuple[HypothesisCheck, ...]
    warnings: tuple[str, ...]
    uniqueness_ready: bool

    @property
    def passed(self) -> bool:
        return all(c.ok for c in self.checks)

    @property
    def failures(self) -> list[HypothesisCheck]:
        return [c for c in self.checks if not c.ok]

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [
                {"name": c.name, "ok": c.ok, "detail": c.detail} for c in self.checks
            ],
            "warnings": list(self.warnings),
            "uniqueness_ready": self.uniqueness_ready,
        }


def _ratio_strictly_decreasing(reaction: SingularReaction, q: float) -> bool:
    """Sample f(t)/t^(q-1) on a log grid and test strict decrease."""
    t = np.logspace(-3.0, 2.0, 200)
    ratio = _base_value(reaction, t) / t ** (q - 1.0)
    return bool(np.all(np.diff(ratio) < 0.0))


def check_hypotheses(
    exponents: ProblemExponents,
    singular: SingularReaction,
    convective: ConvectiveReaction,
) -> HypothesisReport:
    """Evaluate every inequality of the solvability window, naming each.

    Hard failures hold up the main solve; structural conditions that are
    infeasible at dim = 1 (the embedding clause p < N/s1 together with
    s1 p > 1) downgrade to warnings there.
    """
    e, f, g = exponents, singular, convective
    checks: list[HypothesisCheck] = []
    warnings: list[str] = []

    checks.append(
        HypothesisCheck(
            "0<s2<=s<=s1<=1",
            0.0 < e.s2 <= e.s <= e.s1 <= 1.0,
            f"s2={e.s2}, s={e.s}, s1={e.s1}",
        )
    )

    chain_ok = 2.0 < e.q < e.p
    chain_detail = f"q={e.q}, p={e.p}"
    if e.dim >= 2:
        chain_ok = chain_ok and e.p < e.dim / e.s1
        chain_detail += f", N/s1={e.dim / e.s1:.6g}"
    else:
        warnings.append(
            "embedding clause p<N/s1 skipped at N=1 (incompatible with s1*p>1); "
            "demo-scale relaxation"
        )
    checks.append(HypothesisCheck("2<q<p<N/s1", chain_ok, chain_detail))

    checks.append(
        HypothesisCheck("s1*p>1", e.s1 * e.p > 1.0, f"s1*p={e.s1 * e.p:.6g}")
    )
    checks.append(
        HypothesisCheck("gamma in (0,1)", 0.0 < f.gamma < 1.0, f"gamma={f.gamma}")
    )
    checks.append(
        HypothesisCheck(
            "r in (1,p-1)", 1.0 < f.r < e.p - 1.0, f"r={f.r}, p-1={e.p - 1.0:.6g}"
        )
    )
    checks.append(
        HypothesisCheck(
            "zeta in (1,p-1)",
            1.0 < g.zeta < e.p - 1.0,
            f"zeta={g.zeta}, p-1={e.p - 1.0:.6g}",
        )
    )
    threshold = 1.0 / (e.p_prime * f.gamma)
    checks.append(
        HypothesisCheck(
            "s1<1/(p'*gamma)",
            e.s1 < threshold,
            f"s1={e.s1}, 1/(p'*gamma)={threshold:.6g}",
        )
    )
    resonance = abs(e.q_prime * e.s2 - e.s1)
    checks.append(
        HypothesisCheck(
            "q'*s2 != s1",
            resonance > _EQ_TOL,
            f"q'*s2={e.q_prime * e.s2:.6g}, s1={e.s1}",
        )
    )

    # the clean sufficient condition is r < q-1; at the boundary r = q-1 the
    # sampled ratio still decreases (the singular head dominates) but the
    # power tail alone is constant, so uniqueness is not certified there
    uniqueness_ready = f.r < e.q - 1.0 and _ratio_strictly_decreasing(f, e.q)
    if not uniqueness_ready:
        warnings.append(
            "f(t)/t^(q-1) is not certified strictly decreasing (needs r < q-1): "
            "uniqueness checks are disabled"
        )
    if g.c3 == 0.0:
        warnings.append("c3=0: the convective term is absent and the map is constant")

    return HypothesisReport(tuple(checks), tuple(warnings), uniqueness_ready)
