"""Behaviors of the two-party, two-setting, two-outcome Bell scenario.

Tables are indexed ``p[x, y, a, b]`` with outcome index 0 for '-' and 1 for
'+', so the flat (row-major) order is the lexicographic (x, y, a, b) order
with '-' before '+'.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

MINUS, PLUS = 0, 1
OUTCOMES = (MINUS, PLUS)
SETTINGS = (0, 1)

NORM_TOL = 1e-12
NONNEG_TOL = 1e-12
NOSIG_TOL = 1e-9


def outcome_symbol(a: int) -> str:
    return "+" if a == PLUS else "-"


def parse_outcome(s: str | int) -> int:
    if s in ("+", PLUS, "1"):
        return PLUS
    if s in ("-", MINUS, "0", "−"):
        return MINUS
    raise ValueError(f"not an outcome: {s!r}")


class InvalidBehavior(ValueError):
    """A behavior failed normalization, positivity or no-signaling checks."""


@dataclass(frozen=True)
class Violation:
    kind: str  # "normalization" | "nonnegativity" | "no-signaling"
    where: str
    magnitude: float


@dataclass(frozen=True, eq=False)
class Behavior:
    """Joint table ``p(a, b | x, y)``; immutable."""

    p: np.ndarray

    def __post_init__(self):
        arr = np.array(self.p, dtype=float).reshape(2, 2, 2, 2)
        arr.setflags(write=False)
        object.__setattr__(self, "p", arr)

    @classmethod
    def from_flat(cls, values) -> Behavior:
        flat = np.asarray(values, dtype=float).ravel()
        if flat.size != 16:
            raise ValueError(f"expected 16 entries, got {flat.size}")
        return cls(flat)

    @classmethod
    def uniform(cls) -> Behavior:
        return cls(np.full(16, 0.25))

    def flat(self) -> np.ndarray:
        return self.p.ravel().copy()

    def prob(self, a: int, b: int, x: int, y: int) -> float:
        return float(self.p[x, y, a, b])

    def marginal_a(self, a: int, x: int, y: int = 0) -> float:
        return float(self.p[x, y, a, :].sum())

    def marginal_b(self, b: int, y: int, x: int = 0) -> float:
        return float(self.p[x, y, :, b].sum())

    def to_json(self) -> dict:
        return {"p": [self.p[x, y].ravel().tolist() for x in SETTINGS for y in SETTINGS]}

    @classmethod
    def from_json(cls, obj: dict) -> Behavior:
        return cls.from_flat(np.asarray(obj["p"], dtype=float).ravel())

    def __eq__(self, other):
        return isinstance(other, Behavior) and np.array_equal(self.p, other.p)

    def __hash__(self):
        return hash(self.p.tobytes())


def validate(b: Behavior) -> list[Violation]:
    """Report every violated invariant; an empty list means valid."""
    out: list[Violation] = []
    p = b.p
    if not np.all(np.isfinite(p)):
        return [Violation("nonnegativity", "non-finite entry", float("inf"))]
    for x, y in itertools.product(SETTINGS, SETTINGS):
        dev = abs(p[x, y].sum() - 1.0)
        if dev > NORM_TOL:
            out.append(Violation("normalization", f"(x,y)=({x},{y})", float(dev)))
    for x, y, a, bb in itertools.product(SETTINGS, SETTINGS, OUTCOMES, OUTCOMES):
        if p[x, y, a, bb] < -NONNEG_TOL:
            out.append(
                Violation(
                    "nonnegativity",
                    f"p({outcome_symbol(a)},{outcome_symbol(bb)}|{x},{y})",
                    float(-p[x, y, a, bb]),
                )
            )
    for x, a in itertools.product(SETTINGS, OUTCOMES):
        dev = abs(p[x, 0, a, :].sum() - p[x, 1, a, :].sum())
        if dev > NOSIG_TOL:
            out.append(Violation("no-signaling", f"p({outcome_symbol(a)}|A_{x})", float(dev)))
    for y, bb in itertools.product(SETTINGS, OUTCOMES):
        dev = abs(p[0, y, :, bb].sum() - p[1, y, :, bb].sum())
        if dev > NOSIG_TOL:
            out.append(Violation("no-signaling", f"p({outcome_symbol(bb)}|B_{y})", float(dev)))
    return out


def require_valid(b: Behavior) -> None:
    report = validate(b)
    if report:
        worst = max(report, key=lambda v: v.magnitude)
        raise InvalidBehavior(f"{worst.kind} violated at {worst.where} by {worst.magnitude:.3g}")


@dataclass(frozen=True, order=True)
class DeterministicStrategy:
    """Fixed answers: Alice's to x = 0, 1 and Bob's to y = 0, 1."""

    alpha0: int
    alpha1: int
    beta0: int
    beta1: int

    @property
    def alphas(self) -> tuple[int, int]:
        return (self.alpha0, self.alpha1)

    @property
    def betas(self) -> tuple[int, int]:
        return (self.beta0, self.beta1)

    def __str__(self):
        return "(" + ",".join(outcome_symbol(v) for v in (self.alpha0, self.alpha1, self.beta0, self.beta1)) + ")"


def behavior_of(d: DeterministicStrategy) -> Behavior:
    p = np.zeros((2, 2, 2, 2))
    for x, y in itertools.product(SETTINGS, SETTINGS):
        p[x, y, d.alphas[x], d.betas[y]] = 1.0
    return Behavior(p)


def enumerate_deterministic() -> list[DeterministicStrategy]:
    return [DeterministicStrategy(*v) for v in itertools.product(OUTCOMES, repeat=4)]


def ch_value(b: Behavior) -> float:
    """Clauser-Horne expression; local behaviors give values in [-1, 0]."""
    require_valid(b)
    return (
        b.prob(PLUS, MINUS, 1, 0)
        + b.prob(MINUS, PLUS, 0, 1)
        + b.prob(MINUS, MINUS, 0, 0)
        - b.marginal_a(MINUS, 0, y=0)
        - b.marginal_b(MINUS, 0, x=0)
        - b.prob(PLUS, PLUS, 1, 1)
    )


def chsh_value(b: Behavior) -> float:
    """S = E00 + E01 + E10 - E11 with E = sum_ab ab p(a,b|x,y)."""
    sign = np.array([-1.0, 1.0])
    corr = np.einsum("xyab,a,b->xy", b.p, sign, sign)
    return float(corr[0, 0] + corr[0, 1] + corr[1, 0] - corr[1, 1])


@dataclass(frozen=True)
class DerivedEntries:
    """p(+|A_x), p(+|B_y) and p(+,+|x,y): the 8 moment-level quantities."""

    a_plus: tuple[float, float]
    b_plus: tuple[float, float]
    pp: tuple[tuple[float, float], tuple[float, float]]

    def reconstruct(self) -> Behavior:
        p = np.zeros((2, 2, 2, 2))
        for x, y in itertools.product(SETTINGS, SETTINGS):
            pa, pb, q = self.a_plus[x], self.b_plus[y], self.pp[x][y]
            p[x, y, PLUS, PLUS] = q
            p[x, y, PLUS, MINUS] = pa - q
            p[x, y, MINUS, PLUS] = pb - q
            p[x, y, MINUS, MINUS] = 1.0 - pa - pb + q
        return Behavior(p)


def derived_entries(b: Behavior) -> DerivedEntries:
    require_valid(b)
    return DerivedEntries(
        a_plus=(b.marginal_a(PLUS, 0), b.marginal_a(PLUS, 1)),
        b_plus=(b.marginal_b(PLUS, 0), b.marginal_b(PLUS, 1)),
        pp=tuple(tuple(b.prob(PLUS, PLUS, x, y) for y in SETTINGS) for x in SETTINGS),
    )


# --------------------------------------------------------------------------
# linear forms over the 16 joint entries


@dataclass(frozen=True, eq=False)
class BehaviorForm:
    """``constant + sum coeffs[x,y,a,b] * p(a,b|x,y)``."""

    coeffs: np.ndarray = field(default_factory=lambda: np.zeros((2, 2, 2, 2)))
    constant: float = 0.0

    def __post_init__(self):
        arr = np.array(self.coeffs, dtype=float).reshape(2, 2, 2, 2)
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    def __call__(self, b: Behavior) -> float:
        return self.constant + float(np.sum(self.coeffs * b.p))

    def __add__(self, other):
        if isinstance(other, BehaviorForm):
            return BehaviorForm(self.coeffs + other.coeffs, self.constant + other.constant)
        return BehaviorForm(self.coeffs, self.constant + float(other))

    __radd__ = __add__

    def __mul__(self, s: float):
        return BehaviorForm(self.coeffs * float(s), self.constant * float(s))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def terms(self):
        """Yield (a, b, x, y, coeff) for every nonzero coefficient."""
        for x, y, a, b in zip(*np.nonzero(self.coeffs)):
            yield int(a), int(b), int(x), int(y), float(self.coeffs[x, y, a, b])


def prob(a: int, b: int, x: int, y: int) -> BehaviorForm:
    c = np.zeros((2, 2, 2, 2))
    c[x, y, a, b] = 1.0
    return BehaviorForm(c)


def marg_a(a: int, x: int) -> BehaviorForm:
    """p(a|A_x), read off the y = 0 block."""
    return prob(a, PLUS, x, 0) + prob(a, MINUS, x, 0)


def marg_b(b: int, y: int) -> BehaviorForm:
    """p(b|B_y), read off the x = 0 block."""
    return prob(PLUS, b, 0, y) + prob(MINUS, b, 0, y)


def correlator(x: int, y: int) -> BehaviorForm:
    return prob(PLUS, PLUS, x, y) + prob(MINUS, MINUS, x, y) - prob(PLUS, MINUS, x, y) - prob(MINUS, PLUS, x, y)


def chsh_form() -> BehaviorForm:
    return correlator(0, 0) + correlator(0, 1) + correlator(1, 0) - correlator(1, 1)


@dataclass(frozen=True)
class Constraint:
    """``form <sense> value`` with sense one of '==', '<=', '>='."""

    form: BehaviorForm
    sense: str
    value: float

    def __post_init__(self):
        if self.sense not in ("==", "<=", ">="):
            raise ValueError(f"bad constraint sense {self.sense!r}")

    def violation(self, b: Behavior) -> float:
        lhs = self.form(b)
        if self.sense == "==":
            return abs(lhs - self.value)
        if self.sense == "<=":
            return max(0.0, lhs - self.value)
        return max(0.0, self.value - lhs)

    def as_leq(self) -> list[tuple[BehaviorForm, float]]:
        """Inequality pairs ``(form, bound)`` meaning form <= bound ('==' excluded)."""
        if self.sense == "<=":
            return [(self.form, self.value)]
        if self.sense == ">=":
            return [(-self.form, -self.value)]
        raise ValueError("equality has no <= form")
