"""Moment-matrix relaxations over the '+'-outcome projectors a0, a1, b0, b1.

Words are tuples of generator names.  The '-' projectors never appear: they
are rewritten through completeness (A_{-|x} = 1 - a_x), so every probability
is an affine function of a handful of moments.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg as sla

from .bell_core import MINUS, PLUS, BehaviorForm, parse_outcome
from .sdp_core import LinearForm, PsdBlock, SdpProblem

GENERATORS = ("a0", "a1", "b0", "b1")
LEVELS = ("1+AB", "2")
_LEVEL_ALIASES = {"1+AB": "1+AB", "1ab": "1+AB", "1AB": "1+AB", "1+ab": "1+AB", "2": "2", 2: "2"}


class TriviallyInfeasible(ValueError):
    """An equality between constants that cannot hold, e.g. 0 = 1."""


def normalize_level(level) -> str:
    try:
        return _LEVEL_ALIASES[level]
    except (KeyError, TypeError):
        raise ValueError(f"unsupported NPA level {level!r}; expected one of {LEVELS}") from None


@dataclass(frozen=True, order=True)
class Monomial:
    word: tuple[str, ...] = ()

    def __str__(self):
        return "".join(self.word) or "1"

    def __mul__(self, other: Monomial) -> Monomial:
        return canonicalize(self.word + other.word)

    def adjoint(self) -> Monomial:
        return canonicalize(tuple(reversed(self.word)))


def _collapse(letters):
    out = []
    for g in letters:
        if not out or out[-1] != g:
            out.append(g)
    return out


def canonicalize(word) -> Monomial:
    """Commute Bob's letters to the right, then apply P^2 = P."""
    if isinstance(word, Monomial):
        word = word.word
    word = tuple(word)
    for g in word:
        if g not in GENERATORS:
            raise ValueError(f"unknown generator {g!r}")
    alice = [g for g in word if g[0] == "a"]
    bob = [g for g in word if g[0] == "b"]
    return Monomial(tuple(_collapse(alice) + _collapse(bob)))


def moment_key(word) -> tuple[str, ...]:
    """Key of <w> under the identification <w> = <reverse(w)>."""
    w = canonicalize(word).word
    r = canonicalize(tuple(reversed(w))).word
    return min(w, r)


def level_basis(level) -> list[Monomial]:
    level = normalize_level(level)
    basis = [(), ("a0",), ("a1",), ("b0",), ("b1",)]
    basis += [(a, b) for a in ("a0", "a1") for b in ("b0", "b1")]
    if level == "2":
        basis += [("a0", "a1"), ("a1", "a0"), ("b0", "b1"), ("b1", "b0")]
    return [Monomial(w) for w in basis]


@dataclass(frozen=True, eq=False)
class MomentStructure:
    level: str
    basis: tuple[Monomial, ...]
    varmap: dict  # moment key -> variable index
    entry_keys: tuple  # (size x size) nested tuple of moment keys
    constant: np.ndarray  # contribution of <1> = 1
    coeffs: np.ndarray  # (n_vars, size, size)

    @property
    def size(self) -> int:
        return len(self.basis)

    @property
    def n_vars(self) -> int:
        return len(self.varmap)

    def var(self, word) -> int:
        key = moment_key(word)
        if key not in self.varmap:
            raise KeyError(f"moment <{''.join(key)}> not in the level-{self.level} structure")
        return self.varmap[key]

    def matrix(self, x: np.ndarray) -> np.ndarray:
        return self.constant + np.tensordot(np.asarray(x, dtype=float), self.coeffs, axes=1)

    def entry_var(self, i: int, j: int):
        key = self.entry_keys[i][j]
        return None if key == () else self.varmap[key]


@lru_cache(maxsize=None)
def build_structure(level="1+AB") -> MomentStructure:
    level = normalize_level(level)
    basis = level_basis(level)
    k = len(basis)
    varmap: dict = {}
    keys = []
    for i in range(k):
        row = []
        for j in range(k):
            key = moment_key(tuple(reversed(basis[i].word)) + basis[j].word)
            if key != () and key not in varmap:
                varmap[key] = len(varmap)
            row.append(key)
        keys.append(tuple(row))
    const = np.zeros((k, k))
    coeffs = np.zeros((len(varmap), k, k))
    for i in range(k):
        for j in range(k):
            if keys[i][j] == ():
                const[i, j] = 1.0
            else:
                coeffs[varmap[keys[i][j]], i, j] = 1.0
    const.setflags(write=False)
    coeffs.setflags(write=False)
    return MomentStructure(level, tuple(basis), varmap, tuple(keys), const, coeffs)


# --------------------------------------------------------------------------
# probabilities as linear forms in the moments


def _projector_terms(party: str, outcome: int, setting: int) -> dict:
    """Expansion of A_{a|x} (or B_{b|y}) over {1, generator}."""
    g = (f"{party}{setting}",)
    return {g: 1.0} if outcome == PLUS else {(): 1.0, g: -1.0}


def _operator_terms(a=None, x=None, b=None, y=None) -> dict:
    """A_{a|x} B_{b|y} (either factor may be absent) as {word: coeff}."""
    left = _projector_terms("a", a, x) if a is not None else {(): 1.0}
    right = _projector_terms("b", b, y) if b is not None else {(): 1.0}
    out: dict = {}
    for wa, ca in left.items():
        for wb, cb in right.items():
            out[wa + wb] = out.get(wa + wb, 0.0) + ca * cb
    return out


def _form_from_terms(structure: MomentStructure, terms: dict) -> LinearForm:
    constant = 0.0
    coeffs: dict = {}
    for word, c in terms.items():
        if canonicalize(word).word == ():
            constant += c
        else:
            v = structure.var(word)
            coeffs[v] = coeffs.get(v, 0.0) + c
    return LinearForm(constant, coeffs)


_P_JOINT = re.compile(r"^p\(\s*([+\-−])\s*,\s*([+\-−])\s*\|\s*(?:A_?)?([01])\s*,\s*(?:B_?)?([01])\s*\)$")
_P_MARG = re.compile(r"^p\(\s*([+\-−])\s*\|\s*([AB])_?([01])\s*\)$")


def probability_form(structure: MomentStructure, quantity) -> LinearForm:
    """Linear form of ``p(a,b|x,y)``, ``p(a|A_x)`` or ``p(b|B_y)``.

    ``quantity`` is a string such as ``"p(+,-|1,0)"`` or ``"p(+|A1)"``, or a
    tuple ``(a, b, x, y)`` / ``("A", a, x)`` / ``("B", b, y)``.
    """
    if isinstance(quantity, str):
        q = quantity.replace(" ", "")
        m = _P_JOINT.match(q)
        if m:
            a, b = parse_outcome(m.group(1)), parse_outcome(m.group(2))
            return _form_from_terms(structure, _operator_terms(a, int(m.group(3)), b, int(m.group(4))))
        m = _P_MARG.match(q)
        if m:
            quantity = (m.group(2), parse_outcome(m.group(1)), int(m.group(3)))
        else:
            raise ValueError(f"unknown quantity {quantity!r}")
    if len(quantity) == 4:
        a, b, x, y = quantity
        return _form_from_terms(structure, _operator_terms(a, x, b, y))
    if len(quantity) == 3 and quantity[0] in ("A", "B"):
        party, o, s = quantity
        if party == "A":
            return _form_from_terms(structure, _operator_terms(a=o, x=s))
        return _form_from_terms(structure, _operator_terms(b=o, y=s))
    raise ValueError(f"unknown quantity {quantity!r}")


def behavior_form(structure: MomentStructure, form: BehaviorForm) -> LinearForm:
    """Map a linear form over joint probabilities onto the moments."""
    out = LinearForm(form.constant)
    for a, b, x, y, c in form.terms():
        out = out + c * probability_form(structure, (a, b, x, y))
    return out


def behavior_from_moments(structure: MomentStructure, x: np.ndarray):
    from .bell_core import Behavior

    p = np.zeros((2, 2, 2, 2))
    for xs in (0, 1):
        for ys in (0, 1):
            for a in (MINUS, PLUS):
                for b in (MINUS, PLUS):
                    p[xs, ys, a, b] = probability_form(structure, (a, b, xs, ys)).evaluate(x)
    return Behavior(p)


# --------------------------------------------------------------------------
# problem assembly


def _basis_vector(structure: MomentStructure, terms: dict) -> np.ndarray | None:
    index = {m.word: i for i, m in enumerate(structure.basis)}
    v = np.zeros(structure.size)
    for word, c in terms.items():
        w = canonicalize(word).word
        if w not in index:
            return None
        v[index[w]] += c
    return v


def _same_form(f: LinearForm, g: LinearForm, tol=1e-12) -> bool:
    if abs(f.constant - g.constant) > tol:
        return False
    keys = set(f.coeffs) | set(g.coeffs)
    return all(abs(f.coeffs.get(k, 0.0) - g.coeffs.get(k, 0.0)) <= tol for k in keys)


def _zero_operators(structure, eqs, ineqs) -> list[np.ndarray]:
    """Basis vectors v with <O^dag O> = 0 forced by the constraints, where O
    is a product of projectors.  For a PSD moment matrix this means Gamma v = 0."""
    candidates = []
    for a in (MINUS, PLUS):
        for b in (MINUS, PLUS):
            for x in (0, 1):
                for y in (0, 1):
                    candidates.append(_operator_terms(a, x, b, y))
    for o in (MINUS, PLUS):
        for s in (0, 1):
            candidates.append(_operator_terms(a=o, x=s))
            candidates.append(_operator_terms(b=o, y=s))
    zero_forms = [f for f, v in eqs if v == 0.0] + [f for f, v in ineqs if v == 0.0]
    out = []
    for terms in candidates:
        pf = _form_from_terms(structure, terms)
        if any(_same_form(pf, f) for f in zero_forms):
            vec = _basis_vector(structure, terms)
            if vec is not None:
                out.append(vec)
    return out


def assemble(
    structure: MomentStructure,
    objective: LinearForm,
    eqs=(),
    ineqs=(),
    *,
    diag_bounds: bool = True,
    face_reduce: bool = True,
) -> SdpProblem:
    """Maximize ``objective`` over moment vectors with Gamma(x) PSD.

    ``eqs`` are ``(form, value)`` pairs meaning ``form == value``; ``ineqs``
    mean ``form <= value``.  Constraints that pin a projector-product
    probability to zero put the matrix on a face of the cone; with
    ``face_reduce`` the PSD block is restricted to that face (same feasible
    set, but the compressed block keeps a strict interior).
    """
    eqs = list(eqs)
    ineqs = list(ineqs)
    for form, value in eqs:
        if form.is_constant() and abs(form.constant - value) > 1e-12:
            raise TriviallyInfeasible(f"constant equality {form.constant} = {value}")
    n = structure.n_vars
    constant, coeffs = structure.constant, structure.coeffs

    if diag_bounds:
        seen = set()
        for i in range(structure.size):
            v = structure.entry_var(i, i)
            if v is not None and v not in seen:
                seen.add(v)
                ineqs.append((LinearForm(0.0, {v: 1.0}), 1.0))
                ineqs.append((LinearForm(0.0, {v: -1.0}), 0.0))

    block = PsdBlock(constant, coeffs)
    if face_reduce:
        kernel = _zero_operators(structure, eqs, ineqs)
        if kernel:
            K = np.array(kernel)
            for vec in kernel:
                c_vec = constant @ vec
                f_vec = coeffs @ vec  # (n_vars, size)
                for i in range(structure.size):
                    form = LinearForm(float(c_vec[i]), {k: float(f_vec[k, i]) for k in range(n)})
                    if not form.is_constant():
                        eqs.append((form, 0.0))
                    elif abs(form.constant) > 1e-12:
                        raise TriviallyInfeasible("zero-probability constraint contradicts normalization")
            V = sla.null_space(K)
            block = PsdBlock(V.T @ constant @ V, np.einsum("ia,kij,jb->kab", V, coeffs, V))
            block.constant = 0.5 * (block.constant + block.constant.T)
            block.coeffs = 0.5 * (block.coeffs + block.coeffs.transpose(0, 2, 1))
    return SdpProblem(n, objective, [block], eqs, ineqs)
