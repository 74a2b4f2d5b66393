"""Exact arithmetic for the Engel Lie algebra and group.

The Lie algebra is spanned by X1..X4 with the only nonzero brackets

    [X1, X2] = X3,   [X1, X3] = X4,

stratified as g1 = span(X1, X2), g2 = span(X3), g3 = span(X4), with
dilation weights (1, 1, 2, 3) and homogeneous dimension Q = 7.

Group elements are stored in semidirect coordinates: the point
(x1, x2, x3, x4) stands for Exp(x1 X1 + x3 X3 + x4 X4) Exp(x2 X2).
All operations work for float coordinates and are exact on
int/Fraction coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

WEIGHTS = (1, 1, 2, 3)
HOMOGENEOUS_DIMENSION = 7

# nonzero brackets among generators: (i, j) -> k  meaning [Xi, Xj] = Xk, i < j
_BRACKET_TABLE = {(1, 2): 3, (1, 3): 4}


@dataclass(frozen=True)
class GroupElement:
    """Point of the Engel group in semidirect coordinates."""

    x1: object
    x2: object
    x3: object
    x4: object

    def coords(self):
        return (self.x1, self.x2, self.x3, self.x4)

    def __iter__(self):
        return iter(self.coords())


IDENTITY = GroupElement(0, 0, 0, 0)


def multiply(x: GroupElement, y: GroupElement) -> GroupElement:
    """Group product in semidirect coordinates."""
    half = _half_for(x.x1, y.x1)
    return GroupElement(
        x.x1 + y.x1,
        x.x2 + y.x2,
        x.x3 + y.x3 - x.x2 * y.x1,
        x.x4 + y.x4 + half * (x.x1 * y.x3 - x.x3 * y.x1) - half * x.x1 * x.x2 * y.x1,
    )


def inverse(x: GroupElement) -> GroupElement:
    """Group inverse; multiply(x, inverse(x)) is the identity."""
    return GroupElement(-x.x1, -x.x2, -x.x3 - x.x2 * x.x1, -x.x4)


def conjugate(g: GroupElement, x: GroupElement) -> GroupElement:
    """g x g^{-1}."""
    return multiply(multiply(g, x), inverse(g))


def dilate(r, x: GroupElement) -> GroupElement:
    """Anisotropic dilation with weights (1, 1, 2, 3); Jacobian r**7.

    Rejects non-positive r: dilations form a one-parameter group over r > 0.
    """
    if not r > 0:
        raise ValueError(f"dilation factor must be positive, got {r!r}")
    return GroupElement(r * x.x1, r * x.x2, r * r * x.x3, r * r * r * x.x4)


def _half_for(*vals):
    """Exact 1/2 when all coordinates are exact, float 0.5 otherwise."""
    if any(isinstance(v, float) for v in vals):
        return 0.5
    return Fraction(1, 2)


@dataclass(frozen=True)
class LieVector:
    """Element v1 X1 + v2 X2 + v3 X3 + v4 X4 of the Engel Lie algebra."""

    v1: object
    v2: object
    v3: object
    v4: object

    def coords(self):
        return (self.v1, self.v2, self.v3, self.v4)

    def __add__(self, other):
        return LieVector(*(a + b for a, b in zip(self.coords(), other.coords())))

    def __sub__(self, other):
        return LieVector(*(a - b for a, b in zip(self.coords(), other.coords())))

    def __rmul__(self, c):
        return LieVector(*(c * a for a in self.coords()))


def bracket(u: LieVector, v: LieVector) -> LieVector:
    """Lie bracket; bilinear, antisymmetric, satisfies Jacobi."""
    return LieVector(
        0 * u.v1,
        0 * u.v1,
        u.v1 * v.v2 - u.v2 * v.v1,
        u.v1 * v.v3 - u.v3 * v.v1,
    )


def exp_to_semidirect(v: LieVector) -> GroupElement:
    """Semidirect coordinates of Exp(v).

    Splits Exp(v) = Exp(a X1 + c X3 + d X4) Exp(b X2) through the
    Baker-Campbell-Hausdorff series, which terminates at triple brackets
    because the algebra is step 3:

        Exp(A)Exp(B) = Exp(A + B + [A,B]/2 + ([A,[A,B]] + [B,[B,A]])/12).
    """
    half = _half_for(*v.coords())
    twelfth = half / 6
    return GroupElement(
        v.v1,
        v.v2,
        v.v3 - half * v.v1 * v.v2,
        v.v4 - twelfth * v.v1 * v.v1 * v.v2,
    )


def semidirect_to_exp(x: GroupElement) -> LieVector:
    """Exponential coordinates of a group point; inverse of exp_to_semidirect."""
    half = _half_for(*x.coords())
    twelfth = half / 6
    return LieVector(
        x.x1,
        x.x2,
        x.x3 + half * x.x1 * x.x2,
        x.x4 + twelfth * x.x1 * x.x1 * x.x2,
    )


def exp_basis(i: int, t) -> GroupElement:
    """Exp(t Xi) in semidirect coordinates."""
    if i not in (1, 2, 3, 4):
        raise ValueError(f"generator index must be 1..4, got {i}")
    coords = [0, 0, 0, 0]
    coords[i - 1] = t
    return GroupElement(*coords)


def left_invariant_derivative(
    f: Callable[[GroupElement], float],
    x: GroupElement,
    i: int,
    h: float | None = None,
) -> float:
    """Central difference of t -> f(x Exp(t Xi)) at t = 0.

    Approximates the left-invariant vector field Xi, which in semidirect
    coordinates reads

        X1 = d1 - x2 d3 - (x3 + x1 x2)/2 d4,  X2 = d2,
        X3 = d3 + x1/2 d4,                    X4 = d4.
    """
    if h is None:
        scale = max(1.0, max(abs(float(c)) for c in x.coords()))
        h = 1e-5 * scale
    if h <= 0:
        raise ValueError("step h must be positive")
    fp = f(multiply(x, exp_basis(i, h)))
    fm = f(multiply(x, exp_basis(i, -h)))
    return (fp - fm) / (2.0 * h)


# ---------------------------------------------------------------------------
# PBW normal ordering in the universal enveloping algebra
# ---------------------------------------------------------------------------

Monomial = tuple[int, int, int, int]  # exponents of X1^a X2^b X3^c X4^d


@lru_cache(maxsize=None)
def _normal_form_word(word: tuple[int, ...]) -> tuple[tuple[Monomial, Fraction], ...]:
    """Normal form of a product of generators, as (monomial, coeff) pairs.

    Rewrites Xj Xi -> Xi Xj - [Xi, Xj] for the first adjacent inversion and
    recurses; termination and confluence are the standard PBW diamond
    argument for a Lie algebra with an ordered basis.
    """
    for k in range(len(word) - 1):
        j, i = word[k], word[k + 1]
        if j > i:
            swapped = word[:k] + (i, j) + word[k + 2 :]
            terms = dict(_normal_form_word(swapped))
            br = _BRACKET_TABLE.get((i, j))
            if br is not None:
                contracted = word[:k] + (br,) + word[k + 2 :]
                for mono, c in _normal_form_word(contracted):
                    newc = terms.get(mono, Fraction(0)) - c
                    if newc:
                        terms[mono] = newc
                    else:
                        terms.pop(mono, None)
            return tuple(sorted(terms.items()))
    expo = [0, 0, 0, 0]
    for g in word:
        expo[g - 1] += 1
    return ((tuple(expo), Fraction(1)),)


class PBWPolynomial:
    """Rational linear combination of ordered monomials X1^a X2^b X3^c X4^d.

    The zero polynomial has empty support; two elements are equal iff their
    normal forms coincide, which is what makes the rewriting confluent.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: dict[Monomial, Fraction] | None = None):
        self.terms: dict[Monomial, Fraction] = {}
        if terms:
            for mono, c in terms.items():
                c = Fraction(c)
                if c:
                    self.terms[tuple(mono)] = c

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero() -> "PBWPolynomial":
        return PBWPolynomial()

    @staticmethod
    def one() -> "PBWPolynomial":
        return PBWPolynomial({(0, 0, 0, 0): Fraction(1)})

    @staticmethod
    def generator(i: int) -> "PBWPolynomial":
        expo = [0, 0, 0, 0]
        expo[i - 1] = 1
        return PBWPolynomial({tuple(expo): Fraction(1)})

    @staticmethod
    def from_word(word: Sequence[int], coeff=1) -> "PBWPolynomial":
        """Normal form of coeff * X_{w1} X_{w2} ... (generator indices)."""
        coeff = Fraction(coeff)
        out: dict[Monomial, Fraction] = {}
        for mono, c in _normal_form_word(tuple(word)):
            out[mono] = out.get(mono, Fraction(0)) + coeff * c
        return PBWPolynomial(out)

    # -- ring operations ----------------------------------------------------

    def __add__(self, other: "PBWPolynomial") -> "PBWPolynomial":
        out = dict(self.terms)
        for mono, c in other.terms.items():
            out[mono] = out.get(mono, Fraction(0)) + c
        return PBWPolynomial(out)

    def __sub__(self, other: "PBWPolynomial") -> "PBWPolynomial":
        out = dict(self.terms)
        for mono, c in other.terms.items():
            out[mono] = out.get(mono, Fraction(0)) - c
        return PBWPolynomial(out)

    def __neg__(self) -> "PBWPolynomial":
        return PBWPolynomial({m: -c for m, c in self.terms.items()})

    def scale(self, c) -> "PBWPolynomial":
        c = Fraction(c)
        return PBWPolynomial({m: c * v for m, v in self.terms.items()})

    def __mul__(self, other: "PBWPolynomial") -> "PBWPolynomial":
        out: dict[Monomial, Fraction] = {}
        for m1, c1 in self.terms.items():
            w1 = _monomial_word(m1)
            for m2, c2 in other.terms.items():
                word = w1 + _monomial_word(m2)
                coeff = c1 * c2
                for mono, c in _normal_form_word(word):
                    out[mono] = out.get(mono, Fraction(0)) + coeff * c
        return PBWPolynomial(out)

    def commutator(self, other: "PBWPolynomial") -> "PBWPolynomial":
        return self * other - other * self

    # -- structure -----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        return isinstance(other, PBWPolynomial) and self.terms == other.terms

    def __hash__(self):
        return hash(tuple(sorted(self.terms.items())))

    def __repr__(self):
        return f"PBWPolynomial({self.serialize()!r})"

    # -- canonical text form --------------------------------------------------

    def serialize(self) -> str:
        """Canonical text form, terms sorted lexicographically by exponents."""
        if not self.terms:
            return "0"
        parts = []
        for mono in sorted(self.terms):
            a, b, c, d = mono
            coeff = self.terms[mono]
            parts.append(f"{coeff} * X1^{a} X2^{b} X3^{c} X4^{d}")
        return " + ".join(parts)

    @staticmethod
    def deserialize(text: str) -> "PBWPolynomial":
        text = text.strip()
        if text == "0":
            return PBWPolynomial.zero()
        terms: dict[Monomial, Fraction] = {}
        for part in text.split(" + "):
            coeff_str, mono_str = part.split(" * ")
            expo = []
            for factor in mono_str.split():
                expo.append(int(factor.split("^")[1]))
            terms[tuple(expo)] = Fraction(coeff_str)
        return PBWPolynomial(terms)


def _monomial_word(mono: Monomial) -> tuple[int, ...]:
    word: list[int] = []
    for gen, expo in enumerate(mono, start=1):
        word.extend([gen] * expo)
    return tuple(word)


def pbw_normal_form(word: Sequence[int], coeff=1) -> PBWPolynomial:
    """Normal ordering of a generator word with a rational prefactor."""
    return PBWPolynomial.from_word(word, coeff)


# handy aliases used by tests and the CLI identity suite
X1 = PBWPolynomial.generator(1)
X2 = PBWPolynomial.generator(2)
X3 = PBWPolynomial.generator(3)
X4 = PBWPolynomial.generator(4)
