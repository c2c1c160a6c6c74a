"""Canonical polynomials with integer coefficients.

Atoms are variables or *sign atoms* ``s(p)`` for a polynomial ``p``, so the
same type covers polynomials (over the ring signature) and signed polynomials.
Sign atoms are kept canonical: their argument is primitive (content 1) with a
positive leading coefficient, constants are folded, and powers are reduced
with ``s(p)^3 = s(p)``.  Those rewrites hold in ordered fields; they are only
applied when a sign atom is formed, i.e. on signed input.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from typing import Iterable

from .term import (ZERO, Add, Inv, Mul, Neg, One, Sign, Term, Var, VarRef,
                   Zero, numeral)

__all__ = ["SignAtom", "Poly", "Monomial", "NotPolynomialError",
           "poly_from_term", "poly_to_monomials"]


class NotPolynomialError(ValueError):
    pass


def _atom_key(atom):
    if isinstance(atom, Var):
        return (0,) + atom.sort_key()
    return (1, atom.arg.sort_key())


@dataclass(frozen=True)
class SignAtom:
    arg: "Poly"

    def __str__(self):
        return f"s({self.arg})"


def _mono_key(mono):
    # Descending total degree, then variables in index order.
    degree = sum(e for _, e in mono)
    return (-degree, tuple((_atom_key(a), -e) for a, e in mono))


def _mono_mul(m1, m2):
    if not m1:
        return m2
    if not m2:
        return m1
    exps = dict(m1)
    for atom, e in m2:
        exps[atom] = exps.get(atom, 0) + e
    return _mono_canon(exps)


def _mono_canon(exps: dict):
    out = []
    for atom, e in exps.items():
        if isinstance(atom, SignAtom) and e >= 3:
            e = 2 - (e % 2)
        if e:
            out.append((atom, e))
    out.sort(key=lambda ae: _atom_key(ae[0]))
    return tuple(out)


class Poly:
    """An immutable polynomial: a map from monomials to nonzero integers."""

    __slots__ = ("terms", "_hash", "_order")

    def __init__(self, terms: dict | None = None):
        clean = {m: c for m, c in (terms or {}).items() if c}
        self.terms = clean
        self._order = None
        self._hash = hash(frozenset(clean.items()))

    # -- constructors -----------------------------------------------------
    @classmethod
    def const(cls, c: int) -> "Poly":
        return cls({(): c})

    @classmethod
    def variable(cls, v: Var) -> "Poly":
        return cls({((v, 1),): 1})

    @classmethod
    def sign_of(cls, p: "Poly") -> "Poly":
        """Canonical ``s(p)``."""
        if p.is_const():
            c = p.const_value()
            return cls.const((c > 0) - (c < 0))
        content = reduce(math.gcd, p.terms.values())
        lead = p.terms[p.ordered()[0]]
        if lead < 0:
            content = -content
        q = Poly({m: c // content for m, c in p.terms.items()})
        atom = cls({((SignAtom(q), 1),): 1})
        return -atom if content < 0 else atom

    # -- queries ----------------------------------------------------------
    def ordered(self) -> list:
        if self._order is None:
            self._order = sorted(self.terms, key=_mono_key)
        return self._order

    def sort_key(self):
        return tuple((_mono_key(m), c) for m, c in
                     ((m, self.terms[m]) for m in self.ordered()))

    def is_zero(self) -> bool:
        return not self.terms

    def is_const(self) -> bool:
        return all(not m for m in self.terms)

    def const_value(self) -> int:
        return self.terms.get((), 0)

    def is_unit_const(self) -> bool:
        return self.is_const() and self.const_value() in (1, -1)

    def degree(self) -> int:
        return max((sum(e for _, e in m) for m in self.terms), default=0)

    def atoms(self) -> set:
        return {atom for m in self.terms for atom, _ in m}

    def sign_atoms(self) -> set:
        return {atom for atom in self.atoms() if isinstance(atom, SignAtom)}

    def has_sign(self) -> bool:
        return bool(self.sign_atoms())

    def variables(self) -> set:
        out = set()
        for atom in self.atoms():
            if isinstance(atom, Var):
                out.add(atom)
            else:
                out |= atom.arg.variables()
        return out

    def guard_key(self) -> "Poly":
        """``self`` or ``-self``, chosen so that the leading coefficient is
        positive; both vanish at the same points."""
        if self.terms and self.terms[self.ordered()[0]] < 0:
            return -self
        return self

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other: "Poly") -> "Poly":
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0) + c
        return Poly(out)

    def __neg__(self) -> "Poly":
        return Poly({m: -c for m, c in self.terms.items()})

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def __mul__(self, other: "Poly") -> "Poly":
        if not self.terms or not other.terms:
            return ZERO_POLY
        if self.is_const() and self.const_value() == 1:
            return other
        if other.is_const() and other.const_value() == 1:
            return self
        out: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _mono_mul(m1, m2)
                out[m] = out.get(m, 0) + c1 * c2
        return Poly(out)

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Poly):
            return NotImplemented
        return self._hash == other._hash and self.terms == other.terms

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Poly({self})"

    def __str__(self):
        from .term import format_term
        return format_term(self.to_term())

    def substitute_atom(self, target, value: "Poly") -> "Poly":
        """Replace every occurrence of ``target`` (also inside sign atoms)."""
        result = ZERO_POLY
        for m, c in self.terms.items():
            acc = Poly.const(c)
            for atom, e in m:
                if atom == target:
                    factor = value
                elif isinstance(atom, SignAtom):
                    factor = Poly.sign_of(atom.arg.substitute_atom(target, value))
                else:
                    factor = Poly({((atom, 1),): 1})
                for _ in range(e):
                    acc = acc * factor
            result = result + acc
        return result

    # -- conversion -------------------------------------------------------
    def to_term(self) -> Term:
        if not self.terms:
            return ZERO
        out = None
        for m in self.ordered():
            mono = _monomial_term(self.terms[m], m)
            out = mono if out is None else Add(out, mono)
        return out


ZERO_POLY = Poly()
ONE_POLY = Poly.const(1)


def _atom_term(atom) -> Term:
    if isinstance(atom, Var):
        return VarRef(atom)
    return Sign(atom.arg.to_term())


def _monomial_term(coef: int, mono) -> Term:
    factors = [_atom_term(atom) for atom, e in mono for _ in range(e)]
    magnitude = abs(coef)
    if not factors:
        body = numeral(magnitude)
    else:
        body = factors[0]
        for f in factors[1:]:
            body = Mul(body, f)
        if magnitude != 1:
            body = Mul(numeral(magnitude), body)
    return Neg(body) if coef < 0 else body


def poly_from_term(t: Term, allow_sign: bool = False) -> Poly:
    """Expand a polynomial (or, with ``allow_sign``, signed polynomial) term."""
    memo: dict = {}

    def conv(n: Term) -> Poly:
        hit = memo.get(n)
        if hit is not None:
            return hit
        if isinstance(n, Zero):
            out = ZERO_POLY
        elif isinstance(n, One):
            out = ONE_POLY
        elif isinstance(n, VarRef):
            out = Poly.variable(n.var)
        elif isinstance(n, Add):
            out = conv(n.args[0]) + conv(n.args[1])
        elif isinstance(n, Mul):
            out = conv(n.args[0]) * conv(n.args[1])
        elif isinstance(n, Neg):
            out = -conv(n.args[0])
        elif isinstance(n, Sign):
            if not allow_sign:
                raise NotPolynomialError("sign function in a plain polynomial")
            out = Poly.sign_of(conv(n.args[0]))
        elif isinstance(n, Inv):
            raise NotPolynomialError("inverse inside a polynomial")
        else:
            raise TypeError(f"unknown term node {n!r}")
        memo[n] = out
        return out

    return conv(t)


@dataclass(frozen=True)
class Monomial:
    """``coefficient * v1 * v2 * ...``; ``variables`` is sorted, with repeats."""

    coefficient: int
    variables: tuple

    @property
    def degree(self) -> int:
        return len(self.variables)

    def to_term(self) -> Term:
        mono = tuple((v, self.variables.count(v))
                     for v in sorted(set(self.variables), key=Var.sort_key))
        return _monomial_term(self.coefficient, mono)

    def __str__(self):
        from .term import format_term
        return format_term(self.to_term())


def monomials_of(p: Poly) -> list[Monomial]:
    out = []
    for m in p.ordered():
        if any(isinstance(atom, SignAtom) for atom, _ in m):
            raise NotPolynomialError("signed polynomial has no plain monomials")
        variables = tuple(v for v, e in m for _ in range(e))
        out.append(Monomial(p.terms[m], variables))
    return out


def poly_to_monomials(p: Term | Poly) -> list[Monomial]:
    """Sum-of-monomials expansion, ordered by descending degree then index."""
    if isinstance(p, Term):
        p = poly_from_term(p)
    return monomials_of(p)


def product(polys: Iterable[Poly]) -> Poly:
    out = ONE_POLY
    for p in polys:
        out = out * p
    return out
