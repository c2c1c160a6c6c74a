"""Normal forms for meadow terms.

The central data structure is a *case tree*: a binary tree whose inner nodes
split on a polynomial guard ``p`` (``0_p * zero_branch + 1_p * nonzero_branch``)
and whose leaves are quotients ``c * n1*...*nk / (d1*...*dl)`` of factored
polynomials (``c`` is +1 or -1).  Trees are built bottom-up from a term.
Every rewrite used is an identity of zero-totalized fields that holds
uniformly in the characteristic, so the resulting forms agree with the input
in every meadow, including ones with zero divisors such as ``Z/6Z``:

* ``(n/d)^-1 = d/n`` and ``(n/d)(n'/d') = nn'/(dd')`` need no case split;
* a sum is formed only once every denominator factor is decided on the
  current path; a factor known to vanish kills its leaf, and when all are
  nonzero the usual common-denominator sum applies;
* a factor occurring in both numerator and denominator cancels only when it
  is known to be nonzero.

From a tree we read off the Standard Meadow Form (nested guards, padded to a
uniform level) and a flat sum of quotients of polynomials.  Signed terms use
the same trees with sign atoms inside the polynomials and
``s(c*n/d) = s(c) * s(n1)...s(nk) * s(d1)...s(dl)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

from .poly import ONE_POLY, ZERO_POLY, Poly, poly_from_term, product
from .term import (ONE, Add, Inv, Mul, Neg, One, Sign, Term, VarRef, Zero,
                   has_sign, pseudo_unit, pseudo_zero)

__all__ = [
    "NormalizationLimitError", "SignedTermError",
    "Leaf", "Split", "build_case_tree", "tree_leaves",
    "smf_normalize", "smf_level", "ssmf_normalize",
    "Quotient", "SumOfQuotients", "to_sum_of_quotients",
    "Guard", "SignedBranch", "SignedBranchForm", "signed_standard_form",
]

DEFAULT_MAX_LEAVES = 50_000


class NormalizationLimitError(RuntimeError):
    """A case tree grew past the configured leaf limit."""


class SignedTermError(ValueError):
    """A term with the sign function reached an unsigned normalizer."""


# ---------------------------------------------------------------------------
# case trees

@dataclass(frozen=True)
class Leaf:
    coef: int             # +1 or -1
    num: tuple            # Poly factors in guard-key form
    den: tuple

    def is_zero(self) -> bool:
        return bool(self.num) and self.num[0].is_zero()

    def numerator(self) -> Poly:
        p = product(self.num)
        return -p if self.coef < 0 else p

    def denominator(self) -> Poly:
        return product(self.den)


@dataclass(frozen=True)
class Split:
    guard: Poly
    zero: object
    nonzero: object
    leaves: int = field(compare=False)


ZERO_LEAF = Leaf(1, (ZERO_POLY,), ())
ONE_LEAF = Leaf(1, (), ())


def _leaf_count(node) -> int:
    return node.leaves if isinstance(node, Split) else 1


def _sort(factors) -> tuple:
    return tuple(sorted(factors, key=Poly.sort_key))


def make_leaf(coef: int, num, den, path: dict) -> Leaf:
    """Canonical leaf for ``coef * prod(num) / prod(den)`` under ``path``."""
    out_num, out_den = [], []
    for factors, out in ((num, out_num), (den, out_den)):
        for f in factors:
            if f.is_zero():
                return ZERO_LEAF
            if f.is_unit_const():
                coef *= f.const_value()
                continue
            g = f.guard_key()
            if g is not f and g != f:
                coef = -coef
            if path.get(g) is True:
                return ZERO_LEAF
            out.append(g)
    # Cancel factors known to be nonzero.
    for g in list(out_num):
        if path.get(g) is False and g in out_den:
            out_num.remove(g)
            out_den.remove(g)
    return Leaf(coef, _sort(out_num), _sort(out_den))


class _Builder:
    def __init__(self, signed: bool, max_leaves: int):
        self.signed = signed
        self.max_leaves = max_leaves

    def split(self, guard: Poly, zero, nonzero):
        if zero == nonzero:
            return zero
        count = _leaf_count(zero) + _leaf_count(nonzero)
        if count > self.max_leaves:
            raise NormalizationLimitError(
                f"case tree exceeds {self.max_leaves} leaves")
        return Split(guard, zero, nonzero, count)

    def branch(self, guard: Poly, path: dict, build):
        """Split on ``guard`` unless the path already decides it."""
        decided = path.get(guard)
        if decided is not None:
            return build(path)
        return self.split(guard, build({**path, guard: True}),
                          build({**path, guard: False}))

    # -- combinators ----------------------------------------------------
    def unary(self, node, path, f):
        while isinstance(node, Split) and node.guard in path:
            node = node.zero if path[node.guard] else node.nonzero
        if isinstance(node, Split):
            g = node.guard
            return self.split(g, self.unary(node.zero, {**path, g: True}, f),
                              self.unary(node.nonzero, {**path, g: False}, f))
        return f(node, path)

    def binary(self, t1, t2, path, f):
        while isinstance(t1, Split) and t1.guard in path:
            t1 = t1.zero if path[t1.guard] else t1.nonzero
        if isinstance(t1, Split):
            g = t1.guard
            return self.split(g, self.binary(t1.zero, t2, {**path, g: True}, f),
                              self.binary(t1.nonzero, t2, {**path, g: False}, f))
        return self.unary(t2, path, lambda leaf2, p: f(t1, leaf2, p))

    # -- leaf operations ------------------------------------------------
    def add_leaves(self, l1: Leaf, l2: Leaf, path: dict):
        l1 = make_leaf(l1.coef, l1.num, l1.den, path)
        l2 = make_leaf(l2.coef, l2.num, l2.den, path)
        if l1.is_zero():
            return l2
        if l2.is_zero():
            return l1
        for g in l1.den + l2.den:
            if g not in path:
                return self.branch(g, path,
                                   lambda p: self.add_leaves(l1, l2, p))
        # Every denominator factor is nonzero here: use a common multiple.
        common = list(l1.den)
        rest2 = list(l2.den)
        for g in l1.den:
            if g in rest2:
                rest2.remove(g)
        common += rest2
        extra1 = list(common)
        for g in l1.den:
            extra1.remove(g)
        extra2 = list(common)
        for g in l2.den:
            extra2.remove(g)
        n1 = product(list(l1.num) + extra1)
        n2 = product(list(l2.num) + extra2)
        total = (n1 if l1.coef > 0 else -n1) + (n2 if l2.coef > 0 else -n2)
        return make_leaf(1, (total,), common, path)

    def mul_leaves(self, l1: Leaf, l2: Leaf, path: dict):
        return make_leaf(l1.coef * l2.coef, l1.num + l2.num, l1.den + l2.den, path)

    def inv_leaf(self, leaf: Leaf, path: dict):
        if leaf.is_zero():
            return ZERO_LEAF
        return make_leaf(leaf.coef, leaf.den, leaf.num, path)

    def neg_leaf(self, leaf: Leaf, path: dict):
        return make_leaf(-leaf.coef, leaf.num, leaf.den, path)

    def sign_leaf(self, leaf: Leaf, path: dict):
        if leaf.is_zero():
            return ZERO_LEAF
        signs = [Poly.sign_of(f) for f in leaf.num + leaf.den]
        return make_leaf(leaf.coef, signs, (), path)

    # -- terms ----------------------------------------------------------
    def build(self, t: Term):
        memo: dict = {}
        stack = [t]
        while stack:
            cur = stack[-1]
            if cur in memo:
                stack.pop()
                continue
            pending = [c for c in cur.args
                       if isinstance(c, Term) and c not in memo]
            if pending:
                stack.extend(pending)
                continue
            memo[cur] = self.node(cur, [memo[c] for c in cur.args
                                        if isinstance(c, Term)])
            stack.pop()
        return memo[t]

    def node(self, n: Term, kids):
        if isinstance(n, Zero):
            return ZERO_LEAF
        if isinstance(n, One):
            return ONE_LEAF
        if isinstance(n, VarRef):
            return Leaf(1, (Poly.variable(n.var),), ())
        if isinstance(n, Add):
            return self.binary(kids[0], kids[1], {}, self.add_leaves)
        if isinstance(n, Mul):
            return self.binary(kids[0], kids[1], {}, self.mul_leaves)
        if isinstance(n, Neg):
            return self.unary(kids[0], {}, self.neg_leaf)
        if isinstance(n, Inv):
            return self.unary(kids[0], {}, self.inv_leaf)
        if isinstance(n, Sign):
            if not self.signed:
                raise SignedTermError(
                    "term uses the sign function; use the signed normal forms")
            return self.unary(kids[0], {}, self.sign_leaf)
        raise TypeError(f"unknown term node {n!r}")


def build_case_tree(t: Term, signed: bool = False,
                    max_leaves: int = DEFAULT_MAX_LEAVES):
    """Case tree for ``t``.  ``signed`` admits the sign function."""
    if not signed and has_sign(t):
        raise SignedTermError(
            "term uses the sign function; use the signed normal forms")
    return _Builder(signed, max_leaves).build(t)


def tree_leaves(node, path=()):
    """Yield ``(path, leaf)`` pairs; ``path`` is a tuple of (guard, is_zero)."""
    if isinstance(node, Split):
        yield from tree_leaves(node.zero, path + ((node.guard, True),))
        yield from tree_leaves(node.nonzero, path + ((node.guard, False),))
    else:
        yield path, node


def tree_level(node) -> int:
    if isinstance(node, Split):
        return 1 + max(tree_level(node.zero), tree_level(node.nonzero))
    return 0


# ---------------------------------------------------------------------------
# Standard Meadow Form

def _quotient_term(leaf: Leaf) -> Term:
    return Mul(leaf.numerator().to_term(), Inv(leaf.denominator().to_term()))


def _emit_smf(node, level: int, pad_guard) -> Term:
    if level == 0:
        return _quotient_term(node)
    if isinstance(node, Split):
        guard, zero, nonzero = node.guard, node.zero, node.nonzero
    else:
        # Pad a shallow leaf with a redundant split on the enclosing guard.
        guard, zero, nonzero = pad_guard, node, node
    g = guard.to_term()
    return Add(Mul(pseudo_zero(g), _emit_smf(zero, level - 1, guard)),
               Mul(pseudo_unit(g), _emit_smf(nonzero, level - 1, guard)))


def smf_normalize(t: Term, max_leaves: int = DEFAULT_MAX_LEAVES) -> Term:
    """A Standard Meadow Form equal to ``t`` in every meadow."""
    tree = build_case_tree(t, signed=False, max_leaves=max_leaves)
    return _emit_smf(tree, tree_level(tree), None)


def ssmf_normalize(t: Term, max_leaves: int = DEFAULT_MAX_LEAVES) -> Term:
    """Signed Standard Meadow Form of a (possibly signed) term."""
    tree = build_case_tree(t, signed=True, max_leaves=max_leaves)
    return _emit_smf(tree, tree_level(tree), None)


def _is_poly_term(t: Term, signed: bool) -> bool:
    try:
        poly_from_term(t, allow_sign=signed)
    except ValueError:
        return False
    return True


def smf_level(t: Term, signed: bool = False) -> int | None:
    """The level of ``t`` as a (signed) standard meadow form, else None."""
    if isinstance(t, Mul) and isinstance(t.args[1], Inv):
        s, d = t.args[0], t.args[1].args[0]
        if _is_poly_term(s, signed) and _is_poly_term(d, signed):
            return 0
        return None
    if not isinstance(t, Add):
        return None
    left, right = t.args
    if not (isinstance(left, Mul) and isinstance(right, Mul)):
        return None
    zero_guard, s = left.args
    unit_guard, u = right.args
    if not isinstance(unit_guard, Mul) or not isinstance(unit_guard.args[1], Inv):
        return None
    g = unit_guard.args[0]
    if unit_guard != pseudo_unit(g) or zero_guard != pseudo_zero(g):
        return None
    if not _is_poly_term(g, signed):
        return None
    ls, lu = smf_level(s, signed), smf_level(u, signed)
    if ls is None or ls != lu:
        return None
    return ls + 1


# ---------------------------------------------------------------------------
# sums of quotients

@dataclass(frozen=True)
class Quotient:
    numerator: Poly
    denominator: Poly

    def to_term(self) -> Term:
        return Mul(self.numerator.to_term(), Inv(self.denominator.to_term()))

    def __str__(self):
        return f"({self.numerator})/({self.denominator})"


@dataclass(frozen=True)
class SumOfQuotients:
    """``sum(n_i * d_i^-1)`` with polynomial (or signed polynomial) parts."""

    summands: tuple

    def to_term(self) -> Term:
        out = None
        for q in self.summands:
            out = q.to_term() if out is None else Add(out, q.to_term())
        return out

    @property
    def signed(self) -> bool:
        return any(q.numerator.has_sign() or q.denominator.has_sign()
                   for q in self.summands)

    def __len__(self):
        return len(self.summands)

    def __iter__(self):
        return iter(self.summands)

    def __str__(self):
        return " + ".join(str(q) for q in self.summands)


def _leaf_quotients(path, leaf: Leaf):
    num = [leaf.numerator()]
    den = [leaf.denominator()]
    present = set(leaf.num) | set(leaf.den)
    zeros = []
    for guard, is_zero in path:
        if is_zero:
            zeros.append(guard)
        elif guard not in present:
            # 1_q = q/q; dropped when q already divides num or den since
            # q * 1_q = q and 1_q * q^-1 = q^-1.
            num.append(guard)
            den.append(guard)
    base_num, base_den = product(num), product(den)
    # prod(0_p) = prod(1 - p/p) expanded over subsets.
    for r in range(len(zeros) + 1):
        for subset in combinations(zeros, r):
            extra = product(subset)
            n = base_num * extra
            yield (-n if r % 2 else n), base_den * extra


def to_sum_of_quotients(t: Term, signed: bool = False,
                        max_leaves: int = DEFAULT_MAX_LEAVES) -> SumOfQuotients:
    """``t`` as a sum of quotients of (signed) polynomials.

    Equal in every meadow to ``t`` (in every signed ordered field for signed
    terms).  Quotients with equal denominators are merged; zero numerators
    are dropped; the zero term becomes ``0/1``.
    """
    if not signed and has_sign(t):
        raise SignedTermError(
            "term uses the sign function; pass signed=True or apply "
            "signed_standard_form")
    tree = build_case_tree(t, signed=signed, max_leaves=max_leaves)
    merged: dict = {}
    for path, leaf in tree_leaves(tree):
        if leaf.is_zero():
            continue
        for n, d in _leaf_quotients(path, leaf):
            merged[d] = merged.get(d, ZERO_POLY) + n
    summands = tuple(Quotient(n, d) for d, n in merged.items() if not n.is_zero())
    if not summands:
        summands = (Quotient(ZERO_POLY, ONE_POLY),)
    return SumOfQuotients(summands)


# ---------------------------------------------------------------------------
# signed polynomials as guarded branches

@dataclass(frozen=True)
class Guard:
    """``0_phi`` with ``phi`` one of ``s(u)``, ``1-s(u)``, ``1+s(u)``."""

    kind: str     # "s", "1-s" or "1+s"
    arg: Poly     # a plain polynomial

    def phi_term(self) -> Term:
        s = Sign(self.arg.to_term())
        if self.kind == "s":
            return s
        if self.kind == "1-s":
            return Add(ONE, Neg(s))
        return Add(ONE, s)

    def to_term(self) -> Term:
        return pseudo_zero(self.phi_term())

    def __str__(self):
        from .term import format_term
        return f"0_{{{format_term(self.phi_term())}}}"


@dataclass(frozen=True)
class SignedBranch:
    guards: tuple
    body: Poly

    def to_term(self) -> Term:
        out = None
        for g in self.guards:
            out = g.to_term() if out is None else Mul(out, g.to_term())
        body = self.body.to_term()
        return body if out is None else Mul(out, body)


@dataclass(frozen=True)
class SignedBranchForm:
    branches: tuple

    def to_term(self) -> Term:
        out = None
        for b in self.branches:
            out = b.to_term() if out is None else Add(out, b.to_term())
        return out

    def __len__(self):
        return len(self.branches)

    def __iter__(self):
        return iter(self.branches)

    def __str__(self):
        parts = []
        for b in self.branches:
            guards = "*".join(str(g) for g in b.guards)
            parts.append(f"{guards}*({b.body})" if guards else f"({b.body})")
        return " + ".join(parts)


def _innermost_sign_atom(p: Poly):
    found = []

    def visit(poly: Poly):
        for atom in poly.sign_atoms():
            if atom.arg.has_sign():
                visit(atom.arg)
            else:
                found.append(atom)

    visit(p)
    if not found:
        return None
    return min(found, key=lambda atom: atom.arg.sort_key())


_CASES = ((0, "s"), (1, "1-s"), (-1, "1+s"))


def _branches(p: Poly, guards: tuple, out: list):
    atom = _innermost_sign_atom(p)
    if atom is None:
        out.append(SignedBranch(guards, p))
        return
    for value, kind in _CASES:
        q = p.substitute_atom(atom, Poly.const(value))
        _branches(q, guards + (Guard(kind, atom.arg),), out)


def signed_standard_form(t: Term | Poly) -> SignedBranchForm:
    """Split a signed polynomial into at most ``3^n`` guarded polynomials.

    Innermost sign subterms are eliminated first; each ``s(u)`` is replaced
    by 0, 1 and -1 under the guards ``0_{s(u)}``, ``0_{1-s(u)}`` and
    ``0_{1+s(u)}`` respectively.
    """
    if isinstance(t, Term):
        from .term import has_inv
        if has_inv(t):
            raise ValueError(
                "signed_standard_form needs a signed polynomial (no inverse); "
                "convert to a sum of quotients first")
        p = poly_from_term(t, allow_sign=True)
    else:
        p = t
    out: list = []
    _branches(p, (), out)
    return SignedBranchForm(tuple(out))


def sign_atom_count(p: Poly) -> int:
    seen = set()

    def visit(poly):
        for atom in poly.sign_atoms():
            if atom not in seen:
                seen.add(atom)
                visit(atom.arg)

    visit(p)
    return len(seen)


