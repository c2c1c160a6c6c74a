"""Meadow terms: AST, text syntax, evaluation and substitution.

Terms are immutable and hash-consed by value (the hash is computed once at
construction), so they can be shared freely as DAGs.  The grammar accepted by
:func:`parse_term` is::

    sum     := product (('+' | '-') product)*
    product := unary (('*' | '/') unary)*
    unary   := '-' unary | postfix
    postfix := atom ('^-1')*
    atom    := NUMERAL | VAR | 's(' sum ')' | '(' sum ')'

``a - b`` is sugar for ``a + (-b)``, ``a / b`` for ``a * b^-1`` and an integer
numeral ``n >= 2`` for a balanced sum of ``n`` ones.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Mapping

import numpy as np

from .meadow import Meadow, MeadowValue, BackendMismatchError, UnsupportedOperationError

__all__ = [
    "Var", "x", "a", "Y",
    "Term", "Zero", "One", "Add", "Mul", "Neg", "Inv", "Sign", "VarRef",
    "ZERO", "ONE", "numeral", "var", "pseudo_unit", "pseudo_zero",
    "TermSyntaxError", "parse_term", "format_term",
    "evaluate", "eval_raw", "eval_batch", "substitute", "free_vars",
    "has_sign", "has_inv", "term_depth", "term_size",
]


@dataclass(frozen=True, order=True)
class Var:
    """An input ``x<i>``, auxiliary ``a<i>`` or the output ``y``."""

    kind: str  # "x", "a" or "y"
    index: int | None = None

    def __post_init__(self):
        if self.kind == "y":
            if self.index is not None:
                raise ValueError("the output variable carries no index")
        elif self.kind in ("x", "a"):
            if self.index is None or self.index < 0:
                raise ValueError(f"variable {self.kind} needs an index >= 0")
        else:
            raise ValueError(f"unknown variable kind {self.kind!r}")

    def sort_key(self):
        return ("xay".index(self.kind), self.index or 0)

    def __str__(self):
        return "y" if self.kind == "y" else f"{self.kind}{self.index}"

    @classmethod
    def parse(cls, text: str) -> "Var":
        if text == "y":
            return Y
        m = re.fullmatch(r"([xa])(\d+)", text)
        if not m:
            raise ValueError(f"not a variable: {text!r}")
        return cls(m.group(1), int(m.group(2)))


def x(i: int) -> Var:
    return Var("x", i)


def a(i: int) -> Var:
    return Var("a", i)


Y = Var("y")


class Term:
    """Base class of the term AST.  ``args`` holds the children."""

    __slots__ = ("args", "_hash")
    op = "?"

    def __init__(self, *args):
        self.args = args
        self._hash = hash((self.op, args))

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Term):
            return NotImplemented
        return (self._hash == other._hash and self.op == other.op
                and self.args == other.args)

    def __repr__(self):
        return f"Term({format_term(self)!r})"

    def __str__(self):
        return format_term(self)

    # Arithmetic sugar; ints are promoted to numerals.
    def __add__(self, other):
        return Add(self, _lift(other))

    def __radd__(self, other):
        return Add(_lift(other), self)

    def __mul__(self, other):
        return Mul(self, _lift(other))

    def __rmul__(self, other):
        return Mul(_lift(other), self)

    def __neg__(self):
        return Neg(self)

    def __sub__(self, other):
        return Add(self, Neg(_lift(other)))

    def __rsub__(self, other):
        return Add(_lift(other), Neg(self))

    def __truediv__(self, other):
        return Mul(self, Inv(_lift(other)))

    def __rtruediv__(self, other):
        return Mul(_lift(other), Inv(self))

    def inv(self):
        return Inv(self)


class Zero(Term):
    __slots__ = ()
    op = "0"


class One(Term):
    __slots__ = ()
    op = "1"


class Add(Term):
    __slots__ = ()
    op = "+"


class Mul(Term):
    __slots__ = ()
    op = "*"


class Neg(Term):
    __slots__ = ()
    op = "-"


class Inv(Term):
    __slots__ = ()
    op = "inv"


class Sign(Term):
    __slots__ = ()
    op = "s"


class VarRef(Term):
    __slots__ = ()
    op = "var"

    @property
    def var(self) -> Var:
        return self.args[0]


ZERO = Zero()
ONE = One()


@lru_cache(maxsize=None)
def numeral(n: int) -> Term:
    """The term for integer ``n``: a balanced sum of ones, negated if n < 0."""
    if n < 0:
        return Neg(numeral(-n))
    if n == 0:
        return ZERO
    if n == 1:
        return ONE
    return Add(numeral(n - n // 2), numeral(n // 2))


def var(v: Var | str) -> VarRef:
    if isinstance(v, str):
        v = Var.parse(v)
    return VarRef(v)


def _lift(value) -> Term:
    if isinstance(value, Term):
        return value
    if isinstance(value, Var):
        return VarRef(value)
    if isinstance(value, int):
        return numeral(value)
    raise TypeError(f"cannot use {value!r} as a term")


def pseudo_unit(t: Term) -> Term:
    """``1_t = t * t^-1``."""
    return Mul(t, Inv(t))


def pseudo_zero(t: Term) -> Term:
    """``0_t = 1 - 1_t``."""
    return Add(ONE, Neg(Mul(t, Inv(t))))


# ---------------------------------------------------------------------------
# structural queries

def _fold(t: Term, leaf: Callable, node: Callable, memo=None):
    if memo is None:
        memo = {}
    stack = [t]
    while stack:
        cur = stack[-1]
        if cur in memo:
            stack.pop()
            continue
        if isinstance(cur, VarRef) or not cur.args:
            memo[cur] = leaf(cur)
            stack.pop()
            continue
        pending = [c for c in cur.args if c not in memo]
        if pending:
            stack.extend(pending)
            continue
        memo[cur] = node(cur, [memo[c] for c in cur.args])
        stack.pop()
    return memo[t]


def free_vars(t: Term) -> frozenset:
    return _fold(
        t,
        lambda n: frozenset([n.var]) if isinstance(n, VarRef) else frozenset(),
        lambda n, kids: frozenset().union(*kids))


def has_sign(t: Term) -> bool:
    return _fold(t, lambda n: False,
                 lambda n, kids: isinstance(n, Sign) or any(kids))


def has_inv(t: Term) -> bool:
    return _fold(t, lambda n: False,
                 lambda n, kids: isinstance(n, Inv) or any(kids))


def numeral_value(t: Term) -> int | None:
    """The integer ``n`` if ``t`` is exactly ``numeral(n)`` (n >= 0)."""
    if isinstance(t, Zero):
        return 0
    if isinstance(t, One):
        return 1
    if not isinstance(t, Add):
        return None
    count = _fold(
        t,
        lambda n: 1 if isinstance(n, One) else None,
        lambda n, kids: (sum(kids) if isinstance(n, Add) and None not in kids
                         else None))
    if count is not None and numeral(count) == t:
        return count
    return None


def term_depth(t: Term) -> int:
    """Height of the AST, counting numerals as leaves."""
    def node(n, kids):
        if isinstance(n, Add) and numeral_value(n) is not None:
            return 0
        return 1 + max(kids)
    return _fold(t, lambda n: 0, node)


def term_size(t: Term) -> int:
    """Number of nodes of ``t`` viewed as a tree (shared nodes count twice)."""
    return _fold(t, lambda n: 1, lambda n, kids: 1 + sum(kids))


# ---------------------------------------------------------------------------
# evaluation

def eval_raw(t: Term, lookup: Callable[[Var], object], meadow: Meadow):
    """Evaluate ``t`` on raw backend values; ``lookup`` maps a Var to a raw."""
    m = meadow
    ops = {
        "+": lambda n, k: m.add(k[0], k[1]),
        "*": lambda n, k: m.mul(k[0], k[1]),
        "-": lambda n, k: m.neg(k[0]),
        "inv": lambda n, k: m.inv(k[0]),
        "s": lambda n, k: m.sign(k[0]),
    }
    zero, one = m.zero(), m.one()

    def leaf(n):
        if isinstance(n, VarRef):
            return lookup(n.var)
        return zero if isinstance(n, Zero) else one

    if has_sign(t) and not m.has_sign:
        raise UnsupportedOperationError(
            f"term uses the sign function but meadow {m.selector} has none")
    return _fold(t, leaf, lambda n, k: ops[n.op](n, k))


def evaluate(t: Term, assignment: Mapping, meadow: Meadow) -> MeadowValue:
    """Value of ``t`` in ``meadow`` under ``assignment`` (unbound vars are 0).

    ``assignment`` maps :class:`Var` (or names like ``"x0"``) to
    :class:`MeadowValue`, ints or value strings.
    """
    raws = {}
    for key, value in dict(assignment).items():
        v = Var.parse(key) if isinstance(key, str) else key
        if isinstance(value, MeadowValue):
            if value.meadow != meadow:
                raise BackendMismatchError(
                    f"assignment value from {value.meadow}, expected {meadow}")
            raws[v] = value.raw
        elif isinstance(value, str):
            raws[v] = meadow.parse_raw(value)
        else:
            raws[v] = meadow.from_int(value)
    zero = meadow.zero()
    return MeadowValue(meadow, eval_raw(t, lambda v: raws.get(v, zero), meadow))


def eval_batch(t: Term, columns: Mapping[Var, np.ndarray], meadow: Meadow,
               size: int) -> np.ndarray:
    """Evaluate ``t`` at ``size`` points at once.

    ``columns`` maps variables to arrays of raw values; missing variables
    are zero at every point.
    """
    m = meadow
    zeros = m.full(size, m.zero())
    ones = m.full(size, m.one())
    ops = {
        "+": lambda k: m.add(k[0], k[1]),
        "*": lambda k: m.mul(k[0], k[1]),
        "-": lambda k: m.neg(k[0]),
        "inv": lambda k: m.inv_array(k[0]),
        "s": lambda k: m.sign_array(k[0]),
    }

    def leaf(n):
        if isinstance(n, VarRef):
            return columns.get(n.var, zeros)
        return zeros if isinstance(n, Zero) else ones

    return _fold(t, leaf, lambda n, k: ops[n.op](k))


# ---------------------------------------------------------------------------
# substitution

_REBUILD = {"+": Add, "*": Mul, "-": Neg, "inv": Inv, "s": Sign}


def substitute(t: Term, sigma: Mapping[Var, Term], memo=None) -> Term:
    """Simultaneous substitution ``t^sigma``; identity off ``sigma``'s domain."""
    if not sigma:
        return t

    def leaf(n):
        if isinstance(n, VarRef):
            return sigma.get(n.var, n)
        return n

    def node(n, kids):
        if all(k is c for k, c in zip(kids, n.args)):
            return n
        return _REBUILD[n.op](*kids)

    return _fold(t, leaf, node, memo)


# ---------------------------------------------------------------------------
# text syntax

class TermSyntaxError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+)|(?P<var>[xa]\d+|y)|(?P<sign>s\s*\()|(?P<inv>\^\s*-\s*1)"
    r"|(?P<op>[-+*/()]))")


def _tokenize(text: str):
    pos = 0
    tokens = []
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            raise TermSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        start = m.start(kind)
        value = m.group(kind)
        tokens.append((kind, "s(" if kind == "sign" else value, start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op):
        kind, value, pos = self.take()
        if kind != "op" or value != op:
            raise TermSyntaxError(f"expected {op!r}, found {value or 'end'!r}", pos)

    def parse(self) -> Term:
        t = self.sum()
        kind, value, pos = self.peek()
        if kind != "end":
            raise TermSyntaxError(f"unexpected {value!r}", pos)
        return t

    def sum(self) -> Term:
        t = self.product()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value == "+":
                self.take()
                t = Add(t, self.product())
            elif kind == "op" and value == "-":
                self.take()
                t = Add(t, Neg(self.product()))
            else:
                return t

    def product(self) -> Term:
        t = self.unary()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value == "*":
                self.take()
                t = Mul(t, self.unary())
            elif kind == "op" and value == "/":
                self.take()
                t = Mul(t, Inv(self.unary()))
            else:
                return t

    def unary(self) -> Term:
        kind, value, _ = self.peek()
        if kind == "op" and value == "-":
            self.take()
            return Neg(self.unary())
        return self.postfix()

    def postfix(self) -> Term:
        t = self.atom()
        while self.peek()[0] == "inv":
            self.take()
            t = Inv(t)
        return t

    def atom(self) -> Term:
        kind, value, pos = self.take()
        if kind == "num":
            return numeral(int(value))
        if kind == "var":
            return VarRef(Var.parse(value))
        if kind == "sign":
            inner = self.sum()
            self.expect_op(")")
            return Sign(inner)
        if kind == "op" and value == "(":
            inner = self.sum()
            self.expect_op(")")
            return inner
        raise TermSyntaxError(f"unexpected {value or 'end of input'!r}", pos)


def parse_term(text: str) -> Term:
    """Parse the textual term syntax; ``parse_term(format_term(t)) == t``."""
    return _Parser(text).parse()


_SUM, _PRODUCT, _UNARY, _POSTFIX, _ATOM = range(5)


def format_term(t: Term) -> str:
    """Compact text for ``t`` (numerals and ``-``/``/`` sugar re-applied)."""
    memo: dict = {}

    def fmt(n: Term) -> tuple[str, int]:
        hit = memo.get(n)
        if hit is not None:
            return hit
        out = _format_node(n, fmt)
        memo[n] = out
        return out

    return fmt(t)[0]


def _wrap(pair, level):
    text, prec = pair
    return text if prec >= level else f"({text})"


def _format_node(n: Term, fmt) -> tuple[str, int]:
    if isinstance(n, VarRef):
        return str(n.var), _ATOM
    value = numeral_value(n)
    if value is not None:
        return str(value), _ATOM
    if isinstance(n, Add):
        left, right = n.args
        if isinstance(right, Neg):
            return f"{_wrap(fmt(left), _SUM)}-{_wrap(fmt(right.args[0]), _PRODUCT)}", _SUM
        return f"{_wrap(fmt(left), _SUM)}+{_wrap(fmt(right), _PRODUCT)}", _SUM
    if isinstance(n, Mul):
        left, right = n.args
        if isinstance(right, Inv):
            return f"{_wrap(fmt(left), _PRODUCT)}/{_wrap(fmt(right.args[0]), _UNARY)}", _PRODUCT
        return f"{_wrap(fmt(left), _PRODUCT)}*{_wrap(fmt(right), _UNARY)}", _PRODUCT
    if isinstance(n, Neg):
        return "-" + _wrap(fmt(n.args[0]), _UNARY), _UNARY
    if isinstance(n, Inv):
        return _wrap(fmt(n.args[0]), _POSTFIX) + "^-1", _POSTFIX
    if isinstance(n, Sign):
        return f"s({fmt(n.args[0])[0]})", _ATOM
    raise TypeError(f"unknown term node {n!r}")
