"""Exact meadow backends.

A meadow is a commutative ring with a total inverse satisfying
``(x^-1)^-1 = x`` and ``x * (x * x^-1) = x``.  Three concrete backends are
provided:

* ``RationalMeadow`` (selector ``q``): the rationals with ``0^-1 = 0``.
* ``SignedRationalMeadow`` (``q-signed``): the same, plus the sign function.
* ``ModularMeadow(n)`` (``mod:<n>``): ``Z/nZ`` for square-free ``n``.

Backends operate on *raw* representations (``gmpy2.mpq`` for the rational
backends, ``int`` in ``[0, n)`` for the modular one).  ``MeadowValue`` wraps a
raw value together with its backend and refuses to mix backends.  The raw
operations ``add``/``mul``/``neg`` also work elementwise on numpy arrays; the
array versions of ``inv`` and ``sign`` are ``inv_array``/``sign_array``.
"""
from __future__ import annotations

import re

import gmpy2
import numpy as np
from gmpy2 import mpq

__all__ = [
    "MeadowError",
    "BackendMismatchError",
    "UnsupportedOperationError",
    "Meadow",
    "RationalMeadow",
    "SignedRationalMeadow",
    "ModularMeadow",
    "MeadowValue",
    "meadow_from_selector",
    "add",
    "mul",
    "neg",
    "inv",
    "sign",
    "pseudo_unit",
    "pseudo_zero",
]


class MeadowError(Exception):
    """Base class for meadow backend errors."""


class BackendMismatchError(MeadowError):
    pass


class UnsupportedOperationError(MeadowError):
    pass


_RATIONAL_RE = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(\d+))?\s*$")
_INT_RE = re.compile(r"^\s*[+-]?\d+\s*$")

# Largest modulus for which the inverse table is precomputed.
_TABLE_LIMIT = 1 << 20
# int64 products of residues must not overflow.
_ARRAY_LIMIT = 1 << 31


class Meadow:
    """Abstract backend.  Subclasses define the raw arithmetic."""

    selector: str = ""
    has_sign = False
    is_cancellation = True
    is_finite = False

    # -- raw arithmetic -------------------------------------------------
    def zero(self):
        raise NotImplementedError

    def one(self):
        raise NotImplementedError

    def from_int(self, n: int):
        raise NotImplementedError

    def add(self, a, b):
        return a + b

    def mul(self, a, b):
        return a * b

    def neg(self, a):
        return -a

    def inv(self, a):
        raise NotImplementedError

    def sign(self, a):
        raise UnsupportedOperationError(
            f"sign is not defined on meadow {self.selector!r}")

    def is_zero(self, a) -> bool:
        return a == 0

    # -- arrays ---------------------------------------------------------
    def array(self, raws) -> np.ndarray:
        raise NotImplementedError

    def full(self, count: int, raw) -> np.ndarray:
        return self.array([raw] * count)

    def inv_array(self, arr: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def sign_array(self, arr: np.ndarray) -> np.ndarray:
        raise UnsupportedOperationError(
            f"sign is not defined on meadow {self.selector!r}")

    # -- text, sampling -------------------------------------------------
    def parse_raw(self, text: str):
        raise NotImplementedError

    def format(self, raw) -> str:
        return str(raw)

    def random_raw(self, rng):
        raise NotImplementedError

    def elements(self):
        raise UnsupportedOperationError(
            f"meadow {self.selector!r} is infinite")

    # -- wrapped values -------------------------------------------------
    def value(self, raw) -> "MeadowValue":
        return MeadowValue(self, raw)

    def parse(self, text: str) -> "MeadowValue":
        return MeadowValue(self, self.parse_raw(text))

    def __call__(self, n) -> "MeadowValue":
        if isinstance(n, str):
            return self.parse(n)
        return MeadowValue(self, self.from_int(n))

    # -- identity -------------------------------------------------------
    def _key(self):
        return (type(self).__name__,)

    def __eq__(self, other):
        return isinstance(other, Meadow) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        return f"{type(self).__name__}()"

    def __str__(self):
        return self.selector


def _rational_inv(a):
    return a if a == 0 else 1 / a


_rational_inv_ufunc = np.frompyfunc(_rational_inv, 1, 1)


class RationalMeadow(Meadow):
    """The zero-totalized field of rationals."""

    selector = "q"

    def zero(self):
        return mpq(0)

    def one(self):
        return mpq(1)

    def from_int(self, n):
        return mpq(n)

    def inv(self, a):
        return a if a == 0 else 1 / a

    def array(self, raws):
        out = np.empty(len(raws), dtype=object)
        out[:] = [mpq(r) for r in raws]
        return out

    def inv_array(self, arr):
        return _rational_inv_ufunc(arr)

    def parse_raw(self, text):
        m = _RATIONAL_RE.match(text)
        if not m:
            raise ValueError(f"not a rational: {text!r}")
        num = int(m.group(1))
        den = int(m.group(2)) if m.group(2) is not None else 1
        if den == 0:
            raise ValueError(f"zero denominator in {text!r}")
        return mpq(num, den)

    def random_raw(self, rng):
        # Zero is hit often enough to exercise the totalized inverse.
        if rng.random() < 0.1:
            return mpq(0)
        return mpq(rng.randint(-12, 12), rng.randint(1, 7))


def _rational_sign(a):
    return mpq(gmpy2.sign(a))


_rational_sign_ufunc = np.frompyfunc(_rational_sign, 1, 1)


class SignedRationalMeadow(RationalMeadow):
    """Rationals with the sign function ``s``."""

    selector = "q-signed"
    has_sign = True

    def sign(self, a):
        return mpq(gmpy2.sign(a))

    def sign_array(self, arr):
        return _rational_sign_ufunc(arr)


def _factorize(n: int) -> list[tuple[int, int]]:
    factors = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            factors.append((p, e))
        p += 1 if p == 2 else 2
    if n > 1:
        factors.append((n, 1))
    return factors


class ModularMeadow(Meadow):
    """``Z/nZ`` with its (unique) meadow inverse; ``n`` must be square-free.

    The inverse is computed componentwise over the prime factors of ``n``:
    nonzero components are inverted, zero components stay zero.
    """

    is_finite = True

    def __init__(self, n: int):
        n = int(n)
        if n < 2:
            raise MeadowError(f"modulus must be at least 2, got {n}")
        factors = _factorize(n)
        if any(e > 1 for _, e in factors):
            raise MeadowError(
                f"Z/{n}Z carries no meadow structure: {n} is not square-free")
        self.n = n
        self.primes = tuple(p for p, _ in factors)
        self.selector = f"mod:{n}"
        self.is_cancellation = len(self.primes) == 1
        self._table = None
        self._np_table = None
        if n <= _TABLE_LIMIT:
            self._table = [self._crt_inverse(a) for a in range(n)]
            if n <= _ARRAY_LIMIT:
                self._np_table = np.array(self._table, dtype=np.int64)

    def _crt_inverse(self, a: int) -> int:
        n = self.n
        result = 0
        for p in self.primes:
            r = a % p
            r_inv = pow(r, -1, p) if r else 0
            cofactor = n // p
            # cofactor * (cofactor^-1 mod p) is the idempotent for component p.
            result += r_inv * cofactor * pow(cofactor, -1, p)
        return result % n

    def _key(self):
        return ("ModularMeadow", self.n)

    def __repr__(self):
        return f"ModularMeadow({self.n})"

    def zero(self):
        return 0

    def one(self):
        return 1

    def from_int(self, n):
        return int(n) % self.n

    def add(self, a, b):
        return (a + b) % self.n

    def mul(self, a, b):
        return (a * b) % self.n

    def neg(self, a):
        return (-a) % self.n

    def inv(self, a):
        if self._table is not None:
            return self._table[a]
        return self._crt_inverse(a)

    def array(self, raws):
        if self.n <= _ARRAY_LIMIT:
            return np.array([int(r) for r in raws], dtype=np.int64)
        out = np.empty(len(raws), dtype=object)
        out[:] = [int(r) for r in raws]
        return out

    def inv_array(self, arr):
        if self._np_table is not None:
            return self._np_table[arr]
        return np.frompyfunc(self.inv, 1, 1)(arr)

    def parse_raw(self, text):
        if not _INT_RE.match(text):
            raise ValueError(f"not an integer residue: {text!r}")
        return int(text) % self.n

    def random_raw(self, rng):
        return rng.randrange(self.n)

    def elements(self):
        return range(self.n)


_SELECTOR_RE = re.compile(r"^mod:(\d+)$")


def meadow_from_selector(text: str) -> Meadow:
    """Build a backend from ``q``, ``q-signed`` or ``mod:<n>``."""
    text = text.strip()
    if text == "q":
        return RationalMeadow()
    if text == "q-signed":
        return SignedRationalMeadow()
    m = _SELECTOR_RE.match(text)
    if m:
        return ModularMeadow(int(m.group(1)))
    raise MeadowError(
        f"unknown meadow {text!r} (expected q, q-signed or mod:<n>)")


class MeadowValue:
    """An element of a specific backend.  Immutable."""

    __slots__ = ("meadow", "raw")

    def __init__(self, meadow: Meadow, raw):
        object.__setattr__(self, "meadow", meadow)
        object.__setattr__(self, "raw", raw)

    def __setattr__(self, name, value):
        raise AttributeError("MeadowValue is immutable")

    def _peer(self, other) -> "MeadowValue":
        if isinstance(other, int):
            return MeadowValue(self.meadow, self.meadow.from_int(other))
        if not isinstance(other, MeadowValue):
            return NotImplemented
        if other.meadow != self.meadow:
            raise BackendMismatchError(
                f"cannot combine values of {self.meadow} and {other.meadow}")
        return other

    def __add__(self, other):
        other = self._peer(other)
        if other is NotImplemented:
            return other
        return MeadowValue(self.meadow, self.meadow.add(self.raw, other.raw))

    __radd__ = __add__

    def __mul__(self, other):
        other = self._peer(other)
        if other is NotImplemented:
            return other
        return MeadowValue(self.meadow, self.meadow.mul(self.raw, other.raw))

    __rmul__ = __mul__

    def __neg__(self):
        return MeadowValue(self.meadow, self.meadow.neg(self.raw))

    def __sub__(self, other):
        other = self._peer(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._peer(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def inv(self) -> "MeadowValue":
        return MeadowValue(self.meadow, self.meadow.inv(self.raw))

    def sign(self) -> "MeadowValue":
        return MeadowValue(self.meadow, self.meadow.sign(self.raw))

    def is_zero(self) -> bool:
        return self.meadow.is_zero(self.raw)

    def __eq__(self, other):
        if isinstance(other, int):
            return self.raw == self.meadow.from_int(other)
        if not isinstance(other, MeadowValue):
            return NotImplemented
        return self.meadow == other.meadow and self.raw == other.raw

    def __hash__(self):
        return hash((self.meadow, self.raw))

    def __repr__(self):
        return f"MeadowValue({self.meadow.selector}, {self.meadow.format(self.raw)})"

    def __str__(self):
        return self.meadow.format(self.raw)


def _check(*values: MeadowValue) -> Meadow:
    meadow = values[0].meadow
    for v in values[1:]:
        if v.meadow != meadow:
            raise BackendMismatchError(
                f"cannot combine values of {meadow} and {v.meadow}")
    return meadow


def add(a: MeadowValue, b: MeadowValue) -> MeadowValue:
    m = _check(a, b)
    return MeadowValue(m, m.add(a.raw, b.raw))


def mul(a: MeadowValue, b: MeadowValue) -> MeadowValue:
    m = _check(a, b)
    return MeadowValue(m, m.mul(a.raw, b.raw))


def neg(a: MeadowValue) -> MeadowValue:
    return MeadowValue(a.meadow, a.meadow.neg(a.raw))


def inv(a: MeadowValue) -> MeadowValue:
    return MeadowValue(a.meadow, a.meadow.inv(a.raw))


def sign(a: MeadowValue) -> MeadowValue:
    return MeadowValue(a.meadow, a.meadow.sign(a.raw))


def pseudo_unit(a: MeadowValue) -> MeadowValue:
    """``1_a = a * a^-1``."""
    m = a.meadow
    return MeadowValue(m, m.mul(a.raw, m.inv(a.raw)))


def pseudo_zero(a: MeadowValue) -> MeadowValue:
    """``0_a = 1 - 1_a``."""
    m = a.meadow
    return MeadowValue(m, m.add(m.one(), m.neg(m.mul(a.raw, m.inv(a.raw)))))


def is_square_free(n: int) -> bool:
    return n >= 1 and all(e == 1 for _, e in _factorize(n))
