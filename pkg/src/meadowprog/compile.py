"""Compile meadow terms to straight-line instruction sequences.

Every sub-program leaves its result in ``a0``.  Two programs are combined by
running the one with more auxiliary variables first, clearing the registers
the other needs, running the other raised by one register, and folding
``a1`` into ``a0``.  Building terms bottom-up this way keeps the register
count at 2 for monomials, 3 for polynomials, 4 for quotients and 5 for sums
of quotients; with the sign function the ladder continues to 6, 7 and 8.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .meadow import Meadow, UnsupportedOperationError
from .normalize import (Guard, SignedBranchForm, SumOfQuotients,
                        signed_standard_form, to_sum_of_quotients)
from .pga import (HALT, Cp, InstrSeq, OutCp, Plain, Set0, Set1, SetA, SetAi,
                  SetM, SetMi, SetS, Test0, core_aux, is_straight_line,
                  raise_core)
from .poly import Poly, monomials_of
from .term import (Term, Var, eval_batch, free_vars, has_sign, x)
from .thread import (D, S, Assignment, PostCond, RegularThread, Terminated,
                     apply, extract)

__all__ = [
    "StraightLineProgram", "CompileReport", "compile_atom", "compile_unary",
    "compile_binary", "compile_numeral", "compile_monomial",
    "compile_polynomial", "compile_quotient", "compile_sum", "compile_term",
    "execute_batch", "verify_equivalence", "VerifyReport", "UNSIGNED_LADDER",
    "SIGNED_LADDER",
]

UNSIGNED_LADDER = {"monomial": 2, "polynomial": 3, "quotient": 4, "sum": 5}
SIGNED_LADDER = {"guard": 4, "branch": 5, "signed_polynomial": 6,
                 "signed_quotient": 7, "signed_sum": 8}


@dataclass(frozen=True)
class StraightLineProgram:
    """``body; y.cp(a0); !`` with an assignment-only body."""

    body: tuple

    def __post_init__(self):
        object.__setattr__(self, "body", tuple(self.body))
        for c in self.body:
            if isinstance(c, (Test0, OutCp)):
                raise ValueError(f"{c} is not allowed in a program body")

    @property
    def aux_count(self) -> int:
        used = [i for c in self.body for i in core_aux(c)]
        return 1 + max(used, default=0)

    def to_instr_seq(self) -> InstrSeq:
        return InstrSeq(tuple(Plain(c) for c in self.body)
                        + (Plain(OutCp(0)), HALT))

    @classmethod
    def from_instr_seq(cls, seq: InstrSeq) -> "StraightLineProgram":
        if not is_straight_line(seq):
            raise ValueError("not a straight-line instruction sequence")
        *body, out, _ = seq.prefix
        if out != Plain(OutCp(0)):
            raise ValueError("program must end with y.cp(a0);!")
        return cls(tuple(u.action for u in body))

    def raised(self, by: int = 1) -> "StraightLineProgram":
        return StraightLineProgram(tuple(raise_core(c, by) for c in self.body))

    @property
    def action_count(self) -> int:
        """Actions performed by one run, the final ``y.cp(a0)`` included."""
        return len(self.body) + 1

    def __str__(self):
        return str(self.to_instr_seq())


# ---------------------------------------------------------------------------
# combinators

def compile_atom(a) -> StraightLineProgram:
    """``x_i``, ``0`` or ``1`` (a :class:`Var` of input kind or an int)."""
    if isinstance(a, Var):
        if a.kind != "x":
            raise ValueError(f"only input variables can be compiled, got {a}")
        return StraightLineProgram((Cp(0, a.index),))
    if a == 0:
        return StraightLineProgram((Set0(0),))
    if a == 1:
        return StraightLineProgram((Set1(0),))
    raise ValueError(f"not an atom: {a!r}")


_UNARY = {"neg": SetAi, "inv": SetMi, "sign": SetS}


def compile_unary(p: StraightLineProgram, op: str) -> StraightLineProgram:
    return StraightLineProgram(p.body + (_UNARY[op](0),))


def compile_binary(p: StraightLineProgram, q: StraightLineProgram,
                   op: str) -> StraightLineProgram:
    """``p + q`` or ``p * q``; uses ``max(n, m)`` registers, ``n + 1`` if equal."""
    first, second = (p, q) if p.aux_count >= q.aux_count else (q, p)
    clear = tuple(Set0(i) for i in range(1, second.aux_count + 1))
    fold = SetA(0, 1) if op == "add" else SetM(0, 1)
    return StraightLineProgram(first.body + clear + second.raised().body + (fold,))


def compile_numeral(n: int) -> StraightLineProgram:
    """The integer ``n`` with two registers, by binary doubling."""
    if n in (0, 1):
        return compile_atom(n)
    if n < 0:
        return compile_unary(compile_numeral(-n), "neg")
    body = [Set1(0)]
    for bit in bin(n)[3:]:
        body.append(SetA(0, 0))
        if bit == "1":
            body += [Set1(1), SetA(0, 1)]
    return StraightLineProgram(tuple(body))


def _fold(programs, op):
    acc = None
    for p in programs:
        acc = p if acc is None else compile_binary(acc, p, op)
    return acc


class _Stages:
    def __init__(self):
        self.max: dict = {}

    def note(self, stage: str, p: StraightLineProgram) -> StraightLineProgram:
        self.max[stage] = max(self.max.get(stage, 0), p.aux_count)
        return p


def compile_monomial(coefficient: int, variables, stages=None) -> StraightLineProgram:
    """``coefficient * v1 * ... * vk`` with at most two registers."""
    factors = [compile_atom(v) for v in variables]
    magnitude = abs(coefficient)
    if magnitude != 1 or not factors:
        factors.insert(0, compile_numeral(magnitude))
    p = _fold(factors, "mul")
    if coefficient < 0:
        p = compile_unary(p, "neg")
    return stages.note("monomial", p) if stages else p


def compile_polynomial(poly: Poly, stages=None) -> StraightLineProgram:
    """Sum of monomials in canonical order; at most three registers."""
    if poly.is_zero():
        p = compile_atom(0)
    else:
        p = _fold([compile_monomial(m.coefficient, m.variables, stages)
                   for m in monomials_of(poly)], "add")
    return stages.note("polynomial", p) if stages else p


def compile_quotient(num: StraightLineProgram, den: StraightLineProgram | None,
                     stage: str = "quotient", stages=None) -> StraightLineProgram:
    p = num if den is None else compile_binary(num, compile_unary(den, "inv"), "mul")
    return stages.note(stage, p) if stages else p


def compile_sum(programs, stage: str = "sum", stages=None) -> StraightLineProgram:
    p = _fold(programs, "add")
    return stages.note(stage, p) if stages else p


# ---------------------------------------------------------------------------
# signed polynomials

def _compile_phi(g: Guard, stages) -> StraightLineProgram:
    s = compile_unary(compile_polynomial(g.arg, stages), "sign")
    if g.kind == "s":
        return s
    if g.kind == "1-s":
        return compile_binary(compile_atom(1), compile_unary(s, "neg"), "add")
    return compile_binary(compile_atom(1), s, "add")


def _compile_guard(g: Guard, stages) -> StraightLineProgram:
    # 0_phi = 1 + -(phi * phi^-1)
    phi = _compile_phi(g, stages)
    unit = compile_binary(phi, compile_unary(phi, "inv"), "mul")
    p = compile_binary(compile_atom(1), compile_unary(unit, "neg"), "add")
    return stages.note("guard", p)


def compile_signed_polynomial(poly: Poly, stages) -> tuple[StraightLineProgram, SignedBranchForm]:
    form = signed_standard_form(poly)
    branches = []
    for b in form:
        parts = [_compile_guard(g, stages) for g in b.guards]
        parts.append(compile_polynomial(b.body, stages))
        branches.append(stages.note("branch", _fold(parts, "mul")))
    return stages.note("signed_polynomial", _fold(branches, "add")), form


# ---------------------------------------------------------------------------
# terms

@dataclass
class CompileReport:
    program: StraightLineProgram
    aux_vars_used: int
    instruction_count: int
    signed: bool
    term: Term | None = None
    stages: dict = field(default_factory=dict)
    sum_of_quotients: SumOfQuotients | None = None
    quotient_programs: list = field(default_factory=list)
    verification: "VerifyReport | None" = None

    def ladder_ok(self) -> bool:
        ladder = dict(UNSIGNED_LADDER)
        if self.signed:
            ladder.update(SIGNED_LADDER)
        return all(self.stages.get(k, 0) <= v for k, v in ladder.items())

    def lines(self, verbose: bool = False) -> list[str]:
        from .term import format_term
        out = []
        if self.term is not None:
            out.append(f"term: {format_term(self.term)}")
        out += [f"aux_vars_used: {self.aux_vars_used}",
                f"instruction_count: {self.instruction_count}",
                f"signed: {str(self.signed).lower()}"]
        if verbose:
            for name, count in self.stages.items():
                out.append(f"stage {name}: {count}")
            if self.sum_of_quotients is not None:
                out.append(f"sum_of_quotients: {self.sum_of_quotients}")
            for i, p in enumerate(self.quotient_programs):
                out.append(f"quotient {i}: {p}")
        if self.verification is not None:
            out.append(f"verified: {self.verification.summary()}")
        return out


def compile_term(t: Term, signed: bool = False, max_leaves: int | None = None) -> CompileReport:
    """Straight-line program for ``t`` via a sum of quotients of polynomials."""
    if has_sign(t) and not signed:
        raise ValueError("term uses the sign function; compile with signed=True")
    stages = _Stages()
    kwargs = {} if max_leaves is None else {"max_leaves": max_leaves}
    soq = to_sum_of_quotients(t, signed=signed, **kwargs)
    quotients = []
    for q in soq:
        if signed:
            num, _ = compile_signed_polynomial(q.numerator, stages)
            den = None
            if q.denominator != Poly.const(1):
                den, _ = compile_signed_polynomial(q.denominator, stages)
            quotients.append(compile_quotient(num, den, "signed_quotient", stages))
        else:
            num = compile_polynomial(q.numerator, stages)
            den = None if q.denominator == Poly.const(1) else \
                compile_polynomial(q.denominator, stages)
            quotients.append(compile_quotient(num, den, "quotient", stages))
    program = compile_sum(quotients, "signed_sum" if signed else "sum", stages)
    return CompileReport(program=program, aux_vars_used=program.aux_count,
                         instruction_count=program.action_count, signed=signed,
                         term=t, stages=stages.max, sum_of_quotients=soq,
                         quotient_programs=quotients)


# ---------------------------------------------------------------------------
# vectorized execution and verification

def execute_batch(p: StraightLineProgram, columns: Mapping[int, np.ndarray],
                  meadow: Meadow, size: int) -> np.ndarray:
    """Output ``y`` of ``p`` at ``size`` points; ``columns`` maps input index
    to raw values (missing inputs are zero)."""
    m = meadow
    zeros = m.full(size, m.zero())
    regs: dict = {}

    def get(i):
        return regs.get(i, zeros)

    for c in p.body:
        if isinstance(c, Cp):
            regs[c.aux] = columns.get(c.inp, zeros)
        elif isinstance(c, Set0):
            regs[c.aux] = zeros
        elif isinstance(c, Set1):
            regs[c.aux] = m.full(size, m.one())
        elif isinstance(c, SetAi):
            regs[c.aux] = m.neg(get(c.aux))
        elif isinstance(c, SetMi):
            regs[c.aux] = m.inv_array(get(c.aux))
        elif isinstance(c, SetA):
            regs[c.aux] = m.add(get(c.aux), get(c.src))
        elif isinstance(c, SetM):
            regs[c.aux] = m.mul(get(c.aux), get(c.src))
        elif isinstance(c, SetS):
            regs[c.aux] = m.sign_array(get(c.aux))
        else:
            raise ValueError(f"unexpected instruction {c}")
    return get(0)


@dataclass(frozen=True)
class VerifyReport:
    passed: bool
    points: int
    exhaustive: bool
    meadow: str
    counterexample: dict | None = None     # input index -> formatted value
    expected: str | None = None
    actual: str | None = None

    def summary(self) -> str:
        if self.passed:
            how = "exhaustive" if self.exhaustive else "sampled"
            return f"pass ({self.points} points, {how}, {self.meadow})"
        point = ", ".join(f"x{i}={v}" for i, v in sorted(self.counterexample.items()))
        return (f"fail at {point}: expected {self.expected}, got {self.actual}"
                f" ({self.meadow})")


EXHAUSTIVE_LIMIT = 200_000


def _inputs_of(obj) -> set:
    if isinstance(obj, Term):
        return {v.index for v in free_vars(obj) if v.kind == "x"}
    if isinstance(obj, StraightLineProgram):
        return {c.inp for c in obj.body if isinstance(c, Cp)}
    if isinstance(obj, RegularThread):
        return {s.action.inp for s in obj.states
                if not isinstance(s, str) and isinstance(s.action, Cp)}
    if isinstance(obj, InstrSeq):
        return {u.action.inp for u in obj.instructions()
                if hasattr(u, "action") and isinstance(u.action, Cp)}
    if obj is S or obj is D or isinstance(obj, PostCond):
        out, seen, stack = set(), set(), [obj]
        while stack:
            n = stack.pop()
            if n is S or n is D or id(n) in seen:
                continue
            seen.add(id(n))
            if isinstance(n.action, Cp):
                out.add(n.action.inp)
            stack += [n.then, n.else_]
        return out
    raise TypeError(f"cannot verify {type(obj).__name__}")


def _points(meadow: Meadow, indices: list, samples: int, seed):
    """Columns of raw input values, and whether they are exhaustive."""
    if meadow.is_finite and len(meadow.elements()) ** len(indices) <= EXHAUSTIVE_LIMIT:
        grid = list(itertools.product(meadow.elements(), repeat=len(indices)))
        cols = {i: [pt[k] for pt in grid] for k, i in enumerate(indices)}
        return cols, len(grid), True
    rng = random.Random(seed)
    cols = {i: [meadow.random_raw(rng) for _ in range(samples)] for i in indices}
    return cols, samples, False


def _values(obj, cols: dict, meadow: Meadow, size: int, bound: int) -> list:
    """Output of ``obj`` at every point; None marks divergence."""
    arrays = {i: meadow.array(v) for i, v in cols.items()}
    if isinstance(obj, Term):
        return list(eval_batch(obj, {x(i): a for i, a in arrays.items()},
                               meadow, size))
    if isinstance(obj, InstrSeq) and is_straight_line(obj):
        try:
            obj = StraightLineProgram.from_instr_seq(obj)
        except ValueError:
            pass
    if isinstance(obj, StraightLineProgram):
        return list(execute_batch(obj, arrays, meadow, size))
    thread = extract(obj) if isinstance(obj, InstrSeq) else obj
    width = 1 + max(cols, default=-1)
    out = []
    for k in range(size):
        inputs = [cols[i][k] if i in cols else meadow.zero() for i in range(width)]
        r = apply(thread, Assignment.initial(meadow, inputs), bound)
        out.append(r.output.raw if isinstance(r, Terminated) else None)
    return out


def verify_equivalence(p, t, meadow: Meadow, samples: int = 100, seed=0,
                       bound: int = 100_000) -> VerifyReport:
    """Compare program ``p`` with reference ``t`` (a term, program or thread).

    Small finite meadows are checked exhaustively, others at ``samples``
    seeded random points.  Divergence of either side counts as a mismatch.
    """
    for obj in (p, t):
        if isinstance(obj, Term) and has_sign(obj) and not meadow.has_sign:
            raise UnsupportedOperationError(
                f"term uses the sign function but meadow {meadow} has none")
    indices = sorted(_inputs_of(p) | _inputs_of(t))
    cols, size, exhaustive = _points(meadow, indices, samples, seed)
    got = _values(p, cols, meadow, size, bound)
    want = _values(t, cols, meadow, size, bound)
    fmt = (lambda v: "divergent" if v is None else meadow.format(v))
    for k in range(size):
        if got[k] is None or want[k] is None or got[k] != want[k]:
            point = {i: meadow.format(cols[i][k]) for i in indices}
            return VerifyReport(False, k + 1, exhaustive, meadow.selector,
                                point, fmt(want[k]), fmt(got[k]))
    return VerifyReport(True, size, exhaustive, meadow.selector)


