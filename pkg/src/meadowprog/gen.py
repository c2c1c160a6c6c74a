"""Seeded random terms, threads and instruction sequences for testing."""
from __future__ import annotations

import random

from .pga import (HALT, Cp, InstrSeq, Jump, NegTest, Opaque, OutCp, Plain,
                  PosTest, Set0, Set1, SetA, SetAi, SetM, SetMi, SetS, Test0)
from .term import ONE, ZERO, Add, Inv, Mul, Neg, Sign, Term, numeral, var, x
from .thread import S, PostCond

__all__ = ["random_term", "random_polynomial_term", "random_straight_thread",
           "random_instr_seq"]


def random_term(rng: random.Random, depth: int = 6, variables: int = 4,
                signed: bool = False, leaf_bias: float = 0.3) -> Term:
    """A term of depth at most ``depth`` over ``x0..x{variables-1}``."""
    def go(d):
        if d == 0 or (d < depth and rng.random() < leaf_bias):
            r = rng.random()
            if r < 0.7:
                return var(x(rng.randrange(variables)))
            if r < 0.8:
                return ZERO
            if r < 0.9:
                return ONE
            return numeral(rng.randint(2, 3))
        ops = ["+", "+", "*", "*", "-", "inv", "inv"] + (["s", "s"] if signed else [])
        op = rng.choice(ops)
        if op == "+":
            return Add(go(d - 1), go(d - 1))
        if op == "*":
            return Mul(go(d - 1), go(d - 1))
        return {"-": Neg, "inv": Inv, "s": Sign}[op](go(d - 1))

    return go(depth)


def random_polynomial_term(rng: random.Random, depth: int = 4,
                           variables: int = 3) -> Term:
    def go(d):
        if d == 0 or rng.random() < 0.3:
            return var(x(rng.randrange(variables))) if rng.random() < 0.7 \
                else numeral(rng.randint(0, 3))
        op = rng.choice("+*-")
        if op == "-":
            return Neg(go(d - 1))
        return (Add if op == "+" else Mul)(go(d - 1), go(d - 1))

    return go(depth)


def _random_assign(rng, aux, inputs, signed):
    i = rng.randrange(aux)
    j = rng.randrange(aux)
    choices = [Cp(i, rng.randrange(inputs)), Set0(i), Set1(i), SetAi(i),
               SetMi(i), SetA(i, j), SetM(i, j), OutCp(i)]
    weights = [3, 1, 2, 1, 2, 3, 3, 2]
    if signed:
        choices.append(SetS(i))
        weights.append(1)
    return rng.choices(choices, weights)[0]


def random_straight_thread(rng: random.Random, length: int = 8, aux: int = 3,
                           inputs: int = 2, signed: bool = False):
    """A finite test-free thread ``c1 o ... o ck o S`` over the meadow actions.

    The last action copies a register to ``y`` so the output is rarely trivial.
    """
    t = PostCond(S, OutCp(rng.randrange(aux)), S)
    for _ in range(length - 1):
        c = _random_assign(rng, aux, inputs, signed)
        t = PostCond(t, c, t)
    return t


def random_instr_seq(rng: random.Random, max_len: int = 8, opaque: bool = True,
                     cyclic: float = 0.6) -> InstrSeq:
    """A random instruction sequence with tests, jumps and maybe a cycle."""
    actions = ([Opaque(n) for n in "abcd"] if opaque
               else [Test0(0), Set1(0), SetAi(0), Cp(0, 0), OutCp(0)])

    def prim():
        r = rng.random()
        if r < 0.3:
            return Jump(rng.randint(0, max_len + 2))
        if r < 0.4:
            return HALT
        act = rng.choice(actions)
        if r < 0.6:
            return PosTest(act)
        if r < 0.75:
            return NegTest(act)
        return Plain(act)

    prefix = tuple(prim() for _ in range(rng.randint(0, max_len)))
    cycle = None
    if rng.random() < cyclic or not prefix:
        cycle = tuple(prim() for _ in range(rng.randint(1, max_len)))
    return InstrSeq(prefix, cycle)


