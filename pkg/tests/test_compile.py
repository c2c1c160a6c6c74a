import random
from fractions import Fraction

import numpy as np
import pytest

from meadowprog.compile import (StraightLineProgram, compile_atom,
                                compile_binary, compile_numeral, compile_term,
                                compile_unary, execute_batch,
                                verify_equivalence)
from meadowprog.gen import random_polynomial_term, random_term
from meadowprog.pga import format_pga, parse_pga
from meadowprog.poly import poly_from_term
from meadowprog.compile import compile_polynomial
from meadowprog.term import parse_term, x
from meadowprog.thread import Terminated, run


def _run(p, values, meadow):
    return run(p.to_instr_seq(), [meadow.parse(str(v)) for v in values], meadow, 10_000)


def test_atoms():
    assert format_pga(compile_atom(x(2)).to_instr_seq()) == "a0.cp(x2);y.cp(a0);!"
    assert compile_atom(0).aux_count == 1
    with pytest.raises(ValueError):
        compile_atom(5)


def test_binary_register_counts(z7):
    x0, x1, x2 = (compile_atom(x(i)) for i in range(3))
    prod = compile_binary(x0, x1, "mul")
    assert prod.aux_count == 2
    assert format_pga(prod.to_instr_seq()) == \
        "a0.cp(x0);a1.set:0;a1.cp(x1);a0.set:m(a1);y.cp(a0);!"
    for u in range(7):
        for v in range(7):
            assert _run(prod, [u, v], z7).output == z7((u * v) % 7)
    three = compile_binary(compile_binary(x0, x1, "add"), compile_binary(x0, x2, "mul"), "add")
    assert three.aux_count == 3
    mixed = compile_binary(compile_binary(x0, x1, "add"), x2, "mul")
    assert mixed.aux_count == 2


def test_unary(q):
    p = compile_unary(compile_atom(x(0)), "inv")
    assert _run(p, [4], q).output == q.parse("1/4")
    assert _run(p, [0], q).output == q(0)
    assert _run(compile_unary(compile_atom(x(0)), "neg"), [4], q).output == q(-4)


@pytest.mark.parametrize("n", [0, 1, 2, 3, 7, 12, 255, -6])
def test_numerals(n, q):
    p = compile_numeral(n)
    assert p.aux_count <= 2
    assert _run(p, [], q).output == q(n)


def test_polynomials_use_three_registers(q, z7):
    rng = random.Random(8)
    for _ in range(150):
        t = random_polynomial_term(rng, 4, 3)
        p = compile_polynomial(poly_from_term(t))
        assert p.aux_count <= 3
        assert verify_equivalence(p, t, z7).passed
        assert verify_equivalence(p, t, q, samples=30, seed=1).passed


def test_absolute_value(qs):
    report = compile_term(parse_term("s(x0)*x0"), signed=True)
    for v in ("-5", "0", "7", "1/3"):
        out = _run(report.program, [v], qs)
        assert Fraction(str(out.output)) == abs(Fraction(v))


def test_i1_agreement(corpus, q):
    report = compile_term(parse_term("((x0+2)*x0)^-1"))
    assert report.aux_vars_used <= 5 and report.ladder_ok()
    rng = random.Random(1)
    for _ in range(100):
        v = q.value(q.random_raw(rng))
        ref = run(corpus("i1.pga"), [v], q, 100).output
        assert _run(report.program, [v], q).output == ref


def test_max_term(qs):
    report = compile_term(parse_term("(s(x0-x1)+1)*(x0-x1)/2+x1"), signed=True)
    assert report.aux_vars_used <= 8 and report.ladder_ok()
    rng = random.Random(5)
    for _ in range(50):
        u, v = (Fraction(rng.randint(-20, 20), rng.randint(1, 4)) for _ in range(2))
        out = _run(report.program, [u, v], qs)
        assert Fraction(str(out.output)) == max(u, v)


def test_totality_and_step_count(q):
    rng = random.Random(11)
    for _ in range(60):
        t = random_term(rng, 4, 3)
        report = compile_term(t)
        out = _run(report.program, [rng.randint(-4, 4) for _ in range(3)], q)
        assert isinstance(out, Terminated)
        assert out.steps == report.instruction_count


def test_signed_needs_flag():
    with pytest.raises(ValueError):
        compile_term(parse_term("s(x0)"))


@pytest.mark.parametrize("name", ["i1", "inv_product", "nested_inverse", "zero"])
def test_corpus_terms_verify_on_prime_fields(name, z7):
    from conftest import CORPUS
    from meadowprog.meadow import ModularMeadow
    t = parse_term((CORPUS / f"{name}.term").read_text())
    report = compile_term(t)
    for m in (z7, ModularMeadow(11)):
        result = verify_equivalence(report.program, t, m)
        assert result.passed and result.exhaustive


def test_program_round_trips_through_text(q):
    p = compile_term(parse_term("(x0+x1^-1)^-1")).program
    again = StraightLineProgram.from_instr_seq(parse_pga(format_pga(p.to_instr_seq())))
    assert again == p
    with pytest.raises(ValueError):
        StraightLineProgram.from_instr_seq(parse_pga("+a0.test:0;y.cp(a0);!"))


def test_execute_batch_matches_run(q):
    p = compile_term(parse_term("(x0*x1)^-1+x0")).program
    raw = [q.random_raw(random.Random(i)) for i in range(20)]
    cols = {0: np.array(raw[:10], dtype=object), 1: np.array(raw[10:], dtype=object)}
    got = execute_batch(p, cols, q, 10)
    for i in range(10):
        want = run(p.to_instr_seq(), [q.value(raw[i]), q.value(raw[10 + i])], q, 100)
        assert q.value(got[i]) == want.output


def test_verify_reports_mismatch(z6, corpus):
    result = verify_equivalence(corpus("div6.pga"), parse_term("0"), z6)
    assert not result.passed
    assert result.summary() == "fail at x0=3: expected 0, got divergent (mod:6)"
