import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from meadowprog.gen import random_polynomial_term, random_term
from meadowprog.meadow import UnsupportedOperationError
from meadowprog.poly import NotPolynomialError, poly_to_monomials
from meadowprog.term import (ONE, ZERO, Add, Inv, Mul, Neg, Sign, TermSyntaxError,
                             Var, evaluate, format_term, free_vars,
                             numeral, numeral_value, parse_term, pseudo_unit,
                             pseudo_zero, substitute, term_depth, var, x, a)


def test_parse_basic_shapes():
    assert parse_term("x0 + 1") == Add(var(x(0)), ONE)
    assert parse_term("x0 - x1") == Add(var(x(0)), Neg(var(x(1))))
    assert parse_term("x0 / x1") == Mul(var(x(0)), Inv(var(x(1))))
    assert parse_term("x0^-1^-1") == Inv(Inv(var(x(0))))
    assert parse_term("s(x0)") == Sign(var(x(0)))
    assert parse_term("-x0*x1") == Mul(Neg(var(x(0))), var(x(1)))
    assert parse_term(" ( ( x3 ) ) ") == var(x(3))


def test_numerals_are_sums_of_ones():
    three = parse_term("3")
    assert numeral_value(three) == 3
    assert three == numeral(3)
    assert isinstance(three, Add)
    assert format_term(three) == "3"
    assert parse_term("0") == ZERO and parse_term("1") == ONE
    assert parse_term("-4") == Neg(numeral(4))


@pytest.mark.parametrize("text, position", [("x0 +", 4), ("x0 $ 1", 3),
                                            ("(x0", 3), ("x0 x1", 3)])
def test_syntax_errors_carry_positions(text, position):
    with pytest.raises(TermSyntaxError) as info:
        parse_term(text)
    assert info.value.position == position


@pytest.mark.parametrize("text", [
    "((x0+2)*x0)^-1", "x0-x1-x2", "x0-(x1-x2)", "-(-x0)", "s(x0-x1)*x0",
    "x0/(x1*x2)", "(x0/x1)/x2", "x0^-1*x1", "2*x0+-3", "-x0^-1", "(-x0)^-1",
])
def test_print_parse_round_trip(text):
    t = parse_term(text)
    assert parse_term(format_term(t)) == t


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32), st.booleans())
def test_round_trip_random_terms(seed, signed):
    t = random_term(random.Random(seed), depth=5, variables=3, signed=signed)
    assert parse_term(format_term(t)) == t


def test_eval_examples(q, z6):
    t = parse_term("((x0+2)*x0)^-1")
    assert evaluate(t, {"x0": 2}, q) == q.parse("1/8")
    assert evaluate(parse_term("x0^-1"), {"x0": 0}, q) == q(0)
    for m in (q, z6):
        assert evaluate(pseudo_unit(var(x(0))), {"x0": 0}, m) == m(0)
        assert evaluate(pseudo_zero(var(x(0))), {"x0": 0}, m) == m(1)


def test_eval_matches_fraction_oracle(q):
    rng = random.Random(5)
    for _ in range(100):
        v = Fraction(rng.randint(-20, 20), rng.randint(1, 9))
        got = evaluate(parse_term("(x0*x0 - 3)/(x0+1)"), {"x0": str(v)}, q)
        den = v + 1
        want = (v * v - 3) * (0 if den == 0 else 1 / den)
        assert Fraction(str(got)) == want


def test_unbound_variables_are_zero(q):
    assert evaluate(parse_term("x5 + 1"), {}, q) == q(1)


def test_sign_needs_signed_backend(q, qs):
    t = parse_term("s(x0)")
    with pytest.raises(UnsupportedOperationError):
        evaluate(t, {"x0": -2}, q)
    assert evaluate(t, {"x0": -2}, qs) == qs(-1)


def test_substitute_examples():
    t = parse_term("x0 + a0")
    assert substitute(t, {a(0): var(x(1))}) == parse_term("x0 + x1")
    assert substitute(t, {}) is t
    # Simultaneous, not sequential.
    swap = substitute(parse_term("x0 - x1"), {x(0): var(x(1)), x(1): var(x(0))})
    assert swap == parse_term("x1 - x0")


@pytest.mark.parametrize("name", ["q", "z7"])
def test_substitution_lemma(name, request):
    m = request.getfixturevalue(name)
    rng = random.Random(2)
    vs = [x(0), x(1), x(2)]
    for _ in range(200):
        t = random_term(rng, 4, 3)
        sigma = {v: random_term(rng, 3, 3) for v in vs if rng.random() < 0.7}
        alpha = {v: m.value(m.random_raw(rng)) for v in vs}
        alpha2 = {v: evaluate(sigma[v], alpha, m) if v in sigma else alpha[v]
                  for v in vs}
        assert evaluate(t, alpha2, m) == evaluate(substitute(t, sigma), alpha, m)


def test_free_vars_and_depth():
    t = parse_term("(x0 + x2)^-1 * 3")
    assert free_vars(t) == {x(0), x(2)}
    assert term_depth(t) == 3
    assert term_depth(parse_term("7")) == 0


def test_var_parse_and_order():
    assert Var.parse("x3") == x(3)
    assert Var.parse("y").kind == "y"
    assert sorted([x(2), a(0), x(0)], key=Var.sort_key)[0] == x(0)


def test_poly_to_monomials_examples():
    monos = poly_to_monomials(parse_term("(x0+1)*x0"))
    assert [(m.coefficient, m.variables) for m in monos] == \
        [(1, (x(0), x(0))), (1, (x(0),))]
    assert poly_to_monomials(parse_term("0")) == []
    assert poly_to_monomials(parse_term("x0 - x0")) == []
    monos = poly_to_monomials(parse_term("x1*x0 + 3 + x0*x0*x1 - 2*x0"))
    assert [str(m) for m in monos] == ["x0*x0*x1", "x0*x1", "-(2*x0)", "3"]


def test_poly_to_monomials_rejects_non_polynomials():
    with pytest.raises(NotPolynomialError):
        poly_to_monomials(parse_term("x0^-1"))
    with pytest.raises(NotPolynomialError):
        poly_to_monomials(parse_term("s(x0)"))


def test_poly_to_monomials_exhaustive_z7(z7):
    rng = random.Random(9)
    for _ in range(60):
        p = random_polynomial_term(rng, 4, 2)
        monos = poly_to_monomials(p)
        total = sum((m.to_term() for m in monos), start=ZERO) if monos else ZERO
        for u, v in itertools.product(range(7), repeat=2):
            env = {"x0": u, "x1": v}
            assert evaluate(total, env, z7) == evaluate(p, env, z7)
