import random
from fractions import Fraction

import pytest

from meadowprog.gen import random_instr_seq, random_straight_thread
from meadowprog.meadow import UnsupportedOperationError
from meadowprog.pga import Opaque, SetM, Set1, parse_pga
from meadowprog.pga import Test0 as ZeroTest
from meadowprog.term import evaluate, format_term, parse_term, x
from meadowprog.thread import (D, S, Assignment, Divergent, PostCond,
                               RegularThread, Terminated, apply, extract,
                               format_finite, prefix, project, raise_thread,
                               run, thread_from_equations, thread_to_term,
                               UnsupportedActionError)

A, B, C, DD = (Opaque(n) for n in "abcd")


def frac(v):
    return Fraction(str(v))


def test_extract_basics():
    assert extract(parse_pga("!")).states == ("S",)
    assert extract(parse_pga("#0;a")).states == ("D",)
    assert project(extract(parse_pga("a")), 5) is prefix(A, D)
    assert project(extract(parse_pga("+a")), 5) is prefix(A, D)
    assert project(extract(parse_pga("#3;a;b")), 5) is D
    assert project(extract(parse_pga("+a;!;b;!")), 5) is PostCond(S, A, prefix(B, S))
    assert project(extract(parse_pga("-a;!;b;!")), 5) is PostCond(prefix(B, S), A, S)


def test_two_equation_regular_thread():
    t = extract(parse_pga("a;(+b;#2;#3;c;#4;+d;!;a)^w"))
    expected = thread_from_equations(
        {"T": ("T'", A, "T'"), "T'": (("T'", C, "T'"), B, ("S", DD, "T"))}, "T")
    assert t == expected
    assert t.format() == "T0 = a o T1\nT1 = c o T1 <| b |> (S <| d |> T0)"
    assert format_finite(project(t, 0)) == "D"
    assert project(t, 1) is prefix(A, D)
    assert project(t, 2) is prefix(A, prefix(B, D))
    assert project(t, 3) is prefix(A, PostCond(prefix(C, D), B, prefix(DD, D)))


def test_full_equations():
    t = extract(parse_pga("a;(+b;#2;#3;c;#4;+d;!;a)^w"))
    assert len(t.format(inline=False).splitlines()) == 4


def test_projection_depth_bound():
    rng = random.Random(3)
    for _ in range(50):
        t = extract(random_instr_seq(rng, 6))
        for n in range(8):
            p = project(t, n)
            assert _depth(p) <= n
            assert project(p, n) is p


def _depth(t):
    if t is S or t is D:
        return 0
    return 1 + max(_depth(t.then), _depth(t.else_))


def test_apply_stop(q):
    alpha = Assignment(q, {"x0": 3})
    out = apply(S, alpha, 0)
    assert out == Terminated(alpha, 0)
    assert apply(D, alpha, 5) == Divergent("deadlock", 5, 0)


def test_apply_does_not_mutate(q):
    alpha = Assignment(q, {"x0": 3})
    apply(prefix(Set1(0), S), alpha, 5)
    assert alpha["a0"] == q(0)


def test_i1_eight_steps(corpus, q):
    out = run(corpus("i1.pga"), [q(2)], q, 20)
    assert isinstance(out, Terminated)
    assert out.output == q.parse("1/8") and out.steps == 8
    assert isinstance(run(corpus("i1.pga"), [q(2)], q, 7), Divergent)


def test_i2_powers(corpus, q):
    out = run(corpus("i2.pga"), [q(2), q(3)], q, 100)
    assert out.output == q(8)
    out = run(corpus("i2.pga"), [q(2), q.parse("1/2")], q, 10_000)
    assert out == Divergent("bound-exhausted", 10_000, 10_000)


def test_div6(corpus, q, z6, z7):
    for v in ("0", "1", "-3", "7/2"):
        assert run(corpus("div6.pga"), [q.parse(v)], q, 20).output == q(0)
    out = run(corpus("div6.pga"), [z6(3)], z6, 1000)
    assert isinstance(out, Divergent) and out.reason == "deadlock"
    assert all(run(corpus("div6.pga"), [z7(v)], z7, 20).output == z7(0)
               for v in range(7))


def test_max_program(corpus, qs):
    rng = random.Random(12)
    for _ in range(60):
        u, v = (Fraction(rng.randint(-30, 30), rng.randint(1, 5)) for _ in range(2))
        out = run(corpus("max.pga"), [qs.parse(str(u)), qs.parse(str(v))], qs, 100)
        assert frac(out.output) == max(u, v)


def test_max_needs_signed_backend(corpus, q):
    with pytest.raises(UnsupportedOperationError):
        run(corpus("max.pga"), [q(1), q(2)], q, 100)


def test_opaque_actions_cannot_run(q):
    with pytest.raises(UnsupportedActionError):
        run(parse_pga("a;!"), [], q, 10)


def test_monotone_in_bound(q):
    rng = random.Random(1)
    for _ in range(40):
        seq = random_instr_seq(rng, 6, opaque=False)
        alpha = Assignment.initial(q, [q.value(q.random_raw(rng))])
        t = extract(seq)
        first = next((apply(t, alpha, n) for n in range(40)
                      if isinstance(apply(t, alpha, n), Terminated)), None)
        if first is not None:
            for bigger in (first.steps, first.steps + 1, 100):
                assert apply(t, alpha, bigger) == first


def test_projection_coherence(q):
    rng = random.Random(2)
    for _ in range(60):
        t = extract(random_instr_seq(rng, 6, opaque=False))
        alpha = Assignment.initial(q, [q.value(q.random_raw(rng))])
        for n in range(12):
            full = apply(t, alpha, n)
            cut = apply(project(t, n + 1), alpha, n)
            assert isinstance(full, Terminated) == isinstance(cut, Terminated)
            if isinstance(full, Terminated):
                assert full == cut
                assert apply(project(t, n + 5), alpha, n) == full


def test_i2_step_profile(corpus, q):
    for n in range(31):
        out = run(corpus("i2.pga"), [q(3), q(n)], q, 3 * n + 7)
        assert isinstance(out, Terminated) and out.steps <= 3 * n + 7


def test_straight_line_extracts_to_finite_test_free(corpus):
    t = extract(corpus("i1.pga"))
    assert t.is_finite() and not t.has_tests()
    assert not extract(corpus("i2.pga")).is_finite()


def test_thread_to_term_base_cases(q):
    assert thread_to_term(S, 0) == parse_term("0")
    assert thread_to_term(D, 3) == parse_term("0")


def test_thread_to_term_i1(corpus, q):
    t = thread_to_term(extract(corpus("i1.pga")), 0)
    ref = parse_term("((x0+2)*x0)^-1")
    rng = random.Random(0)
    for _ in range(100):
        v = q.value(q.random_raw(rng))
        assert evaluate(t, {x(0): v}, q) == evaluate(ref, {x(0): v}, q)


def test_thread_to_term_with_test(q, z6):
    seq = parse_pga("a0.cp(x0);+a0.test:0;a1.set:1;y.cp(a1);!")
    t = thread_to_term(extract(seq), 0)
    assert "x0/x0" in format_term(t)
    for m in (q, z6):
        for v in (0, 5):
            assert evaluate(t, {x(0): m(v)}, m) == run(seq, [m(v)], m, 10).output


def test_thread_to_term_refuses_cycles(corpus):
    with pytest.raises(ValueError):
        thread_to_term(extract(corpus("i2.pga")), 1)
    depth_term = thread_to_term(extract(corpus("i2.pga")), 1, depth=20)
    assert depth_term is not None


def test_raise_thread(q):
    t = prefix(SetM(0, 1), S)
    assert raise_thread(t) is prefix(SetM(1, 2), S)
    assert raise_thread(S) is S
    rng = random.Random(4)
    for _ in range(100):
        th = random_straight_thread(rng, 6)
        inputs = [q.value(q.random_raw(rng)) for _ in range(2)]
        a = apply(th, Assignment.initial(q, inputs), 50)
        b = apply(raise_thread(th), Assignment.initial(q, inputs), 50)
        assert a.output == b.output


def test_raise_regular_thread(corpus):
    t = extract(corpus("i2.pga"))
    up = raise_thread(t)
    assert isinstance(up, RegularThread)
    assert ZeroTest(2) in up.actions()


def test_assignment_defaults(q):
    alpha = Assignment.initial(q, [q(4)])
    assert alpha.is_initial()
    assert alpha["a7"] == q(0) and alpha["y"] == q(0)
    assert not alpha.set(x(0).__class__("a", 0), q(1).raw).is_initial()


def test_apply_deterministic(corpus, q):
    runs = {run(corpus("i2.pga"), [q(3), q(4)], q, 100) for _ in range(3)}
    assert len(runs) == 1
