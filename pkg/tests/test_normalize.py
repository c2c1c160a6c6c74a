import itertools
import random

import pytest

from meadowprog.gen import random_term
from meadowprog.normalize import (NormalizationLimitError, SignedTermError,
                                  build_case_tree, signed_standard_form,
                                  smf_level, smf_normalize, ssmf_normalize,
                                  to_sum_of_quotients)
from meadowprog.poly import Poly
from meadowprog.term import (evaluate, format_term, free_vars, has_inv,
                             parse_term, x)


def agree_z6(t, u, z6, nvars=2):
    for pt in itertools.product(range(6), repeat=nvars):
        env = {x(i): v for i, v in enumerate(pt)}
        if evaluate(t, env, z6) != evaluate(u, env, z6):
            return pt
    return None


def agree_random(t, u, m, rng, n=100, nvars=2):
    for _ in range(n):
        env = {x(i): m.value(m.random_raw(rng)) for i in range(nvars)}
        if evaluate(t, env, m) != evaluate(u, env, m):
            return env
    return None


def quotients(t, **kw):
    return [(str(q.numerator), str(q.denominator))
            for q in to_sum_of_quotients(parse_term(t), **kw)]


def test_sum_of_quotients_examples():
    assert quotients("x0") == [("x0", "1")]
    assert quotients("x0^-1") == [("1", "x0")]
    assert quotients("0") == [("0", "1")]
    assert quotients("x0 - x0") == [("0", "1")]


def test_nested_inverse_all_meadows(z6, q):
    t = parse_term("(x0 + x1^-1)^-1")
    soq = to_sum_of_quotients(t).to_term()
    assert agree_z6(t, soq, z6) is None
    assert agree_random(t, soq, q, random.Random(0), n=500) is None


def test_smf_examples(q, z6):
    p = parse_term("(x0+1)*x1")
    out = smf_normalize(p)
    assert smf_level(out) == 0
    assert format_term(out) == "(x0*x1+x1)/1"
    assert format_term(smf_normalize(parse_term("0"))) == "0/1"
    inv_xy = smf_normalize(parse_term("(x0*x1)^-1"))
    assert smf_level(inv_xy) == 0
    assert agree_z6(inv_xy, parse_term("x0^-1*x1^-1"), z6) is None


def test_smf_of_sum_needs_case_split(z6):
    t = parse_term("x0^-1 + x1^-1")
    out = smf_normalize(t)
    assert smf_level(out) == 2
    assert agree_z6(t, out, z6) is None


def test_smf_grammar_predicate_rejects_other_shapes():
    assert smf_level(parse_term("x0^-1 + x1")) is None
    assert smf_level(parse_term("x0^-1^-1/1")) is None
    assert smf_level(parse_term("x0/x1")) == 0


def test_inverse_of_quotient_needs_no_split():
    # (n/d)^-1 = d/n holds in every meadow.
    tree = build_case_tree(parse_term("(x0/x1)^-1"))
    assert not hasattr(tree, "guard")


@pytest.mark.parametrize("seed", range(4))
def test_random_terms_sound_in_all_meadows(seed, z6, q):
    rng = random.Random(seed)
    for _ in range(40):
        t = random_term(rng, 5, 2)
        smf = smf_normalize(t)
        soq = to_sum_of_quotients(t)
        assert smf_level(smf) is not None
        assert free_vars(smf) <= free_vars(t)
        assert free_vars(soq.to_term()) <= free_vars(t)
        for part in soq:
            assert not has_inv(part.numerator.to_term())
            assert not has_inv(part.denominator.to_term())
        assert agree_z6(t, smf, z6) is None, format_term(t)
        assert agree_z6(t, soq.to_term(), z6) is None, format_term(t)
        assert agree_random(t, soq.to_term(), q, rng, n=20) is None


def test_normalizers_reject_sign():
    t = parse_term("s(x0)^-1")
    with pytest.raises(SignedTermError):
        smf_normalize(t)
    with pytest.raises(SignedTermError):
        to_sum_of_quotients(t)


def test_leaf_limit():
    t = parse_term("+".join(f"x{i}^-1" for i in range(12)))
    with pytest.raises(NormalizationLimitError):
        smf_normalize(t, max_leaves=50)


def test_signed_standard_form_without_sign():
    form = signed_standard_form(parse_term("x0*x1 + 2"))
    assert len(form) == 1
    (branch,) = form
    assert branch.guards == ()
    assert branch.body == Poly.variable(x(0)) * Poly.variable(x(1)) + Poly.const(2)


def test_signed_standard_form_abs(qs):
    t = parse_term("s(x0)*x0")
    form = signed_standard_form(t)
    assert [(tuple(g.kind for g in b.guards), str(b.body)) for b in form] == \
        [(("s",), "0"), (("1-s",), "x0"), (("1+s",), "-x0")]
    for v in (-5, 0, 7):
        env = {"x0": v}
        assert evaluate(form.to_term(), env, qs) == qs(abs(v))


def test_signed_standard_form_two_signs(qs):
    t = parse_term("s(x0)*x1 + s(x1 - x0)*x0*x0")
    form = signed_standard_form(t)
    assert len(form) <= 9
    assert all(len(b.guards) == 2 for b in form)
    assert agree_random(t, form.to_term(), qs, random.Random(1), n=200) is None


def test_signed_standard_form_nested(qs):
    t = parse_term("s(s(x0) - x1)*x1")
    form = signed_standard_form(t)
    # Inner sign first, then the outer one in each branch.
    assert all(b.guards[0].arg == Poly.variable(x(0)) for b in form)
    assert agree_random(t, form.to_term(), qs, random.Random(2), n=200) is None


def test_signed_standard_form_rejects_inverse():
    with pytest.raises(ValueError):
        signed_standard_form(parse_term("s(x0)^-1"))


def test_signed_sum_of_quotients_and_ssmf(qs):
    rng = random.Random(8)
    for _ in range(60):
        t = random_term(rng, 4, 2, signed=True)
        soq = to_sum_of_quotients(t, signed=True)
        ssmf = ssmf_normalize(t)
        assert smf_level(ssmf, signed=True) is not None
        assert agree_random(t, soq.to_term(), qs, rng, n=20) is None
        assert agree_random(t, ssmf, qs, rng, n=20) is None
