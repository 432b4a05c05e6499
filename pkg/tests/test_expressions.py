import pytest
from mcdmg.errors import MissingIndicatorLiteral, SymbolAlreadyBound, UnknownVertex
from mcdmg.expressions import (
    One,
    Product,
    Quotient,
    Sum,
    Term,
    apply_proxy,
    canonical,
    chain_split,
    expand_total_probability,
    expr_from_json,
    expr_to_json,
    latex,
    marginalize,
    proxy,
    render,
    rzero,
    term,
    val,
)


def q(outcomes=(), do=(), cond=()):
    return term(outcomes, do, cond)


def test_canonical_flattens_products():
    a = q([val("A")])
    b = q([val("B")])
    e = Product((Product((a,)), b, One()))
    c = canonical(e)
    assert isinstance(c, Product) and len(c.factors) == 2
    assert canonical(Product((b, a))) == c


def test_canonical_quotient_units():
    a = q([val("A")])
    assert canonical(Quotient(a, One())) == a
    assert canonical(Quotient(a, a)) == One()


def test_canonical_sum_order():
    body = q([val("C")], cond=[val("A"), val("B")])
    e1 = Sum(val("B"), Sum(val("A"), body))
    e2 = Sum(val("A"), Sum(val("B"), body))
    assert canonical(e1) == canonical(e2)


def test_term_do_cond_disjoint():
    with pytest.raises(SymbolAlreadyBound):
        Term(frozenset({val("Y")}), frozenset({val("X")}), frozenset({val("X")}))


def test_apply_proxy_example(fig2b):
    e = q([val("CY")], do=[val("CX")], cond=[rzero("R_CY")])
    out = apply_proxy(e, "CY", fig2b)
    assert out == q([proxy("CY")], do=[val("CX")], cond=[rzero("R_CY")])


def test_apply_proxy_missing_literal(fig2b):
    e = q([val("CY")], do=[val("CX")])
    with pytest.raises(MissingIndicatorLiteral):
        apply_proxy(e, "CY", fig2b)


def test_apply_proxy_do_untouched(fig2b):
    e = q([val("CY")], do=[val("CX")], cond=[rzero("R_CY")])
    out = apply_proxy(e, "CY", fig2b)
    assert out.do == frozenset({val("CX")})
    assert out.outcomes == frozenset({proxy("CY")})


def test_apply_proxy_no_occurrence(fig2b):
    e = q([val("CY")], cond=[rzero("R_CY")])
    with pytest.raises(UnknownVertex):
        apply_proxy(e, "CZ", fig2b)


def test_apply_proxy_m_level(fig2a):
    e = q([val("CY")], cond=[rzero("R_Y1")])
    with pytest.raises(MissingIndicatorLiteral):
        apply_proxy(e, "CY", fig2a)  # needs both R_Y1=0 and R_Y2=0
    e = q([val("CY")], cond=[rzero("R_Y1"), rzero("R_Y2")])
    assert apply_proxy(e, "CY", fig2a).outcomes == frozenset({proxy("CY")})


def test_expand_total_probability():
    e = q([proxy("CY")], do=[val("CX")], cond=[rzero("R_CY")])
    out = expand_total_probability(e, "CZ")
    assert isinstance(out, Sum) and out.bound == val("CZ")
    left, right = sorted(out.body.factors, key=render)
    assert {left, right} == {
        q([proxy("CY")], do=[val("CX")], cond=[rzero("R_CY"), val("CZ")]),
        q([val("CZ")], do=[val("CX")], cond=[rzero("R_CY")]),
    }


def test_expand_rejects_bound_symbol():
    e = q([val("CY")], cond=[val("CZ")])
    with pytest.raises(SymbolAlreadyBound):
        expand_total_probability(e, "CZ")


def test_expand_then_marginalize_round_trip():
    e = q([val("CY")], do=[val("CX")])
    expanded = expand_total_probability(e, "CZ")
    assert canonical(marginalize(expanded)) == canonical(e)


def test_marginalize_outcome_sum():
    e = Sum(val("CZ"), q([val("CY"), val("CZ")], cond=[val("CX")]))
    assert marginalize(e) == q([val("CY")], cond=[val("CX")])
    bare = Sum(val("CZ"), q([val("CZ")]))
    assert marginalize(bare) == One()


def test_chain_split():
    e = q([val("CY"), val("CZ")], cond=[val("CX")])
    out = chain_split(e, val("CZ"))
    assert canonical(out) == canonical(
        Product(
            (
                q([val("CY")], cond=[val("CX"), val("CZ")]),
                q([val("CZ")], cond=[val("CX")]),
            )
        )
    )


def test_render_and_latex():
    e = Sum(
        val("CZ"),
        Product(
            (
                q([proxy("CY")], cond=[val("CX"), rzero("R_CY"), val("CZ")]),
                q([val("CZ")], cond=[rzero("R_CY")]),
            )
        ),
    )
    text = render(e)
    assert text == (
        "sum_{c_CZ} P(c_CY* | c_CX, c_CZ, R_CY=0) * P(c_CZ | R_CY=0)"
    )
    tex = latex(e)
    assert "\\sum_{c_{CZ}}" in tex and "R_{CY}{=}0" in tex


def test_json_round_trip():
    e = Quotient(
        q([proxy("CX"), rzero("R_CX")]),
        Product((q([rzero("R_CX")], cond=[val("CZ")]), One())),
    )
    again = expr_from_json(expr_to_json(e))
    assert canonical(again) == canonical(e)


def test_canonical_congruence_numeric(fig2b):
    # structurally equal canonical forms evaluate identically on tables
    from mcdmg import Budget, Grounding, enumerate_compatible, exact_tables, random_scm
    from mcdmg.oracle import evaluate

    madmg = next(iter(enumerate_compatible(fig2b, budget=Budget(2, 9))))
    scm = random_scm(madmg, seed=3)
    _, manifest = exact_tables(scm)
    gr = Grounding.from_scm(scm, abstract=fig2b)
    a = q([rzero("R_CX")], cond=[val("CZ")])
    e1 = Product((a, One()))
    e2 = Quotient(a, One())
    env = {val("CZ"): (0, 1)}
    assert evaluate(canonical(e1), manifest, gr, env) == evaluate(
        canonical(e2), manifest, gr, env
    )


def test_expansion_numeric_identity(fig2b):
    # expanding over an adjacent cluster and summing back changes nothing
    from mcdmg import Budget, Grounding, enumerate_compatible, exact_tables, random_scm
    from mcdmg.oracle import evaluate

    e = q([proxy("CY")], cond=[rzero("R_CY"), rzero("R_CX"), proxy("CX")])
    expanded = expand_total_probability(e, "CZ")
    madmg = next(iter(enumerate_compatible(fig2b, budget=Budget(2, 9))))
    for seed in range(5):
        scm = random_scm(madmg, seed=seed)
        _, manifest = exact_tables(scm)
        gr = Grounding.from_scm(scm, abstract=fig2b)
        for y in ((0, 0), (1, 0)):
            for x in ((0, 1), (1, 1)):
                env = {proxy("CY"): y, proxy("CX"): x}
                a = evaluate(e, manifest, gr, env)
                b = evaluate(expanded, manifest, gr, env)
                assert abs(a - b) <= 1e-12
