"""Symbolic probability expressions over cluster valuations.

Expressions are trees of terms, sums, products and quotients. A term is
``P(outcomes | do(interventions), conditions)`` whose atoms are cluster value
symbols (``c_CX``), proxy symbols (``c_CX*``) and indicator literals
(``R_CX=0``). Everything is immutable; ``canonical`` gives a normal form so
structural equality stands in for algebraic equality of rewrites.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import FrozenSet, Iterable, Tuple, Union

from .errors import (
    MissingIndicatorLiteral,
    SymbolAlreadyBound,
    UnknownVertex,
    WrongGraphClass,
)
from .graphs import GraphClass, MixedGraph

VAL = "val"
PROXY = "proxy"
RZERO = "rzero"


@dataclass(frozen=True, order=True)
class Atom:
    """One symbol: a cluster value, its proxy, or an indicator pinned to 0."""

    kind: str
    ref: str

    def render(self) -> str:
        if self.kind == VAL:
            return f"c_{self.ref}"
        if self.kind == PROXY:
            return f"c_{self.ref}*"
        return f"{self.ref}=0"

    def render_latex(self) -> str:
        if self.kind == VAL:
            return f"c_{{{self.ref}}}"
        if self.kind == PROXY:
            return f"c_{{{self.ref}}}^{{*}}"
        return f"{_latex_name(self.ref)}{{=}}0"


def _latex_name(vid: str) -> str:
    if "_" in vid:
        head, _, tail = vid.partition("_")
        return f"{head}_{{{tail}}}"
    return vid


def val(cluster: str) -> Atom:
    return Atom(VAL, cluster)


def proxy(cluster: str) -> Atom:
    return Atom(PROXY, cluster)


def rzero(indicator: str) -> Atom:
    return Atom(RZERO, indicator)


@dataclass(frozen=True)
class Term:
    """``P(outcomes | do(do_set), cond)``; all three are atom sets."""

    outcomes: FrozenSet[Atom]
    do: FrozenSet[Atom] = frozenset()
    cond: FrozenSet[Atom] = frozenset()

    def __post_init__(self):
        if self.do & self.cond:
            raise SymbolAlreadyBound("a symbol cannot be both intervened and conditioned on")

    def replace(self, **kw) -> "Term":
        d = {"outcomes": self.outcomes, "do": self.do, "cond": self.cond}
        d.update(kw)
        return Term(frozenset(d["outcomes"]), frozenset(d["do"]), frozenset(d["cond"]))


@dataclass(frozen=True)
class Sum:
    """Sum of the body over all valuations of the bound cluster symbol."""

    bound: Atom
    body: "Expr"


@dataclass(frozen=True)
class Product:
    factors: Tuple["Expr", ...]


@dataclass(frozen=True)
class Quotient:
    num: "Expr"
    den: "Expr"


@dataclass(frozen=True)
class One:
    pass


Expr = Union[Term, Sum, Product, Quotient, One]


def term(outcomes: Iterable[Atom], do: Iterable[Atom] = (), cond: Iterable[Atom] = ()) -> Term:
    return Term(frozenset(outcomes), frozenset(do), frozenset(cond))


# ---------------------------------------------------------------------------
# Canonical form
# ---------------------------------------------------------------------------


def _sort_key(e: Expr):
    if isinstance(e, One):
        return (0,)
    if isinstance(e, Term):
        return (1, tuple(sorted(e.outcomes)), tuple(sorted(e.do)), tuple(sorted(e.cond)))
    if isinstance(e, Product):
        return (2, tuple(_sort_key(f) for f in e.factors))
    if isinstance(e, Sum):
        return (3, (e.bound.kind, e.bound.ref), _sort_key(e.body))
    return (4, _sort_key(e.num), _sort_key(e.den))


def canonical(e: Expr) -> Expr:
    """Normal form: flattened sorted products, ordered sum chains, reduced units."""
    if isinstance(e, (One, Term)):
        return e
    if isinstance(e, Product):
        factors = []
        for f in e.factors:
            cf = canonical(f)
            if isinstance(cf, Product):
                factors.extend(cf.factors)
            elif not isinstance(cf, One):
                factors.append(cf)
        factors.sort(key=_sort_key)
        if not factors:
            return One()
        if len(factors) == 1:
            return factors[0]
        return Product(tuple(factors))
    if isinstance(e, Sum):
        body = canonical(e.body)
        if isinstance(body, Sum) and body.bound < e.bound:
            inner = canonical(Sum(e.bound, body.body))
            return Sum(body.bound, inner)
        return Sum(e.bound, body)
    if isinstance(e, Quotient):
        num, den = canonical(e.num), canonical(e.den)
        if isinstance(den, One):
            return num
        if num == den:
            return One()
        return Quotient(num, den)
    raise TypeError(f"not an expression: {e!r}")


def terms_of(e: Expr) -> Tuple[Term, ...]:
    """Every term of the tree, in canonical traversal order."""
    if isinstance(e, Term):
        return (e,)
    if isinstance(e, One):
        return ()
    if isinstance(e, Sum):
        return terms_of(e.body)
    if isinstance(e, Product):
        return tuple(t for f in e.factors for t in terms_of(f))
    return terms_of(e.num) + terms_of(e.den)


def symbols_of(e: Expr) -> FrozenSet[Atom]:
    out = set()
    for t in terms_of(e):
        out |= t.outcomes | t.do | t.cond
    if isinstance(e, Sum):
        out.add(e.bound)
    for sub in _children(e):
        out |= symbols_of(sub)
    return frozenset(out)


def bound_symbols(e: Expr) -> FrozenSet[Atom]:
    out = set()
    if isinstance(e, Sum):
        out.add(e.bound)
    for sub in _children(e):
        out |= bound_symbols(sub)
    return frozenset(out)


def _children(e: Expr):
    if isinstance(e, Sum):
        return (e.body,)
    if isinstance(e, Product):
        return e.factors
    if isinstance(e, Quotient):
        return (e.num, e.den)
    return ()


def rewrite_terms(e: Expr, fn) -> Expr:
    """Apply ``fn`` to every term and rebuild the tree."""
    if isinstance(e, Term):
        return fn(e)
    if isinstance(e, One):
        return e
    if isinstance(e, Sum):
        return Sum(e.bound, rewrite_terms(e.body, fn))
    if isinstance(e, Product):
        return Product(tuple(rewrite_terms(f, fn) for f in e.factors))
    return Quotient(rewrite_terms(e.num, fn), rewrite_terms(e.den, fn))


def replace_term(e: Expr, old: Term, new: Expr) -> Expr:
    """Substitute one occurrence of ``old`` (the first, in traversal order)."""
    done = [False]

    def go(x: Expr) -> Expr:
        if done[0]:
            return x
        if isinstance(x, Term):
            if x == old:
                done[0] = True
                return new
            return x
        if isinstance(x, One):
            return x
        if isinstance(x, Sum):
            return Sum(x.bound, go(x.body))
        if isinstance(x, Product):
            return Product(tuple(go(f) for f in x.factors))
        return Quotient(go(x.num), go(x.den))

    out = go(e)
    if not done[0]:
        raise UnknownVertex("term to replace not found in expression")
    return out


# ---------------------------------------------------------------------------
# Rewriting primitives
# ---------------------------------------------------------------------------


def indicators_for(g: MixedGraph, cluster: str) -> Tuple[str, ...]:
    """Indicator ids licensing proxy substitution for a cluster symbol."""
    if g.graph_class not in (GraphClass.MCDMG, GraphClass.CMCDMG, GraphClass.MADMG):
        raise WrongGraphClass("proxy substitution needs a missingness graph")
    rs = g.indicators_of_cluster(cluster)
    if not rs:
        raise UnknownVertex(f"{cluster!r} has no missingness indicator")
    return rs


def apply_proxy(e: Expr, target: str, g: MixedGraph) -> Expr:
    """Replace a partially observed symbol by its proxy where licensed.

    Every term mentioning the target in outcomes or conditions must already
    carry all of the target's ``R=0`` literals; occurrences inside do-sets
    stay untouched (interventions set the true variable).
    """
    need = {rzero(r) for r in indicators_for(g, target)}
    tv, tp = val(target), proxy(target)

    def fix(t: Term) -> Term:
        if tv not in (t.outcomes | t.cond):
            return t
        present = t.outcomes | t.cond
        if not need <= present:
            raise MissingIndicatorLiteral(
                f"substituting {target!r} requires its R=0 literals in the same term"
            )
        outs = frozenset(tp if a == tv else a for a in t.outcomes)
        cond = frozenset(tp if a == tv else a for a in t.cond)
        return Term(outs, t.do, cond)

    if not any(tv in (t.outcomes | t.cond) for t in terms_of(e)):
        raise UnknownVertex(f"{target!r} does not occur outside do-sets")
    return rewrite_terms(e, fix)


def expand_total_probability(e: Expr, over: str) -> Expr:
    """Introduce a cluster by the law of total probability.

    ``P(y | do(z), w)`` becomes ``sum_over P(y | do(z), w, over) P(over | do(z), w)``.
    The expression must be a single term and ``over`` must be fresh.
    """
    if val(over) in symbols_of(e) or proxy(over) in symbols_of(e):
        raise SymbolAlreadyBound(f"{over!r} already occurs in the expression")
    if not isinstance(e, Term):
        raise TypeError("total probability expands a single term")
    left = e.replace(cond=e.cond | {val(over)})
    right = Term(frozenset({val(over)}), e.do, e.cond)
    return Sum(val(over), Product((left, right)))


def marginalize(e: Expr) -> Expr:
    """Collapse ``sum_s`` when the bound symbol sits in the body's outcomes.

    ``sum_s P(y, s | e)`` becomes ``P(y | e)``; a bare ``sum_s P(s | e)``
    becomes one. Inverse of expansion up to canonical form.
    """
    if not isinstance(e, Sum):
        raise TypeError("marginalization collapses a sum")
    s = e.bound
    body = canonical(e.body)
    if isinstance(body, Term) and s in body.outcomes:
        rest = body.outcomes - {s}
        if not rest:
            return One()
        return body.replace(outcomes=rest)
    if isinstance(body, Product):
        # sum_s P(y | s, e) P(s | e) -> P(y | e): undo a total-probability step
        terms = [f for f in body.factors if isinstance(f, Term)]
        if len(terms) == 2 and len(body.factors) == 2:
            a, b = terms
            for left, right in ((a, b), (b, a)):
                if (
                    right.outcomes == {s}
                    and s in left.cond
                    and left.do == right.do
                    and left.cond - {s} == right.cond
                ):
                    return left.replace(cond=left.cond - {s})
    raise ValueError("sum does not marginalize to a closed form")


def chain_split(t: Term, piece: Atom) -> Expr:
    """Chain rule: ``P(y, p | e) = P(y | p, e) P(p | e)``."""
    if piece not in t.outcomes or len(t.outcomes) < 2:
        raise ValueError("chain rule needs the atom among several outcomes")
    left = Term(t.outcomes - {piece}, t.do, t.cond | {piece})
    right = Term(frozenset({piece}), t.do, t.cond)
    return Product((left, right))


# ---------------------------------------------------------------------------
# Rendering and JSON
# ---------------------------------------------------------------------------


def _display_order(a: Atom):
    return (a.kind == RZERO, a.render())


def _render_term(t: Term, tex: bool) -> str:
    show = (lambda a: a.render_latex()) if tex else (lambda a: a.render())
    outs = ", ".join(show(a) for a in sorted(t.outcomes, key=_display_order))
    rhs = []
    if t.do:
        inner = ", ".join(show(a) for a in sorted(t.do, key=_display_order))
        rhs.append(f"do({inner})" if not tex else f"\\mathrm{{do}}({inner})")
    rhs += [show(a) for a in sorted(t.cond, key=_display_order)]
    if rhs:
        sep = " \\mid " if tex else " | "
        return f"P({outs}{sep}{', '.join(rhs)})"
    return f"P({outs})"


def render(e: Expr, tex: bool = False) -> str:
    if isinstance(e, One):
        return "1"
    if isinstance(e, Term):
        return _render_term(e, tex)
    if isinstance(e, Sum):
        body = render(e.body, tex)
        if tex:
            return f"\\sum_{{{e.bound.render_latex()}}} {body}"
        return f"sum_{{{e.bound.render()}}} {body}"
    if isinstance(e, Product):
        sep = " \\cdot " if tex else " * "
        return sep.join(
            f"({render(f, tex)})" if isinstance(f, (Sum, Quotient)) else render(f, tex)
            for f in e.factors
        )
    num, den = render(e.num, tex), render(e.den, tex)
    if tex:
        return f"\\frac{{{num}}}{{{den}}}"
    return f"[{num}] / [{den}]"


def latex(e: Expr) -> str:
    return render(e, tex=True)


def expr_to_json(e: Expr):
    if isinstance(e, One):
        return {"node": "one"}
    if isinstance(e, Term):
        enc = lambda atoms: sorted([a.kind, a.ref] for a in atoms)
        return {
            "node": "term",
            "outcomes": enc(e.outcomes),
            "do": enc(e.do),
            "cond": enc(e.cond),
        }
    if isinstance(e, Sum):
        return {"node": "sum", "bound": [e.bound.kind, e.bound.ref], "body": expr_to_json(e.body)}
    if isinstance(e, Product):
        return {"node": "product", "factors": [expr_to_json(f) for f in e.factors]}
    return {"node": "quotient", "num": expr_to_json(e.num), "den": expr_to_json(e.den)}


def expr_from_json(d) -> Expr:
    node = d["node"]
    if node == "one":
        return One()
    if node == "term":
        dec = lambda pairs: frozenset(Atom(k, r) for k, r in pairs)
        return Term(dec(d["outcomes"]), dec(d["do"]), dec(d["cond"]))
    if node == "sum":
        k, r = d["bound"]
        return Sum(Atom(k, r), expr_from_json(d["body"]))
    if node == "product":
        return Product(tuple(expr_from_json(f) for f in d["factors"]))
    if node == "quotient":
        return Quotient(expr_from_json(d["num"]), expr_from_json(d["den"]))
    raise ValueError(f"unknown expression node {node!r}")
