import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gens import random_formula, random_guided_structure
from modcheck.logic import (
    And,
    EdgeAtom,
    EqAtom,
    Exists,
    Forall,
    FormulaSyntaxError,
    MarkAtom,
    ModExists,
    Not,
    Or,
    Term,
    collect_term_tuples,
    count_naive,
    eval_naive,
    format_formula,
    free_vars,
    parse_formula,
    quantifier_depth,
)
from modcheck.structures import GuidedStructure, Signature

SIG = Signature(("P", "Q"), ("f", "g"))


# ---------------------------------------------------------------------------
# a second, independently written evaluator: substitution environments are
# rebuilt at each step and counting is explicit -- used as the oracle's oracle
# ---------------------------------------------------------------------------


def eval_reference(m, phi, env):
    def term_value(t, env):
        stack = list(t.funcs)
        value = env[t.var]
        while stack:
            idx = stack.pop()  # innermost application first
            value = m.functions[m.signature.unary_functions[idx - 1]][value]
        return value

    if isinstance(phi, EdgeAtom):
        a, b = term_value(phi.left, env), term_value(phi.right, env)
        return (min(a, b), max(a, b)) in set(m.edges)
    if isinstance(phi, MarkAtom):
        return term_value(phi.term, env) in m.marks[phi.mark]
    if isinstance(phi, EqAtom):
        return term_value(phi.left, env) == term_value(phi.right, env)
    if isinstance(phi, Not):
        return not eval_reference(m, phi.sub, env)
    if isinstance(phi, And):
        return eval_reference(m, phi.left, env) and eval_reference(m, phi.right, env)
    if isinstance(phi, Or):
        return eval_reference(m, phi.left, env) or eval_reference(m, phi.right, env)
    if isinstance(phi, Exists):
        return any(eval_reference(m, phi.body, {**env, phi.var: w}) for w in m.domain)
    if isinstance(phi, Forall):
        return all(eval_reference(m, phi.body, {**env, phi.var: w}) for w in m.domain)
    if isinstance(phi, ModExists):
        hits = sum(1 for w in m.domain if eval_reference(m, phi.body, {**env, phi.var: w}))
        return hits % phi.modulus == phi.residue
    raise AssertionError(type(phi))


def test_parser_precedence():
    phi = parse_formula("!P(x) & Q(x) | adj(x, y)", SIG)
    assert isinstance(phi, Or)
    assert isinstance(phi.left, And)
    assert isinstance(phi.left.left, Not)
    assert isinstance(phi.right, EdgeAtom)


def test_quantifiers_extend_right():
    phi = parse_formula("E x . P(x) | Q(y)", SIG)
    assert isinstance(phi, Exists)
    assert isinstance(phi.body, Or)
    phi2 = parse_formula("P(y) & A x . P(x) & Q(x)", SIG)
    assert isinstance(phi2, And)
    assert isinstance(phi2.right, Forall)
    assert isinstance(phi2.right.body, And)


def test_parse_terms_and_atoms():
    phi = parse_formula("adj(f(g(x)), y)", SIG)
    assert phi == EdgeAtom(Term("x", (1, 2)), Term("y", ()))
    phi = parse_formula("f(x) = y", SIG)
    assert phi == EqAtom(Term("x", (1,)), Term("y", ()))
    phi = parse_formula("P(f(x))", SIG)
    assert phi == MarkAtom("P", Term("x", (1,)))


def test_parse_modexists():
    phi = parse_formula("Emod[1,2] y . adj(x, y)", SIG)
    assert phi == ModExists(1, 2, "y", EdgeAtom(Term("x"), Term("y")))


@pytest.mark.parametrize(
    "text",
    [
        "Emod[2,2] y . adj(x, y)",
        "Emod[0,0] y . adj(x, y)",
        "Emod[3,2] y . adj(x, y)",
    ],
)
def test_malformed_modulus_rejected(text):
    with pytest.raises(FormulaSyntaxError):
        parse_formula(text, SIG)


@pytest.mark.parametrize(
    "text",
    [
        "P(x",
        "adj(x)",
        "x = ",
        "E P . adj(P, y)",
        "R(x)",  # unknown symbol used as mark with term syntax -> f-check fails
        "f(x)",  # bare term is not a formula
        "P(x) Q(x)",
    ],
)
def test_syntax_errors(text):
    with pytest.raises(FormulaSyntaxError):
        parse_formula(text, SIG)


def test_free_vars_first_occurrence_order():
    phi = parse_formula("adj(f(x), y) & P(z) & Q(x)", SIG)
    assert free_vars(phi) == ("x", "y", "z")


def test_rename_apart_no_double_binding():
    phi = parse_formula("E x . (P(x) & E x . Q(x))", SIG)

    def check(node, path):
        if isinstance(node, (Exists, Forall, ModExists)):
            assert node.var not in path
            check(node.body, path | {node.var})
        else:
            from modcheck.logic import children

            for c in children(node):
                check(c, path)

    check(phi, frozenset())
    # the two binders now differ, the atoms follow their own binder
    inner = phi.body.right
    assert inner.var != phi.var
    assert inner.body.term.var == inner.var


def test_shadowed_free_variable_stays_free():
    phi = parse_formula("P(x) & E x . Q(x)", SIG)
    assert free_vars(phi) == ("x",)
    m = GuidedStructure(SIG, range(2), [], {"P": [0], "Q": [1]}, {})
    assert eval_naive(m, phi, {"x": 0})
    assert not eval_naive(m, phi, {"x": 1})


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**30))
def test_format_parse_round_trip(seed):
    rng = random.Random(seed)
    phi = random_formula(rng, SIG, free=["x", "y"], q_budget=2, depth=2, max_funcs=2)
    text = format_formula(phi, SIG)
    assert parse_formula(text, SIG) == phi


def test_collect_term_tuples_spec_shape():
    rho = parse_formula("adj(f(g(x)), y)", SIG)
    assert collect_term_tuples(rho) == ((), (1, 2))
    rho2 = parse_formula("adj(x, y) & P(f(x)) & g(y) = x", SIG)
    assert collect_term_tuples(rho2) == ((), (1,), (2,))
    with pytest.raises(ValueError, match="quantifier-free"):
        collect_term_tuples(parse_formula("E z . adj(x, z)", SIG))


def test_eval_naive_atoms():
    m = GuidedStructure(
        SIG, range(4), [(0, 1), (1, 2)], {"P": [0], "Q": [3]}, {"f": {0: 1, 1: 2}, "g": {}}
    )
    assert eval_naive(m, parse_formula("adj(x, y)", SIG), {"x": 0, "y": 1})
    assert not eval_naive(m, parse_formula("adj(x, y)", SIG), {"x": 0, "y": 2})
    assert eval_naive(m, parse_formula("P(x)", SIG), {"x": 0})
    assert eval_naive(m, parse_formula("f(f(x)) = z", SIG), {"x": 0, "z": 2})
    assert eval_naive(m, parse_formula("g(x) = x", SIG), {"x": 1})
    with pytest.raises(ValueError):
        eval_naive(m, parse_formula("adj(x, y)", SIG), {"x": 9, "y": 0})


def test_modexists_counts_exhaustively():
    # every modulus/residue pair vs explicit counting on path structures
    for n in range(1, 8):
        m = GuidedStructure(SIG, range(n), [(i, i + 1) for i in range(n - 1)], {"P": list(range(0, n, 2))}, {})
        for b in range(1, 6):
            for a in range(b):
                phi = ModExists(a, b, "y", MarkAtom("P", Term("y")))
                want = (len(range(0, n, 2)) % b) == a
                assert eval_naive(m, phi) == want
                phi2 = ModExists(a, b, "y", EdgeAtom(Term("x"), Term("y")))
                for x in range(n):
                    deg = len(m.neighbors(x))
                    assert eval_naive(m, phi2, {"x": x}) == ((deg % b) == a)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**30), st.integers(2, 7))
def test_two_evaluators_agree(seed, n):
    rng = random.Random(seed)
    m = random_guided_structure(rng, n, family="maxdeg", n_marks=2, n_funcs=2)
    phi = random_formula(rng, m.signature, free=["x"], q_budget=2, depth=2, max_funcs=2)
    for x in m.domain:
        assert eval_naive(m, phi, {"x": x}) == eval_reference(m, phi, {"x": x}), (seed, x)


def test_count_naive_star():
    # hub with five leaves; parity-of-degree counting
    sig = Signature((), ())
    star = GuidedStructure(sig, range(6), [(0, i) for i in range(1, 6)])
    odd = parse_formula("Emod[1,2] y . adj(x, y)", sig)
    even = parse_formula("Emod[0,2] y . adj(x, y)", sig)
    # hub degree 5 and each leaf degree 1: all six have odd degree
    assert count_naive(star, odd) == 6
    assert count_naive(star, even) == 0


def test_count_naive_requires_one_free_variable():
    with pytest.raises(ValueError):
        count_naive(GuidedStructure(SIG, range(2)), parse_formula("adj(x, y)", SIG))
    with pytest.raises(ValueError):
        count_naive(GuidedStructure(SIG, range(2)), parse_formula("E x . P(x)", SIG))


def test_quantifier_depth():
    phi = parse_formula("E x . (P(x) & Emod[0,2] y . adj(x, y))", SIG)
    assert quantifier_depth(phi) == 2
