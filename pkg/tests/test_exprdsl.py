import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from unclab import deficit as df
from unclab import exprdsl as ex
from unclab import funcrep as fr
from unclab import gaussfit as gf
from unclab.errors import InvalidInputError

# (source, dimension, byte offset of the first invalid token)
MALFORMED = [
    ("", 1, 0),
    (" ", 1, 1),
    ("x +", 1, 3),
    ("x + ", 1, 4),
    ("(x", 1, 2),
    ("x)", 1, 1),
    ("exp(x", 1, 5),
    ("exp x", 1, 4),
    ("exp", 1, 3),
    ("2x", 1, 1),
    ("x^y", 1, 2),
    ("x^", 1, 2),
    ("x^(y)", 1, 3),
    ("x^(2", 1, 4),
    ("x^(-)", 1, 4),
    ("x^--2", 1, 3),
    ("x1*x2", 1, 3),
    ("x3", 2, 0),
    ("x4", 3, 0),
    ("foo(x)", 1, 0),
    ("sin(x))", 1, 6),
    ("1 + * 2", 1, 4),
    ("*x", 1, 0),
    ("x $ 2", 1, 2),
    ("x + 1e", 1, 5),
    ("exp(-x^2", 1, 8),
    ("()", 1, 1),
    ("(", 1, 1),
    ("x,y", 1, 1),
    ("sqrt()", 1, 5),
    ("abs(x)(x)", 1, 6),
    ("π", 1, 0),
    ("x + π", 1, 4),
    ("é + x", 1, 0),
    ("1 + é + ?", 1, 4),
    ("αx", 1, 0),
    ("x*αx", 1, 2),
    ("r^2 + x2", 1, 6),
    ("x^2^", 1, 4),
    ("2^3^x", 1, 4),
    ("exp(x) exp(x)", 1, 7),
    ("x -", 1, 3),
    ("- -", 1, 3),
    ("1..2", 1, 2),
    ("x**2", 1, 2),
    ("sin(x", 1, 5),
    ("cos(x1 + x2", 2, 11),
    ("x^(2))", 1, 5),
    ("  )", 1, 2),
    ("r r", 1, 2),
    ("xx", 1, 0),
    ("x_1", 1, 0),
    ("e^2", 1, 0),
    ("exp(1e400)", 1, 4),
    ("x^x^2", 1, 2),
]


@pytest.mark.parametrize("source,dim,offset", MALFORMED)
def test_parse_error_offsets(source, dim, offset):
    with pytest.raises(ex.ParseError) as info:
        ex.parse(source, dim)
    err = info.value
    assert err.offset == offset
    assert 0 <= err.offset <= len(source.encode("utf-8"))
    assert err.expected
    assert err.source == source


def test_corpus_size():
    assert len(MALFORMED) >= 50


def test_parse_error_message_carries_excerpt():
    with pytest.raises(ex.ParseError) as info:
        ex.parse("exp(-x^2) + foo", 1)
    assert "byte 12" in str(info.value)
    assert "foo" in info.value.excerpt


def test_dimension_must_be_supported():
    with pytest.raises(InvalidInputError):
        ex.parse("x", 4)


# --------------------------------------------------------------------------
# evaluation
# --------------------------------------------------------------------------

def test_gaussian_at_origin():
    assert ex.evaluate(ex.parse("exp(-x^2)", 1), 0.0) == 1.0


def test_right_associative_power():
    assert ex.evaluate(ex.parse("2^3^2", 1), 0.0) == 512.0


@pytest.mark.parametrize("source,value", [
    ("1 - 2 - 3", -4.0), ("8 / 4 / 2", 1.0), ("-2^2", -4.0), ("(-2)^2", 4.0),
    ("2 * 3 + 4", 10.0), ("2 + 3 * 4", 14.0), ("x^-1", 0.5), ("x^(-1)", 0.5),
    ("sqrt(abs(-16))", 4.0), ("cos(pi)", -1.0), ("--x", 2.0), ("2^-1^2", 2.0),
    ("1.5e1 + .5", 15.5),
])
def test_precedence_and_associativity(source, value):
    # a signed literal binds to its own exponent chain: 2^-1^2 is 2^((-1)^2)
    assert ex.evaluate(ex.parse(source, 1), 2.0) == pytest.approx(value, rel=1e-15)


def test_radius_variable():
    assert ex.evaluate(ex.parse("r^2", 2), (3.0, 4.0)) == pytest.approx(25.0)
    assert ex.evaluate(ex.parse("exp(-r^2/2)", 3), (0.0, 0.0, 0.0)) == 1.0


def test_division_by_zero_is_an_evaluation_error():
    e = ex.parse("1 + 1/x", 1)
    with pytest.raises(ex.EvaluationError) as info:
        ex.evaluate(e, 0.0)
    assert (info.value.start, info.value.end) == (4, 7)
    assert info.value.subtree == "1/x"


def test_domain_error_points_at_subtree():
    with pytest.raises(ex.EvaluationError) as info:
        ex.evaluate(ex.parse("exp(sqrt(x - 3))^2", 1), 1.0)
    assert info.value.subtree == "sqrt(x - 3)"


def test_wrong_point_dimension():
    with pytest.raises(InvalidInputError):
        ex.evaluate(ex.parse("x1 + x2", 2), 1.0)


def test_variables_listing():
    assert ex.parse("x*r + x3", 3).variables() == {"x1", "r", "x3"}


@given(st.floats(-5, 5))
def test_evaluation_is_deterministic_and_matches_numpy(x):
    e = ex.parse("(1 + 0.1*x^4)*exp(-x^2/2) - sin(x)*cos(2*x)", 1)
    expected = (1 + 0.1 * x ** 4) * math.exp(-x * x / 2) - math.sin(x) * math.cos(2 * x)
    assert ex.evaluate(e, x) == ex.evaluate(e, x)
    assert ex.evaluate(e, x) == pytest.approx(expected, rel=1e-13, abs=1e-15)


def test_grid_evaluation_is_vectorized():
    e = ex.parse("x1 * x2", 2)
    a, b = np.meshgrid(np.arange(3.0), np.arange(4.0), indexing="ij")
    assert np.array_equal(ex.evaluate_grid(e, [a, b]), a * b)
    with pytest.raises(ex.EvaluationError) as info:
        ex.evaluate_grid(ex.parse("1/x1", 2), [a, b])
    assert info.value.point == {"x1": 0.0, "x2": 0.0}


# --------------------------------------------------------------------------
# sampling
# --------------------------------------------------------------------------

def test_sampled_gaussian_deficit():
    u = ex.sample(ex.parse("exp(-x^2/2)", 1), fr.Grid1DSpec(12.0, 512))
    b = df.compute_deficit(u)
    assert b.deficit < 1e-8
    # the raw value is stencil error of the gradient; it shrinks at O(h^4)
    fine = df.compute_deficit(ex.sample(ex.parse("exp(-x^2/2)", 1), fr.Grid1DSpec(12.0, 4096)))
    assert abs(fine.deficit) <= 1e-8 * (1 + fine.moment_sq * fine.grad_sq)


def test_sampled_odd_function_projects_to_zero():
    u = ex.sample(ex.parse("x*exp(-x^2/2)", 1), fr.Grid1DSpec(12.0, 1024))
    assert gf.project(u).is_zero


def test_sampled_radial_gaussian_norm():
    u = ex.sample(ex.parse("exp(-r^2)", 3), fr.RadialSpec(3, 12.0, 2048))
    assert abs(fr.norm_l2_sq(u) - (math.pi / 2) ** 1.5) <= 1e-8


def test_sample_on_nd_grid_and_hermite():
    u = ex.sample(ex.parse("exp(-(x1^2 + x2^2))", 2), fr.GridNDSpec(2, 6.0, 64))
    assert fr.norm_l2_sq(u) == pytest.approx(math.pi / 2, rel=1e-10)
    h = ex.sample(ex.parse("exp(-x^2/2)", 1), fr.HermiteSpec(8))
    assert h.values[0] == pytest.approx(math.pi ** 0.25, rel=1e-10)
    assert np.max(np.abs(h.values[1:])) < 1e-10


def test_sample_rejects_bad_targets():
    with pytest.raises(InvalidInputError):
        ex.sample(ex.parse("x", 1), fr.GridNDSpec(2, 4.0, 16))
    with pytest.raises(InvalidInputError):
        ex.sample(ex.parse("x1 + r", 2), fr.RadialSpec(2, 4.0, 16))
    with pytest.raises(ex.EvaluationError):
        ex.sample(ex.parse("1/x", 1), fr.Grid1DSpec(4.0, 16))


# --------------------------------------------------------------------------
# printing and round trips
# --------------------------------------------------------------------------

ROUND_TRIP_CORPUS = [
    "exp(-x^2)", "(1+0.1*x^4)*exp(-x^2/2)", "2^3^2", "(2^3)^2", "-x^2", "(-x)^2",
    "x - (x - 1)", "x / (2 * x)", "x^-0.5", "x^(-2)^3", "--x",
    "exp(-r^2) * (1 + 0.2*r^2)", "sin(x) * cos(x) - sqrt(abs(x))", "pi * x",
    "1e-3 * x + .25", "x1*x2 + x3", "((x))", "-(x + 1) * 2", "2 * -x", "x + -1",
]


@pytest.mark.parametrize("source", ROUND_TRIP_CORPUS)
def test_parse_print_parse_is_fixed_point(source):
    tree = ex.parse(source, 3)
    printed = ex.to_source(tree.root)
    again = ex.parse(printed, 3)
    assert ex.strip_spans(again.root) == ex.strip_spans(tree.root)
    assert ex.to_source(again.root) == printed


def test_str_is_canonical_source():
    assert str(ex.parse("x+(1)", 1)) == "x1 + 1"


def _exponents():
    lit = st.floats(0, 1e3, allow_nan=False, allow_infinity=False).map(
        lambda v: ex.Num(v, 0, 0))
    signed = st.one_of(lit, lit.map(lambda n: ex.Neg(n, 0, 0)))
    return st.recursive(signed, lambda inner: st.builds(
        lambda b, e: ex.Pow(b, e, 0, 0), signed, inner), max_leaves=3)


def _trees(dim=3):
    leaves = st.one_of(
        st.floats(0, 1e6, allow_nan=False, allow_infinity=False).map(lambda v: ex.Num(v, 0, 0)),
        st.sampled_from([f"x{i}" for i in range(1, dim + 1)] + ["r"]).map(lambda n: ex.Var(n, 0, 0)),
        st.just(ex.Const("pi", 0, 0)),
    )

    def extend(inner):
        return st.one_of(
            st.builds(lambda a: ex.Neg(a, 0, 0), inner),
            st.builds(lambda op, a, b: ex.BinOp(op, a, b, 0, 0),
                      st.sampled_from("+-*/"), inner, inner),
            st.builds(lambda a, e: ex.Pow(a, e, 0, 0), inner, _exponents()),
            st.builds(lambda f, a: ex.Call(f, a, 0, 0), st.sampled_from(sorted(ex.FUNCTIONS)), inner),
        )
    return st.recursive(leaves, extend, max_leaves=12)


@given(_trees())
def test_printed_trees_parse_back(tree):
    printed = ex.to_source(tree)
    assert ex.strip_spans(ex.parse(printed, 3).root) == tree


@given(st.text(alphabet="x12r+-*/^().e pi", max_size=20))
def test_parser_never_crashes_and_offsets_in_range(source):
    try:
        ex.parse(source, 2)
    except ex.ParseError as err:
        assert 0 <= err.offset <= len(source.encode("utf-8"))
