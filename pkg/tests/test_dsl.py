import numpy as np
import pytest
from hypothesis import given, strategies as st

from specialcone.dsl import DSLError, compile_scalar, evaluate, parse, to_source
from specialcone.numerics import fd_partial


def test_pythagoras_is_one():
    e = parse("cos(x1)^2 + sin(x1)^2")
    pts = np.random.default_rng(0).uniform(-3, 3, (20, 1))
    assert np.allclose(evaluate(e, pts).value, 1.0, atol=1e-15)


def test_fs_factor_parses():
    e = parse("1/(1 + x1^2 + x2^2)")
    assert evaluate(e, [1.0, 1.0]).value == pytest.approx(1 / 3)


def test_syntax_error_column():
    with pytest.raises(DSLError) as info:
        parse("x1 +* 2")
    assert info.value.column == 5 and info.value.line == 1


def test_errors_unknown_function_and_name():
    with pytest.raises(DSLError):
        parse("tan(x1)")
    with pytest.raises(DSLError):
        parse("x1 + z", ["x1"])


def test_domain_error_names_subexpression():
    with pytest.raises(DSLError) as info:
        evaluate(parse("log(x1 - 1)"), [0.5])
    assert "x1" in str(info.value)


def test_product_jet():
    j = evaluate(parse("x1*x2"), [2.0, 3.0], 1)
    assert j.value == 6.0 and np.array_equal(j.grad, [3.0, 2.0])


def test_exp_all_parts_one():
    j = evaluate(parse("exp(x1)"), [0.0], 3)
    assert j.value == 1.0 and j.grad[0] == 1.0 and j.hess[0, 0] == 1.0 and j.third[0, 0, 0] == 1.0


def test_precedence_and_associativity():
    at = lambda s: float(evaluate(parse(s), [2.0]).value)  # noqa: E731
    assert at("2^3^2") == 512.0
    assert at("-2^2") == -4.0
    assert at("8/4/2") == 1.0
    assert at("1 - 2 - 3") == -4.0
    assert at("pi") == pytest.approx(np.pi)
    assert at("atan2(1, 1)*4") == pytest.approx(np.pi)


def test_rational_folding_is_exact():
    # 1/3 + 1/3 + 1/3 folds to exactly 1 before conversion to double
    assert float(evaluate(parse("1/3 + 1/3 + 1/3 - 1"), [0.0]).value) == 0.0


ROUND_TRIP = ["x1*y1/2 + sin(x1)/3", "x1*y2/2", "x1 + x2*y2", "cos(x1)*4/sqrt(3)", "1/(1 + x1^2 + y1^2)",
              "-(x1 - 2)^-1", "exp(-x1^2/2)*atan2(y1, x1)", "2^3^2 - (1 - 2) - 3", "log(1 + x1^2 + y1^2)"]


@pytest.mark.parametrize("src", ROUND_TRIP)
def test_round_trip_fixed_point(src):
    once = to_source(parse(src))
    assert to_source(parse(once)) == once


@given(st.lists(st.tuples(st.integers(-3, 3), st.integers(0, 3), st.integers(0, 3)), min_size=1, max_size=5),
       st.lists(st.floats(-1, 1), min_size=2, max_size=2))
def test_random_cubic_matches_finite_differences(terms, point):
    src = " + ".join(f"({c})*x1^{a}*x2^{b}" for c, a, b in terms)
    f = compile_scalar(src, ["x1", "x2"])
    j = f(np.asarray(point), 2)
    num = lambda p: float(f(np.asarray(p), 0).value)  # noqa: E731
    step = 1e-3
    scale = 1 + 30 * sum(abs(c) for c, _, _ in terms)
    for multi in [(0,), (1,), (0, 1), (1, 1)]:
        part = [j.value, j.grad, j.hess][len(multi)]
        assert abs(part[multi] - fd_partial(num, point, multi, step)) <= 10 * step ** 2 * scale


@given(st.lists(st.floats(-2, 2), min_size=2, max_size=2))
def test_evaluate_is_deterministic(point):
    e = parse("sin(x1)*exp(x2) - x1^3/7")
    a, b = evaluate(e, point, 2), evaluate(e, point, 2)
    for p, q in zip(a.parts, b.parts):
        assert np.array_equal(p, q)
