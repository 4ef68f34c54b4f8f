import math

import numpy as np
import pytest

from finslerkit import expr as ex
from finslerkit.numerics import Jet2


def test_eval_polynomial():
    e = ex.parse("x1^2 + x2^2")
    assert e.eval((3.0, 4.0)) == 25.0


def test_eval_exp():
    e = ex.parse("exp(x3)")
    assert e.eval((0.0, 0.0, 1.0)) == pytest.approx(math.e, rel=1e-12)


def test_syntax_error_position():
    with pytest.raises(ex.ExprSyntaxError) as err:
        ex.parse("x1 +")
    assert err.value.offset == 4


def test_diff_product_rule():
    d = ex.diff(ex.parse("x1*x2"), 0)
    assert str(d) == "x2"
    assert d.eval((5.0, 7.0)) == 7.0


def test_diff_exp_fixed_point():
    e = ex.parse("exp(x3)")
    d = ex.diff(e, 2)
    for x3 in (-1.0, 0.0, 0.7):
        assert d.eval((0.0, 0.0, x3)) == pytest.approx(math.exp(x3), rel=1e-14)


def test_mixed_partial_value():
    e = ex.parse("x1^2*x2")
    d12 = ex.diff(ex.diff(e, 0), 1)
    assert d12.eval((1.0, 1.0)) == pytest.approx(2.0, abs=1e-14)


def test_division_by_zero_reports_subexpression():
    e = ex.parse("x1/x2")
    with pytest.raises(ex.DomainError) as err:
        e.eval((1.0, 0.0))
    assert "x1/x2" in str(err.value)


def test_sqrt_and_integer_power():
    assert ex.parse("sqrt(x1)").eval((4.0, 0.0)) == 2.0
    assert ex.parse("x1^3").eval((2.0, 0.0)) == 8.0


def test_log_domain_error():
    with pytest.raises(ex.DomainError):
        ex.parse("log(x1)").eval((-1.0,))
    with pytest.raises(ex.DomainError):
        ex.parse("log(x1)").eval((0.0,))


def test_negative_base_fractional_power_is_domain_error():
    with pytest.raises(ex.DomainError):
        ex.parse("x1^0.5").eval((-4.0,))
    # integer exponents on negative bases stay real
    assert ex.parse("x1^2").eval((-3.0,)) == 9.0
    assert ex.parse("x1^-2").eval((-2.0,)) == 0.25


def test_constants_bound_at_parse_time():
    e = ex.parse("q*x1 + r", {"q": 2.5, "r": -1.0})
    assert e.eval((2.0,)) == 4.0
    # constants do not leak into later parses
    with pytest.raises(ex.ExprSyntaxError):
        ex.parse("q*x1")


def test_unknown_identifier_and_function():
    with pytest.raises(ex.ExprSyntaxError, match="unknown identifier"):
        ex.parse("x1 + zeta")
    with pytest.raises(ex.ExprSyntaxError, match="unknown function"):
        ex.parse("sinh(x1)")


def test_function_arity():
    with pytest.raises(ex.ExprSyntaxError, match="expects 1 argument"):
        ex.parse("exp(x1, x2)")


def test_precedence_and_associativity():
    # '^' binds tightest and chains left: 2^3^2 = (2^3)^2
    assert ex.parse("2^3^2").eval(()) == 64.0
    # unary minus below '^': -x1^2 = -(x1^2)
    assert ex.parse("-x1^2").eval((3.0,)) == -9.0
    assert ex.parse("2 - 3 - 4").eval(()) == -5.0
    assert ex.parse("2*x1 + x2/4").eval((1.0, 8.0)) == 4.0
    assert ex.parse("2^-1").eval(()) == 0.5


def test_coordinates_are_one_based():
    with pytest.raises(ex.ExprSyntaxError):
        ex.parse("x0")


def test_dimension_mismatch_at_eval():
    with pytest.raises(ex.DomainError):
        ex.parse("x3").eval((1.0, 2.0))


# -- random-expression properties

_FN = ("exp", "sin", "cos")


def _random_polynomial(rng, depth: int, dim: int) -> ex.Expr:
    if depth == 0 or rng.random() < 0.3:
        if rng.random() < 0.5:
            return ex.Coord(int(rng.integers(0, dim)))
        return ex.Num(float(rng.integers(-3, 4)))
    op = rng.integers(0, 4)
    a = _random_polynomial(rng, depth - 1, dim)
    b = _random_polynomial(rng, depth - 1, dim)
    if op == 0:
        return ex.Add(a, b)
    if op == 1:
        return ex.Sub(a, b)
    if op == 2:
        return ex.Mul(a, b)
    return ex.Pow(a, ex.Num(float(rng.integers(1, 4))))


def test_symbolic_derivative_matches_finite_differences():
    rng = np.random.default_rng(811)
    dim = 3
    step = 1e-5
    checked = 0
    for _ in range(200):
        e = _random_polynomial(rng, depth=int(rng.integers(1, 6)), dim=dim)
        x = rng.uniform(-1.0, 1.0, size=dim)
        var = int(rng.integers(0, dim))
        d = ex.diff(e, var)
        xp, xm = x.copy(), x.copy()
        xp[var] += step
        xm[var] -= step
        fd = (e.eval(tuple(xp)) - e.eval(tuple(xm))) / (2.0 * step)
        sym = d.eval(tuple(x))
        assert abs(sym - fd) <= 1e-6 * max(1.0, abs(sym)), f"{e} wrt x{var + 1}"
        checked += 1
    assert checked == 200


def test_mixed_partials_commute():
    rng = np.random.default_rng(812)
    dim = 3
    for _ in range(100):
        e = _random_polynomial(rng, depth=int(rng.integers(1, 6)), dim=dim)
        i, j = rng.integers(0, dim, size=2)
        dij = ex.diff(ex.diff(e, int(i)), int(j))
        dji = ex.diff(ex.diff(e, int(j)), int(i))
        x = tuple(rng.uniform(-1.0, 1.0, size=dim))
        vij, vji = dij.eval(x), dji.eval(x)
        assert abs(vij - vji) <= 1e-10 * max(1.0, abs(vij))


def test_evaluation_is_generic_over_duals():
    e = ex.parse("exp(x1)*sin(x2) + x1^2/x2")
    x = (0.4, 1.3)
    seeded = [Jet2(x[0], 1.0), Jet2(x[1], 0.0)]
    out = e.eval(seeded)
    step = 1e-6
    fd = (e.eval((x[0] + step, x[1])) - e.eval((x[0] - step, x[1]))) / (2 * step)
    assert out.value == pytest.approx(e.eval(x), rel=1e-14)
    assert out.d1 == pytest.approx(fd, rel=1e-8)
