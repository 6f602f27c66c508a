import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracnoether.fracops import OpKind, left_caputo, left_rl_integral, right_rl_derivative
from fracnoether.grid import GridError, GridFn1D, TensorGrid, UniformGrid1D, integrate
from fracnoether.opalgebra import (
    FracOperator,
    OperatorTerm,
    adjoint,
    apply,
    apply_adjoint,
    caputo_ibp_check,
    duality_residual,
    ibp_integral_check,
)

from oracles import rl_integral_right

EPS = np.finfo(float).eps


def unit(n):
    return UniformGrid1D(0.0, 1.0, n)


def fn(grid, f):
    return GridFn1D(grid, f(grid.nodes))


def a0(t):
    return 1.0 + t


def a1(t):
    return 1.0 + 0.5 * t


def a2(t):
    return 2.0 - t


def four_kinds(grid, beta):
    return {
        "I": FracOperator.kind1(grid, a0, [(a1, beta)]),
        "II": FracOperator.kind2(grid, a0, [(a1, beta)]),
        "III": FracOperator.kind3(grid, a0, [a1, a2], beta),
        "IV": FracOperator.kind4(grid, a0, [a1, a2], beta),
    }


def bump(grid):
    return fn(grid, lambda t: t**2 * (1 - t) ** 2)


def smooth_q(grid):
    return fn(grid, lambda t: 1 + t + np.cos(2 * t))


# ---------------------------------------------------------------- descriptors


def test_identity_terms_carry_no_order():
    with pytest.raises(ValueError):
        OperatorTerm(1.0, None, 0.5)


def test_terms_must_be_caputo():
    with pytest.raises(ValueError):
        OperatorTerm(1.0, OpKind.LeftRLDerivative, 0.5)


def test_derivative_order_must_be_positive():
    with pytest.raises(ValueError):
        OperatorTerm(1.0, OpKind.LeftCaputo, 0.0)


def test_operator_needs_a_term():
    with pytest.raises(ValueError):
        FracOperator((), unit(8))


def test_coefficient_must_be_finite():
    with pytest.raises(GridError), np.errstate(divide="ignore"):
        FracOperator.identity(unit(8), lambda t: 1.0 / t)


def test_term_axis_must_exist():
    with pytest.raises(ValueError):
        FracOperator((OperatorTerm(1.0, OpKind.LeftCaputo, 0.5, axis=1),), unit(8))


def test_kind_orders_checked():
    with pytest.raises(ValueError):
        FracOperator.kind1(unit(8), 1.0, [(1.0, 1.3)])
    with pytest.raises(ValueError):
        FracOperator.kind3(unit(8), 1.0, [1.0], 1.5)


@pytest.mark.parametrize("beta", [0.3, 1.0])
def test_kind_tags(beta):
    ops = four_kinds(unit(16), beta)
    assert {name: op.kind for name, op in ops.items()} == {k: k for k in ops}
    assert FracOperator.identity(unit(16)).kind == "identity"
    assert (ops["I"] + ops["II"]).kind == "mixed"


def test_adding_operators_on_different_domains_fails():
    with pytest.raises(GridError):
        FracOperator.identity(unit(8)) + FracOperator.identity(unit(16))


# ---------------------------------------------------------------- apply


def test_apply_identity_is_exact():
    grid = unit(32)
    p = fn(grid, np.sin)
    assert np.array_equal(apply(FracOperator.identity(grid), p).values, p.values)


def test_apply_single_term_delegates():
    grid = unit(32)
    p = fn(grid, lambda t: t)
    op = FracOperator.derivative(grid, OpKind.LeftCaputo, 0.5)
    assert np.array_equal(apply(op, p).values, left_caputo(p, 0.5).values)


def test_apply_identity_plus_caputo_on_constant():
    grid = unit(32)
    op = FracOperator.kind1(grid, 1.0, [(1.0, 0.5)])
    out = apply(op, GridFn1D(grid, np.full(grid.size, 3.0)))
    assert np.array_equal(out.values, np.full(grid.size, 3.0))


def test_apply_rejects_other_domain():
    with pytest.raises(GridError):
        apply(FracOperator.identity(unit(8)), fn(unit(16), np.sin))


def test_apply_high_order_needs_resolution():
    grid = unit(8)
    op = FracOperator.kind3(grid, 1.0, [1.0, 1.0, 1.0], 0.5)
    with pytest.raises(ValueError):
        apply(op, fn(grid, np.sin))


# ---------------------------------------------------------------- adjoint


def test_adjoint_of_multiplication():
    grid = unit(32)
    adj = adjoint(FracOperator.identity(grid, a0))
    q = fn(grid, np.cos)
    assert adj.terms == ()
    assert np.array_equal(apply_adjoint(adj, q).values, a0(grid.nodes) * q.values)


@pytest.mark.parametrize(
    "kind, expected",
    [(OpKind.LeftCaputo, OpKind.RightRLDerivative), (OpKind.RightCaputo, OpKind.LeftRLDerivative)],
)
def test_adjoint_kind_mapping(kind, expected):
    grid = unit(32)
    op = FracOperator.derivative(grid, kind, 0.4) + FracOperator.derivative(grid, kind, 1.4)
    adj = adjoint(op)
    assert [(k, o) for _, k, o, _ in adj.terms] == [(expected, 0.4), (expected, 1.4)]


def test_adjoint_of_left_caputo_is_right_rl():
    grid = unit(64)
    q = fn(grid, lambda t: np.exp(t))
    adj = adjoint(FracOperator.derivative(grid, OpKind.LeftCaputo, 0.5))
    assert np.array_equal(apply_adjoint(adj, q).values, right_rl_derivative(q, 0.5).values, equal_nan=True)


def test_adjoint_of_unit_rl_right_closed_form():
    grid = unit(64)
    adj = adjoint(FracOperator.derivative(grid, OpKind.LeftCaputo, 0.5))
    out = apply_adjoint(adj, GridFn1D(grid, np.ones(grid.size))).values
    x = grid.nodes[:-1]
    expected = np.array([float((1 - mpmath.mpf(v)) ** -0.5 / mpmath.gamma(0.5)) for v in x])
    np.testing.assert_allclose(out[:-1], expected, rtol=1e-12)
    assert np.isinf(out[-1])


def test_adjoint_of_zero_function():
    grid = unit(32)
    for op in four_kinds(grid, 0.3).values():
        out = apply_adjoint(adjoint(op), GridFn1D(grid, np.zeros(grid.size)))
        assert np.all(out.values == 0.0)


def test_partial_adjoint_axes():
    grid = TensorGrid.box([(0, 1), (0, 2)], 8)
    op = FracOperator.partial(grid, 1.0, [(2.0, 1, 0.5)], kind=OpKind.RightCaputo)
    adj = adjoint(op)
    assert len(adj.terms) == 1
    _, kind, order, axis = adj.terms[0]
    assert (kind, order, axis) == (OpKind.LeftRLDerivative, 0.5, 1)


@settings(max_examples=20, deadline=None)
@given(beta=st.sampled_from([0.25, 0.5, 0.75, 1.0]), c=st.floats(-3, 3))
def test_adjoint_linearity(beta, c):
    grid = unit(32)
    ops = four_kinds(grid, beta)
    q = fn(grid, lambda t: np.exp(t) * np.cos(3 * t))
    op1, op2 = ops["I"], FracOperator.kind4(grid, c, [c, 1.0], beta)
    with np.errstate(invalid="ignore"):
        whole = apply_adjoint(adjoint(op1 + op2), q).values
        parts = apply_adjoint(adjoint(op1), q).values + apply_adjoint(adjoint(op2), q).values
    fin = np.isfinite(whole)
    assert np.array_equal(fin, np.isfinite(parts))
    scale = np.abs(whole[fin]) + np.abs(parts[fin]) + 1.0
    assert np.all(np.abs(whole[fin] - parts[fin]) <= 1e3 * EPS * scale)


@pytest.mark.parametrize("n", [64, 128, 256])
def test_adjoint_classical_reduction(n):
    """At beta = 1 the adjoint is sum_i (-1)^i d^i (b_i q): compare with numpy stencils."""
    grid = unit(n)
    t = grid.nodes
    b1, b2 = a1, np.cos
    op = FracOperator.kind3(grid, 2.0, [b1, b2], 1.0)
    q = fn(grid, lambda s: np.exp(s) * np.sin(2 * s))
    got = apply_adjoint(adjoint(op), q).values
    d = lambda v: np.gradient(v, grid.h, edge_order=2)  # noqa: E731
    want = 2.0 * q.values - d(b1(t) * q.values) + d(d(b2(t) * q.values))
    assert np.max(np.abs(got - want)[2:-2]) <= 40 * grid.h**2


# ---------------------------------------------------------------- duality


def test_duality_identity_is_rounding():
    grid = unit(64)
    assert duality_residual(FracOperator.identity(grid, a0), bump(grid), smooth_q(grid)) <= 1e-15


def test_duality_zero_p_is_exact():
    grid = unit(64)
    p = GridFn1D(grid, np.zeros(grid.size))
    for op in four_kinds(grid, 0.3).values():
        assert duality_residual(op, p, smooth_q(grid)) == 0.0


def test_duality_half_order_refines():
    res = []
    for n in (64, 128, 256, 512):
        grid = unit(n)
        op = FracOperator.derivative(grid, OpKind.LeftCaputo, 0.5)
        res.append(duality_residual(op, bump(grid), fn(grid, lambda t: 1 + 2 * t - t**3)))
    assert all(c / f >= 1.5 for c, f in zip(res, res[1:])), res


@pytest.mark.parametrize("beta", [0.25, 0.5, 0.75, 1.0])
@pytest.mark.parametrize("name", ["I", "II", "III", "IV"])
def test_duality_converges_for_every_kind(beta, name):
    coarse, fine = unit(128), unit(1024)
    r0 = duality_residual(four_kinds(coarse, beta)[name], bump(coarse), smooth_q(coarse))
    r1 = duality_residual(four_kinds(fine, beta)[name], bump(fine), smooth_q(fine))
    assert r1 <= r0 / 4, (r0, r1)


def test_duality_on_tensor_grid():
    res = []
    for n in (16, 32, 64):
        grid = TensorGrid.box([(0, 1), (0, 1)], n)
        x, y = grid.coordinates()
        p = grid_field(grid, (x * (1 - x) * y * (1 - y)) ** 2)
        q = grid_field(grid, 1 + x + np.cos(y))
        op = FracOperator.partial(grid, 1.0, [(lambda x, y: 1 + x * y, 0, 0.4), (1.0, 1, 0.7)])
        res.append(duality_residual(op, p, q))
    assert res[0] / res[1] >= 1.5 and res[1] / res[2] >= 1.5, res


def grid_field(grid, values):
    from fracnoether.grid import GridField

    return GridField(grid, np.broadcast_to(values, grid.shape))


# ---------------------------------------------------------------- integration by parts


def test_ibp_integral_constants():
    grid = unit(256)
    one = GridFn1D(grid, np.ones(grid.size))
    assert ibp_integral_check(one, one, 0.5) <= 1e-15
    exact = float(mpmath.quad(lambda x: x**0.5 / mpmath.gamma(1.5), [0, 1]))
    assert math.isclose(exact, 0.7522527781, abs_tol=1e-10)
    lhs = integrate(left_rl_integral(one, 0.5))
    rhs = integrate(one * GridFn1D(grid, [rl_integral_right(lambda s: 1.0, x, 1.0, 0.5) for x in grid.nodes]))
    assert abs(lhs - exact) <= 1e-4
    assert abs(rhs - exact) <= 1e-4


def test_ibp_integral_zero():
    grid = unit(32)
    assert ibp_integral_check(GridFn1D(grid, np.zeros(grid.size)), fn(grid, np.cos), 0.5) == 0.0


@pytest.mark.parametrize("n", [32, 64, 128, 256])
def test_ibp_integral_boundary_vanishing_is_exact(n):
    """f(a) = 0 and g(b) = 0 make the discrete identity exact."""
    grid = unit(n)
    r = ibp_integral_check(fn(grid, lambda t: t), fn(grid, lambda t: 1 - t), 0.3)
    assert r <= 1e-15


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.75])
def test_ibp_integral_generic_refines(alpha):
    res = []
    for n in (64, 128, 256, 512):
        grid = unit(n)
        res.append(ibp_integral_check(fn(grid, lambda t: 1 + t * np.exp(t)), fn(grid, lambda t: np.cos(t) * (1 + t)), alpha))
    assert all(c / f >= 1.5 for c, f in zip(res, res[1:])), res


def test_caputo_ibp_zero():
    grid = unit(32)
    z = GridFn1D(grid, np.zeros(grid.size))
    assert caputo_ibp_check(z, z, 0.5) == 0.0


def test_caputo_ibp_constant_f():
    res = []
    for n in (64, 128, 256, 512):
        grid = unit(n)
        res.append(caputo_ibp_check(GridFn1D(grid, np.full(grid.size, 2.0)), fn(grid, np.cos), 0.5))
    assert all(f < c for c, f in zip(res, res[1:])), res


def test_caputo_ibp_polynomial():
    res = []
    for n in (64, 128, 256, 512):
        grid = unit(n)
        res.append(caputo_ibp_check(fn(grid, lambda t: t * (1 - t)), GridFn1D(grid, np.ones(grid.size)), 0.5))
    assert res[-1] <= 1e-3
    assert all(f < c for c, f in zip(res, res[1:])), res
