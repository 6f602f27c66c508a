"""Linear fractional differential operators, their formal adjoints, and
numerical checks of fractional integration by parts.

An operator is a sum of terms ``coeff(x) * D p`` where ``D`` is the identity
or a left/right Caputo derivative (along one axis on tensor grids).  Its
formal adjoint replaces every Caputo derivative by the Riemann-Liouville
derivative of the opposite side and moves the coefficient inside::

    a * C(a)D^beta   ->   q -> (x)D(b)^beta (a q)
    a * C(x)D(b)^beta   ->   q -> (a)D(x)^beta (a q)
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from numbers import Real

import numpy as np

from .fracops import OpKind, apply_along, left_rl_integral, right_rl_integral
from .fracops import left_caputo, right_rl_derivative, validate_order
from .grid import GridError, GridField, GridFn1D, TensorGrid, UniformGrid1D, integrate

Coeff = Real | Callable[..., np.ndarray]
Domain = UniformGrid1D | TensorGrid
Sampled = GridFn1D | GridField

_ADJOINT_KIND = {
    OpKind.LeftCaputo: OpKind.RightRLDerivative,
    OpKind.RightCaputo: OpKind.LeftRLDerivative,
}


def coeff_values(coeff: Coeff, domain: Domain) -> np.ndarray:
    """Evaluate a constant or callable coefficient at every node of ``domain``."""
    if isinstance(domain, UniformGrid1D):
        shape, coords = (domain.size,), (domain.nodes,)
    else:
        shape, coords = domain.shape, domain.coordinates()
    if isinstance(coeff, Real):
        return np.full(shape, float(coeff))
    values = np.broadcast_to(np.asarray(coeff(*coords), dtype=float), shape).copy()
    if not np.all(np.isfinite(values)):
        raise GridError("operator coefficient is not finite on the whole domain")
    return values


def _axis_count(domain: Domain) -> int:
    return 1 if isinstance(domain, UniformGrid1D) else domain.ndim


def _axis_grid(domain: Domain, axis: int) -> UniformGrid1D:
    return domain if isinstance(domain, UniformGrid1D) else domain.axes[axis]


@dataclass(frozen=True)
class OperatorTerm:
    """``coeff * D``; ``kind is None`` means the identity (no order)."""

    coeff: Coeff = 1.0
    kind: OpKind | None = None
    order: float | None = None
    axis: int = 0

    def __post_init__(self) -> None:
        if self.kind is None:
            if self.order is not None:
                raise ValueError("identity terms carry no order")
            return
        kind = OpKind(self.kind)
        if kind not in _ADJOINT_KIND:
            raise ValueError(f"operator terms use Caputo derivatives, got {kind.value}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "order", validate_order(kind, self.order))

    @property
    def is_identity(self) -> bool:
        return self.kind is None


@dataclass(frozen=True)
class FracOperator:
    """Sum of :class:`OperatorTerm` on a shared 1D or tensor domain."""

    terms: tuple[OperatorTerm, ...]
    domain: Domain

    def __post_init__(self) -> None:
        terms = tuple(self.terms)
        if not terms:
            raise ValueError("an operator needs at least one term")
        naxes = _axis_count(self.domain)
        for term in terms:
            if not 0 <= term.axis < naxes:
                raise ValueError(f"term axis {term.axis} outside a {naxes}-axis domain")
            coeff_values(term.coeff, self.domain)
        object.__setattr__(self, "terms", terms)

    def __add__(self, other: FracOperator) -> FracOperator:
        if other.domain != self.domain:
            raise GridError("cannot add operators on different domains")
        return FracOperator(self.terms + other.terms, self.domain)

    @property
    def kind(self) -> str:
        """Structural tag: ``identity``, ``I``, ``II``, ``III``, ``IV`` or ``mixed``.

        Advisory only; every combination is a valid operator.
        """
        derivs = [t for t in self.terms if not t.is_identity]
        if not derivs:
            return "identity"
        kinds = {t.kind for t in derivs}
        if len(kinds) > 1:
            return "mixed"
        side = "I" if kinds == {OpKind.LeftCaputo} else "II"
        orders = sorted(t.order for t in derivs)
        if orders[-1] <= 1.0:
            return side
        if isinstance(self.domain, TensorGrid) or len({t.axis for t in derivs}) > 1:
            return "mixed"
        beta = orders[0]
        if 0.0 < beta <= 1.0 and all(
            math.isclose(o, beta + i, abs_tol=1e-12) for i, o in enumerate(orders)
        ):
            return "III" if side == "I" else "IV"
        return "mixed"

    # -- constructors -----------------------------------------------------

    @classmethod
    def identity(cls, domain: Domain, coeff: Coeff = 1.0) -> FracOperator:
        return cls((OperatorTerm(coeff),), domain)

    @classmethod
    def zero(cls, domain: Domain) -> FracOperator:
        return cls.identity(domain, 0.0)

    @classmethod
    def derivative(
        cls, domain: Domain, kind: OpKind, order: float, coeff: Coeff = 1.0, axis: int = 0
    ) -> FracOperator:
        """Single term ``coeff * D``."""
        return cls((OperatorTerm(coeff, kind, order, axis),), domain)

    @classmethod
    def kind1(cls, domain: UniformGrid1D, a0: Coeff, terms: Sequence[tuple[Coeff, float]]) -> FracOperator:
        """``a0 + sum_i a_i * C(a)D_t^{beta_i}`` with ``0 < beta_i <= 1``."""
        return cls._sided(domain, a0, terms, OpKind.LeftCaputo)

    @classmethod
    def kind2(cls, domain: UniformGrid1D, a0: Coeff, terms: Sequence[tuple[Coeff, float]]) -> FracOperator:
        """``a0 + sum_i a_i * C(t)D_b^{beta_i}`` with ``0 < beta_i <= 1``."""
        return cls._sided(domain, a0, terms, OpKind.RightCaputo)

    @classmethod
    def _sided(cls, domain, a0, terms, kind):
        out = [OperatorTerm(a0)]
        for coeff, beta in terms:
            if not 0.0 < beta <= 1.0:
                raise ValueError(f"kind I/II orders lie in (0, 1], got {beta}")
            out.append(OperatorTerm(coeff, kind, beta))
        return cls(tuple(out), domain)

    @classmethod
    def kind3(cls, domain: UniformGrid1D, a0: Coeff, coeffs: Sequence[Coeff], beta: float) -> FracOperator:
        """``a0 + a_1 C D^beta + a_2 C D^{1+beta} + ... + a_l C D^{l-1+beta}`` (left)."""
        return cls._ladder(domain, a0, coeffs, beta, OpKind.LeftCaputo)

    @classmethod
    def kind4(cls, domain: UniformGrid1D, a0: Coeff, coeffs: Sequence[Coeff], beta: float) -> FracOperator:
        """Right-sided counterpart of :meth:`kind3`."""
        return cls._ladder(domain, a0, coeffs, beta, OpKind.RightCaputo)

    @classmethod
    def _ladder(cls, domain, a0, coeffs, beta, kind):
        if not 0.0 < beta <= 1.0:
            raise ValueError(f"beta must lie in (0, 1], got {beta}")
        out = [OperatorTerm(a0)]
        out += [OperatorTerm(c, kind, i + beta) for i, c in enumerate(coeffs)]
        return cls(tuple(out), domain)

    @classmethod
    def partial(
        cls,
        domain: TensorGrid,
        c0: Coeff,
        terms: Sequence[tuple[Coeff, int, float]],
        kind: OpKind = OpKind.LeftCaputo,
    ) -> FracOperator:
        """``c0 + sum_i c_i * C D_{x_i}^{beta_i}``; ``terms`` holds ``(c_i, axis, beta_i)``.

        ``kind`` selects first kind (left) or second kind (right) partial
        derivatives.
        """
        out = [OperatorTerm(c0)]
        for coeff, axis, beta in terms:
            if not 0.0 < beta <= 1.0:
                raise ValueError(f"partial operator orders lie in (0, 1], got {beta}")
            out.append(OperatorTerm(coeff, kind, beta, axis))
        return cls(tuple(out), domain)


@dataclass(frozen=True)
class AdjointOperator:
    """``q -> identity_coeff * q + sum coeff_i-weighted RL derivatives``.

    ``terms`` holds ``(coeff, kind, order, axis)`` with RL-derivative kinds;
    the coefficient multiplies ``q`` before differentiation.
    """

    identity_coeff: np.ndarray
    terms: tuple[tuple[Coeff, OpKind, float, int], ...]
    domain: Domain


def _check_domain(domain: Domain, f: Sampled) -> None:
    if f.grid != domain:
        raise GridError(f"function lives on {f.grid}, operator on {domain}")


def _derivative(values: np.ndarray, domain: Domain, kind: OpKind, order: float, axis: int) -> np.ndarray:
    grid = _axis_grid(domain, axis)
    if order > 1.0 and grid.n < 4 * math.ceil(order):
        raise ValueError(f"need n >= {4 * math.ceil(order)} along axis {axis} for order {order}")
    return apply_along(values, axis, grid.h, kind, order)


def apply(op: FracOperator, p: Sampled) -> Sampled:
    """``sum_terms coeff * D p`` evaluated node-wise."""
    _check_domain(op.domain, p)
    out = np.zeros(p.values.shape)
    for term in op.terms:
        c = coeff_values(term.coeff, op.domain)
        if term.is_identity:
            out = out + c * p.values
        else:
            out = out + c * _derivative(p.values, op.domain, term.kind, term.order, term.axis)
    return p.with_values(out)


def adjoint(op: FracOperator) -> AdjointOperator:
    """Formal adjoint: identity coefficients add up, Caputo terms turn into
    RL derivatives of the opposite side acting on ``coeff * q``."""
    ident = np.zeros(coeff_values(0.0, op.domain).shape)
    terms = []
    for term in op.terms:
        if term.is_identity:
            ident = ident + coeff_values(term.coeff, op.domain)
        else:
            terms.append((term.coeff, _ADJOINT_KIND[term.kind], term.order, term.axis))
    return AdjointOperator(ident, tuple(terms), op.domain)


def apply_adjoint(adj: AdjointOperator, q: Sampled) -> Sampled:
    _check_domain(adj.domain, q)
    out = adj.identity_coeff * q.values
    for coeff, kind, order, axis in adj.terms:
        inner = coeff_values(coeff, adj.domain) * q.values
        out = out + _derivative(inner, adj.domain, kind, order, axis)
    return q.with_values(out)


def duality_residual(op: FracOperator, p: Sampled, q: Sampled) -> float:
    """``|int q T(p) - int p T~(q)|`` by trapezoidal quadrature.

    ``p`` must make the boundary terms vanish (``p`` and the derivative
    traces it needs are zero at the boundary); they are not evaluated.
    """
    lhs = integrate(q * apply(op, p))
    with np.errstate(invalid="ignore"):
        rhs = integrate(p * apply_adjoint(adjoint(op), q))
    return abs(lhs - rhs)


def ibp_integral_check(f: GridFn1D, g: GridFn1D, alpha: float) -> float:
    """``|int g aI_x^alpha f - int f xI_b^alpha g|``."""
    _check_domain(f.grid, g)
    lhs = integrate(g * left_rl_integral(f, alpha))
    rhs = integrate(f * right_rl_integral(g, alpha))
    return abs(lhs - rhs)


def caputo_ibp_check(f: GridFn1D, g: GridFn1D, alpha: float) -> float:
    """Residual of ``int g C(a)D^alpha f = [f xI_b^{1-alpha} g]_a^b + int f xD_b^alpha g``.

    The last cell is skipped where the RL derivative of ``g`` is singular.
    """
    _check_domain(f.grid, g)
    lhs = integrate(g * left_caputo(f, alpha))
    tail = right_rl_integral(g, 1.0 - alpha).values
    boundary = f.values[-1] * tail[-1] - f.values[0] * tail[0]
    with np.errstate(invalid="ignore"):
        rhs = integrate(f * right_rl_derivative(g, alpha))
    return abs(lhs - boundary - rhs)
