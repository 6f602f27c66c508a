"""Fractional action functionals and Lagrange expressions.

One independent variable::

    J(x) = int_a^b L(t, x, C(a)D_t^alpha x) dt
    E_k(L) = dL/dx^k + (t)D_b^{alpha_k} dL/dv^k

Several independent variables ``x = (x0, ..., xm)`` with partial left Caputo
derivatives ``grad[j][i] = C D_{x_i}^{alpha_i} u^j``::

    E_j(L) = dL/du^j + sum_{i=0..m} (x_i)D_{b_i}^{alpha_i} dL/dgrad[j][i]

The Lagrangians are plain callables on numpy arrays; analytic partials are
preferred, with a central finite-difference fallback for prototyping.  Unless
Python runs with ``-O``, analytic partials are compared against finite
differences of ``eval`` when a Lagrangian is built.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .fracops import FracOrderError, OpKind, apply_along
from .grid import GridError, GridField, GridFn1D, TensorGrid, UniformGrid1D, integrate, sample_1d, sample_field

_FD_REL_STEP = 1e-6
_CONSISTENCY_RTOL = 1e-5


class PartialsMismatch(ValueError):
    """Analytic partial derivatives disagree with finite differences of ``eval``."""


def check_orders(alphas: Sequence[float]) -> tuple[float, ...]:
    alphas = tuple(float(a) for a in alphas)
    for a in alphas:
        if not 0.0 < a <= 1.0:
            raise FracOrderError(f"Lagrangian orders lie in (0, 1], got {a}")
    return alphas


def _fd_partials(func, args: list[np.ndarray], slot: int, lead_ndim: int) -> np.ndarray:
    """Central differences of ``func(*args)`` w.r.t. ``args[slot]``, one
    component (index over the first ``lead_ndim`` axes) at a time, all nodes
    at once."""
    base = args[slot]
    lead_shape = base.shape[:lead_ndim]
    out = np.empty(base.shape)
    for idx in np.ndindex(*lead_shape):
        step = _FD_REL_STEP * (1.0 + np.abs(base[idx]))
        plus, minus = base.copy(), base.copy()
        plus[idx] = plus[idx] + step
        minus[idx] = minus[idx] - step
        hi = func(*[plus if i == slot else a for i, a in enumerate(args)])
        lo = func(*[minus if i == slot else a for i, a in enumerate(args)])
        out[idx] = (hi - lo) / (plus[idx] - minus[idx])
    return out


def _consistent(analytic: np.ndarray, numeric: np.ndarray) -> bool:
    return bool(np.all(np.abs(analytic - numeric) <= _CONSISTENCY_RTOL * (1.0 + np.abs(analytic))))


# ---------------------------------------------------------------------------
# 1D


@dataclass(frozen=True)
class Lagrangian1D:
    """``L(t, x, v)`` with ``n`` components and orders ``alphas``.

    ``eval(t, x, v)`` receives the node array ``t`` of shape ``(N,)`` and
    ``x``, ``v`` of shape ``(n, N)`` and returns shape ``(N,)``.  ``d_dx`` and
    ``d_dv`` return shape ``(n, N)``; when omitted they are replaced by
    central finite differences of ``eval``.  Callbacks must be stateless.
    """

    n: int
    alphas: tuple[float, ...]
    eval: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    d_dx: Callable | None = None
    d_dv: Callable | None = None

    def __post_init__(self) -> None:
        alphas = check_orders(self.alphas)
        if len(alphas) != self.n:
            raise ValueError(f"need {self.n} orders, got {len(alphas)}")
        object.__setattr__(self, "alphas", alphas)
        if __debug__ and (self.d_dx is not None or self.d_dv is not None):
            self.check_partials()

    def partial_x(self, t, x, v) -> np.ndarray:
        if self.d_dx is not None:
            return np.broadcast_to(self.d_dx(t, x, v), x.shape).astype(float)
        return _fd_partials(self.eval, [t, x, v], 1, 1)

    def partial_v(self, t, x, v) -> np.ndarray:
        if self.d_dv is not None:
            return np.broadcast_to(self.d_dv(t, x, v), v.shape).astype(float)
        return _fd_partials(self.eval, [t, x, v], 2, 1)

    def check_partials(self, seed: int = 0, probes: int = 16, t_range=(0.0, 1.0)) -> None:
        """Compare analytic partials against finite differences at random points.

        Raises :class:`PartialsMismatch` on disagreement beyond ``1e-5``
        relative.
        """
        rng = np.random.default_rng(seed)
        t = rng.uniform(*t_range, probes)
        x = rng.normal(size=(self.n, probes))
        v = rng.normal(size=(self.n, probes))
        for name, fn, slot in (("d_dx", self.d_dx, 1), ("d_dv", self.d_dv, 2)):
            if fn is None:
                continue
            if not _consistent(np.broadcast_to(fn(t, x, v), x.shape), _fd_partials(self.eval, [t, x, v], slot, 1)):
                raise PartialsMismatch(f"{name} disagrees with finite differences of eval")

    def __add__(self, other: Lagrangian1D) -> Lagrangian1D:
        if (self.n, self.alphas) != (other.n, other.alphas):
            raise ValueError("can only add Lagrangians with the same components and orders")
        return Lagrangian1D(
            self.n,
            self.alphas,
            lambda t, x, v: self.eval(t, x, v) + other.eval(t, x, v),
            lambda t, x, v: self.partial_x(t, x, v) + other.partial_x(t, x, v),
            lambda t, x, v: self.partial_v(t, x, v) + other.partial_v(t, x, v),
        )

    def __rmul__(self, c: float) -> Lagrangian1D:
        c = float(c)
        return Lagrangian1D(
            self.n,
            self.alphas,
            lambda t, x, v: c * self.eval(t, x, v),
            lambda t, x, v: c * self.partial_x(t, x, v),
            lambda t, x, v: c * self.partial_v(t, x, v),
        )


@dataclass(frozen=True)
class Trajectory:
    """Components ``x^1..x^n`` sampled on one grid."""

    components: tuple[GridFn1D, ...]

    def __post_init__(self) -> None:
        comps = tuple(self.components)
        if not comps:
            raise ValueError("a trajectory needs at least one component")
        for c in comps[1:]:
            if c.grid != comps[0].grid:
                raise GridError("trajectory components must share one grid")
        object.__setattr__(self, "components", comps)

    @classmethod
    def sample(cls, funcs: Sequence[Callable], grid: UniformGrid1D) -> Trajectory:
        return cls(tuple(sample_1d(f, grid) for f in funcs))

    @property
    def grid(self) -> UniformGrid1D:
        return self.components[0].grid

    @property
    def n(self) -> int:
        return len(self.components)

    @property
    def values(self) -> np.ndarray:
        return np.stack([c.values for c in self.components])


def _check_1d(L: Lagrangian1D, x: Trajectory) -> None:
    if L.n != x.n:
        raise ValueError(f"Lagrangian has {L.n} components, trajectory {x.n}")


def caputo_velocities(L: Lagrangian1D, x: Trajectory) -> np.ndarray:
    """``C(a)D_t^{alpha_k} x^k`` for every component, shape ``(n, N)``."""
    h = x.grid.h
    return np.stack(
        [apply_along(c.values, 0, h, OpKind.LeftCaputo, a) for c, a in zip(x.components, L.alphas)]
    )


def action_1d(L: Lagrangian1D, x: Trajectory) -> float:
    """Trapezoidal value of the action along ``x``."""
    _check_1d(L, x)
    t = x.grid.nodes
    density = np.broadcast_to(L.eval(t, x.values, caputo_velocities(L, x)), t.shape)
    return integrate(GridFn1D(x.grid, density))


def euler_lagrange_1d(L: Lagrangian1D, x: Trajectory) -> list[GridFn1D]:
    """Fractional Lagrange expressions ``E_k(L)`` along ``x``.

    Node ``n`` is non-finite wherever ``dL/dv^k`` does not vanish at ``b``.
    """
    _check_1d(L, x)
    t, X = x.grid.nodes, x.values
    V = caputo_velocities(L, x)
    dx = L.partial_x(t, X, V)
    dv = L.partial_v(t, X, V)
    out = []
    for k, alpha in enumerate(L.alphas):
        tail = apply_along(dv[k], 0, x.grid.h, OpKind.RightRLDerivative, alpha)
        out.append(GridFn1D(x.grid, dx[k] + tail))
    return out


# ---------------------------------------------------------------------------
# Several independent variables


@dataclass(frozen=True)
class LagrangianDensity:
    """``L(x, u, grad)`` for ``n`` fields on ``m + 1`` axes.

    Shapes: coordinates are broadcastable arrays, ``u`` is ``(n, *grid)``,
    ``grad`` is ``(n, m + 1, *grid)`` with ``grad[j, i]`` the partial Caputo
    derivative of ``u^j`` along axis ``i``.  ``d_du`` and ``d_dgrad`` return
    arrays shaped like ``u`` and ``grad``.
    """

    n: int
    m: int
    alphas: tuple[float, ...]
    eval: Callable
    d_du: Callable | None = None
    d_dgrad: Callable | None = None

    def __post_init__(self) -> None:
        alphas = check_orders(self.alphas)
        if len(alphas) != self.m + 1:
            raise ValueError(f"need {self.m + 1} orders (axes 0..m), got {len(alphas)}")
        object.__setattr__(self, "alphas", alphas)
        if __debug__ and (self.d_du is not None or self.d_dgrad is not None):
            self.check_partials()

    def _eval_flat(self, coords):
        def f(u, grad):
            return self.eval(coords, u, grad)

        return f

    def partial_u(self, coords, u, grad) -> np.ndarray:
        if self.d_du is not None:
            return np.broadcast_to(self.d_du(coords, u, grad), u.shape).astype(float)
        return _fd_partials(self._eval_flat(coords), [u, grad], 0, 1)

    def partial_grad(self, coords, u, grad) -> np.ndarray:
        if self.d_dgrad is not None:
            return np.broadcast_to(self.d_dgrad(coords, u, grad), grad.shape).astype(float)
        return _fd_partials(self._eval_flat(coords), [u, grad], 1, 2)

    def check_partials(self, seed: int = 0, probes: int = 8) -> None:
        rng = np.random.default_rng(seed)
        coords = tuple(rng.uniform(0.0, 1.0, probes) for _ in range(self.m + 1))
        u = rng.normal(size=(self.n, probes))
        grad = rng.normal(size=(self.n, self.m + 1, probes))
        f = self._eval_flat(coords)
        for name, fn, slot, shape in (
            ("d_du", self.d_du, 0, u.shape),
            ("d_dgrad", self.d_dgrad, 1, grad.shape),
        ):
            if fn is None:
                continue
            analytic = np.broadcast_to(fn(coords, u, grad), shape)
            if not _consistent(analytic, _fd_partials(f, [u, grad], slot, slot + 1)):
                raise PartialsMismatch(f"{name} disagrees with finite differences of eval")

    def __add__(self, other: LagrangianDensity) -> LagrangianDensity:
        if (self.n, self.m, self.alphas) != (other.n, other.m, other.alphas):
            raise ValueError("can only add densities with the same fields, axes and orders")
        return LagrangianDensity(
            self.n,
            self.m,
            self.alphas,
            lambda c, u, g: self.eval(c, u, g) + other.eval(c, u, g),
            lambda c, u, g: self.partial_u(c, u, g) + other.partial_u(c, u, g),
            lambda c, u, g: self.partial_grad(c, u, g) + other.partial_grad(c, u, g),
        )


@dataclass(frozen=True)
class FieldConfig:
    """Fields ``u^1..u^n`` sampled on one tensor grid."""

    components: tuple[GridField, ...] = field()

    def __post_init__(self) -> None:
        comps = tuple(self.components)
        if not comps:
            raise ValueError("a field configuration needs at least one component")
        for c in comps[1:]:
            if c.grid != comps[0].grid:
                raise GridError("field components must share one grid")
        object.__setattr__(self, "components", comps)

    @classmethod
    def sample(cls, funcs: Sequence[Callable], grid: TensorGrid) -> FieldConfig:
        return cls(tuple(sample_field(f, grid) for f in funcs))

    @property
    def grid(self) -> TensorGrid:
        return self.components[0].grid

    @property
    def n(self) -> int:
        return len(self.components)

    @property
    def values(self) -> np.ndarray:
        return np.stack([c.values for c in self.components])


def _check_md(Ld: LagrangianDensity, u: FieldConfig) -> None:
    if Ld.n != u.n:
        raise ValueError(f"density has {Ld.n} fields, configuration {u.n}")
    if Ld.m + 1 != u.grid.ndim:
        raise ValueError(f"density expects {Ld.m + 1} axes, grid has {u.grid.ndim}")


def caputo_gradient(Ld: LagrangianDensity, u: FieldConfig) -> np.ndarray:
    """``grad[j, i] = C D_{x_i}^{alpha_i} u^j``, shape ``(n, m + 1, *grid)``."""
    axes = u.grid.axes
    return np.stack(
        [
            np.stack(
                [apply_along(c.values, i, axes[i].h, OpKind.LeftCaputo, a) for i, a in enumerate(Ld.alphas)]
            )
            for c in u.components
        ]
    )


def action_md(Ld: LagrangianDensity, u: FieldConfig) -> float:
    """Tensor trapezoidal value of the action over the grid box."""
    _check_md(Ld, u)
    coords = u.grid.coordinates()
    density = np.broadcast_to(Ld.eval(coords, u.values, caputo_gradient(Ld, u)), u.grid.shape)
    return integrate(GridField(u.grid, density))


def euler_lagrange_md(Ld: LagrangianDensity, u: FieldConfig) -> list[GridField]:
    """Lagrange expressions ``E_j`` for every field; the sum runs over axes 0..m."""
    _check_md(Ld, u)
    coords = u.grid.coordinates()
    grad = caputo_gradient(Ld, u)
    du = Ld.partial_u(coords, u.values, grad)
    dgrad = Ld.partial_grad(coords, u.values, grad)
    axes = u.grid.axes
    out = []
    for j in range(Ld.n):
        total = du[j].copy()
        for i, alpha in enumerate(Ld.alphas):
            # opposite infinities meet at singular corners; those nodes are NaN by design
            with np.errstate(invalid="ignore"):
                total = total + apply_along(dgrad[j, i], i, axes[i].h, OpKind.RightRLDerivative, alpha)
        out.append(GridField(u.grid, total))
    return out
