"""Local transformations, invariance checks and second-Noether identities.

A transformation shifts every dependent variable by fractional differential
operators of ``r`` arbitrary functions::

    xbar^k = x^k + sum_s T[k][s](p_s)

If the action is invariant under it, the Lagrange expressions satisfy, for
*every* configuration ``x`` (not only extremals)::

    sum_k adjoint(T[k][s])(E_k(L)) = 0,   s = 1..r

:func:`noether_residual` evaluates the left side.  :func:`invariance_gap`
checks invariance on a finite, seeded sample of ``p`` functions, which can
falsify invariance but never prove it.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .fracops import FracOrderError
from .grid import GridError, GridField, GridFn1D, TensorGrid, UniformGrid1D
from .opalgebra import FracOperator, adjoint, apply, apply_adjoint, coeff_values
from .variational import (
    FieldConfig,
    Lagrangian1D,
    LagrangianDensity,
    Trajectory,
    action_1d,
    action_md,
    caputo_velocities,
    euler_lagrange_1d,
    euler_lagrange_md,
)

Config = Trajectory | FieldConfig


@dataclass(frozen=True)
class Transformation:
    """``n x r`` matrix of operators; ``None`` entries are zero operators."""

    ops: tuple[tuple[FracOperator | None, ...], ...]

    def __post_init__(self) -> None:
        ops = tuple(tuple(row) for row in self.ops)
        if not ops or not ops[0]:
            raise ValueError("a transformation needs at least one component and parameter")
        if len({len(row) for row in ops}) != 1:
            raise ValueError("every component row needs the same number r of operators")
        domains = {op.domain for row in ops for op in row if op is not None}
        if len(domains) > 1:
            raise GridError("all operators of a transformation must share one domain")
        if domains and isinstance(next(iter(domains)), TensorGrid):
            for row in ops:
                for op in row:
                    if op is not None and any(t.order is not None and t.order > 1.0 for t in op.terms):
                        raise FracOrderError("on tensor grids transformations use partial orders in (0, 1]")
        object.__setattr__(self, "ops", ops)

    @property
    def n(self) -> int:
        return len(self.ops)

    @property
    def r(self) -> int:
        return len(self.ops[0])

    @property
    def domain(self):
        for row in self.ops:
            for op in row:
                if op is not None:
                    return op.domain
        return None

    @classmethod
    def classical(cls, B: Sequence[Sequence[Sequence]], grid: UniformGrid1D) -> Transformation:
        """Integer-order operators ``b0 + b1 d/dt + ... + bl d^l/dt^l``.

        ``B[k][s]`` lists ``[b0, b1, ..., bl]``; built as third-kind operators
        with ``beta = 1``.
        """
        return cls(
            tuple(
                tuple(FracOperator.kind3(grid, coeffs[0], list(coeffs[1:]), 1.0) for coeffs in row)
                for row in B
            )
        )


@dataclass(frozen=True)
class ParamFunctions:
    """The arbitrary functions ``p_1..p_r`` on the transformation's domain."""

    p: tuple[GridFn1D | GridField, ...]
    boundary_vanishing: bool = False

    def __post_init__(self) -> None:
        p = tuple(self.p)
        if not p:
            raise ValueError("need at least one parameter function")
        for f in p[1:]:
            if f.grid != p[0].grid:
                raise GridError("parameter functions must share one grid")
        object.__setattr__(self, "p", p)

    @property
    def r(self) -> int:
        return len(self.p)

    def scaled(self, c: float) -> ParamFunctions:
        return ParamFunctions(tuple(f * c for f in self.p), self.boundary_vanishing)


@dataclass(frozen=True)
class IdentityReport:
    """Residual of every identity ``s`` and its max-norm over interior nodes.

    Interior nodes exclude the first and last cell along every axis.
    """

    residuals: tuple[GridFn1D | GridField, ...]
    norms: tuple[float, ...]
    grid: UniformGrid1D | TensorGrid

    @property
    def max_norm(self) -> float:
        return max(self.norms)


def interior(values: np.ndarray) -> np.ndarray:
    """Drop the nodes of the first and last cell along every axis."""
    return values[tuple(slice(2, -2) for _ in range(values.ndim))]


def interior_norm(values: np.ndarray) -> float:
    """Max-norm over interior nodes; ``inf`` if any interior node is not finite."""
    inner = interior(values)
    if not np.all(np.isfinite(inner)):
        return float("inf")
    return float(np.max(np.abs(inner))) if inner.size else 0.0


def _grid_of(x: Config):
    return x.grid


def transform(x: Config, T: Transformation, p: ParamFunctions) -> Config:
    """``xbar^k = x^k + sum_s T[k][s](p_s)``."""
    if T.n != x.n or T.r != p.r:
        raise ValueError(f"shape mismatch: T is {T.n}x{T.r}, x has {x.n} components, p has {p.r}")
    if T.domain is not None and T.domain != _grid_of(x):
        raise GridError("transformation and configuration live on different grids")
    if p.p[0].grid != _grid_of(x):
        raise GridError("parameter functions and configuration live on different grids")
    out = []
    for comp, row in zip(x.components, T.ops):
        total = comp
        for op, ps in zip(row, p.p):
            if op is not None:
                total = total + apply(op, ps)
        out.append(total)
    return type(x)(tuple(out))


def _action(L, x: Config) -> float:
    if isinstance(L, Lagrangian1D):
        return action_1d(L, x)
    return action_md(L, x)


def invariance_gap(L: Lagrangian1D | LagrangianDensity, x: Config, T: Transformation,
                   samples: Sequence[ParamFunctions]) -> float:
    """``max_samples |J(xbar) - J(x)|``."""
    base = _action(L, x)
    gap = 0.0
    for p in samples:
        gap = max(gap, abs(_action(L, transform(x, T, p)) - base))
    return gap


def lagrange_expressions(L: Lagrangian1D | LagrangianDensity, x: Config):
    if isinstance(L, Lagrangian1D):
        return euler_lagrange_1d(L, x)
    return euler_lagrange_md(L, x)


def noether_residual(L: Lagrangian1D | LagrangianDensity, x: Config, T: Transformation) -> IdentityReport:
    """``sum_k adjoint(T[k][s])(E_k)`` for every ``s``, with interior max-norms."""
    if T.n != x.n:
        raise ValueError(f"transformation has {T.n} rows, configuration {x.n} components")
    E = lagrange_expressions(L, x)
    residuals, norms = [], []
    with np.errstate(invalid="ignore"):
        for s in range(T.r):
            total = np.zeros(E[0].values.shape)
            for k in range(T.n):
                op = T.ops[k][s]
                if op is not None:
                    total = total + apply_adjoint(adjoint(op), E[k]).values
            res = E[0].with_values(total)
            residuals.append(res)
            norms.append(interior_norm(total))
    return IdentityReport(tuple(residuals), tuple(norms), _grid_of(x))


# ---------------------------------------------------------------------------
# Integer-order reference


def _grad(values: np.ndarray, h: float, times: int) -> np.ndarray:
    for _ in range(times):
        values = np.gradient(values, h, edge_order=2)
    return values


def classical_lagrange_expressions(L: Lagrangian1D, x: Trajectory) -> np.ndarray:
    """``E_k = dL/dx^k - d/dt dL/dxdot^k`` with ``numpy.gradient`` stencils."""
    if any(a != 1.0 for a in L.alphas):
        raise FracOrderError("classical identities need every Lagrangian order equal to 1")
    t, X, h = x.grid.nodes, x.values, x.grid.h
    V = np.stack([np.gradient(c, h, edge_order=2) for c in X])
    dx = L.partial_x(t, X, V)
    dv = L.partial_v(t, X, V)
    return np.stack([dx[k] - np.gradient(dv[k], h, edge_order=2) for k in range(L.n)])


def classical_identity_residual(L: Lagrangian1D, x: Trajectory, B) -> IdentityReport:
    """``sum_k b0 E_k + sum_k sum_i (-1)^i d^i/dt^i (b_i E_k)`` per parameter ``s``.

    ``B[k][s]`` lists the coefficients ``[b0, ..., bl]`` (constants or
    callables of ``t``).
    """
    E = classical_lagrange_expressions(L, x)
    grid, h = x.grid, x.grid.h
    r = len(B[0])
    residuals, norms = [], []
    for s in range(r):
        total = np.zeros(grid.size)
        for k in range(L.n):
            for i, b in enumerate(B[k][s]):
                term = coeff_values(b, grid) * E[k]
                total = total + (-1) ** i * _grad(term, h, i)
        residuals.append(GridFn1D(grid, total))
        norms.append(interior_norm(total))
    return IdentityReport(tuple(residuals), tuple(norms), grid)


def classical_identity_check(L: Lagrangian1D, x: Trajectory, B) -> float:
    """Interior max-norm of the classical second-Noether identities."""
    return classical_identity_residual(L, x, B).max_norm


# ---------------------------------------------------------------------------
# Seeded sample families


def _unit(grid: UniformGrid1D, t):
    return (t - grid.a) / (grid.b - grid.a)


def _smooth_factor(rng: np.random.Generator):
    """Random cubic times a Gaussian bump plus a random quadratic, on [0, 1]."""
    c = rng.normal(size=4)
    q = rng.normal(size=3)
    centre = rng.uniform(0.2, 0.8)
    width = rng.uniform(0.2, 0.5)

    def f(s):
        poly = c[0] + c[1] * s + c[2] * s**2 + c[3] * s**3
        return poly * np.exp(-((s - centre) ** 2) / (2 * width**2)) + q[0] + q[1] * s + q[2] * s**2

    return f


def random_trajectory(grid: UniformGrid1D, n: int, seed: int) -> Trajectory:
    """Smooth, generic trajectory (polynomials times Gaussian bumps)."""
    rng = np.random.default_rng(seed)
    comps = []
    for _ in range(n):
        f = _smooth_factor(rng)
        comps.append(GridFn1D(grid, f(_unit(grid, grid.nodes))))
    return Trajectory(tuple(comps))


def random_field(grid: TensorGrid, n: int, seed: int) -> FieldConfig:
    """Smooth generic fields: sums of products of 1D random factors."""
    rng = np.random.default_rng(seed)
    comps = []
    for _ in range(n):
        total = np.zeros(grid.shape)
        for _term in range(2):
            prod = np.ones(grid.shape)
            for axis, ax in enumerate(grid.axes):
                f = _smooth_factor(rng)
                shape = [1] * grid.ndim
                shape[axis] = ax.size
                prod = prod * f(_unit(ax, ax.nodes)).reshape(shape)
            total = total + prod
        comps.append(GridField(grid, total))
    return FieldConfig(tuple(comps))


def random_params(domain: UniformGrid1D | TensorGrid, r: int, count: int = 10, seed: int = 0) -> list[ParamFunctions]:
    """``count`` seeded sets of ``r`` functions that vanish with their first
    derivative on the whole boundary."""
    rng = np.random.default_rng(seed)
    axes = (domain,) if isinstance(domain, UniformGrid1D) else domain.axes
    shape = tuple(ax.size for ax in axes)
    out = []
    for _ in range(count):
        funcs = []
        for _s in range(r):
            prod = np.ones(shape)
            for axis, ax in enumerate(axes):
                s = _unit(ax, ax.nodes)
                f = _smooth_factor(rng)
                factor = s**2 * (1 - s) ** 2 * f(s)
                bshape = [1] * len(axes)
                bshape[axis] = ax.size
                prod = prod * factor.reshape(bshape)
            if isinstance(domain, UniformGrid1D):
                funcs.append(GridFn1D(domain, prod))
            else:
                funcs.append(GridField(domain, prod))
        out.append(ParamFunctions(tuple(funcs), boundary_vanishing=True))
    return out


__all__ = [
    "Transformation",
    "ParamFunctions",
    "IdentityReport",
    "transform",
    "invariance_gap",
    "noether_residual",
    "lagrange_expressions",
    "classical_identity_check",
    "classical_identity_residual",
    "classical_lagrange_expressions",
    "interior",
    "interior_norm",
    "random_trajectory",
    "random_field",
    "random_params",
    "caputo_velocities",
]
