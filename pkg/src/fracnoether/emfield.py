"""Fractional electromagnetism on a 4-axis box (axis 0 is time).

With ``grad[j][i] = C D_{x_i}^{alpha_i} A_j`` for the potentials
``(A0, A1, A2, A3)``::

    E_k = grad[0][k] - grad[k][0]                       k = 1, 2, 3
    H   = (grad[3][2] - grad[2][3], grad[1][3] - grad[3][1], grad[2][1] - grad[1][2])
    L   = (|E|^2 - |H|^2) / (8 pi)

A gauge transformation adds ``C D_{x_j}^{alpha_j} f`` to ``A_j``.  Partial
stencils along distinct axes commute, so ``E`` and ``H`` are unchanged up to
rounding and the Lagrange expressions obey
``sum_j (x_j)D_{b_j}^{alpha_j} E_j(L) = 0``.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from .fracops import OpKind, apply_along
from .grid import GridError, GridField, TensorGrid
from .noether import ParamFunctions, Transformation, noether_residual, transform
from .opalgebra import FracOperator
from .variational import FieldConfig, LagrangianDensity, check_orders, action_md

_CYCLIC = ((1, 2, 3), (2, 3, 1), (3, 1, 2))
_INV_8PI = 1.0 / (8.0 * np.pi)


@dataclass(frozen=True)
class Potential:
    """Scalar potential ``A0``, vector potential ``A`` and orders ``alpha_0..alpha_3``."""

    A0: GridField
    A: tuple[GridField, GridField, GridField]
    alphas: tuple[float, float, float, float]

    def __post_init__(self) -> None:
        A = tuple(self.A)
        if len(A) != 3:
            raise ValueError(f"the vector potential has 3 components, got {len(A)}")
        alphas = check_orders(self.alphas)
        if len(alphas) != 4:
            raise ValueError(f"need 4 orders alpha_0..alpha_3, got {len(alphas)}")
        if self.A0.grid.ndim != 4:
            raise GridError(f"potentials live on a 4-axis grid, got {self.A0.grid.ndim} axes")
        for c in A:
            if c.grid != self.A0.grid:
                raise GridError("all potential components must share one grid")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "alphas", alphas)

    @property
    def grid(self) -> TensorGrid:
        return self.A0.grid

    @property
    def components(self) -> tuple[GridField, ...]:
        return (self.A0, *self.A)

    @classmethod
    def sample(cls, funcs: Sequence[Callable], grid: TensorGrid, alphas) -> Potential:
        """From four callables ``A_j(x0, x1, x2, x3)``."""
        cfg = FieldConfig.sample(funcs, grid)
        return cls(cfg.components[0], cfg.components[1:], tuple(alphas))

    @classmethod
    def zero(cls, grid: TensorGrid, alphas) -> Potential:
        z = GridField(grid, np.zeros(grid.shape))
        return cls(z, (z, z, z), tuple(alphas))

    def config(self) -> FieldConfig:
        return FieldConfig(self.components)


@dataclass(frozen=True)
class EMFields:
    E: tuple[GridField, GridField, GridField]
    H: tuple[GridField, GridField, GridField]


def _d(values: np.ndarray, grid: TensorGrid, axis: int, alpha: float) -> np.ndarray:
    return apply_along(values, axis, grid.axes[axis].h, OpKind.LeftCaputo, alpha)


def _check_alphas(alphas) -> tuple[float, ...]:
    alphas = check_orders(alphas)
    if len(alphas) != 4:
        raise ValueError(f"need 4 orders alpha_0..alpha_3, got {len(alphas)}")
    return alphas


def frac_grad(A0: GridField, alphas) -> tuple[GridField, GridField, GridField]:
    """Spatial fractional gradient: component ``i`` differentiates along axis ``i``."""
    alphas = _check_alphas(alphas)
    grid = A0.grid
    return tuple(A0.with_values(_d(A0.values, grid, i, alphas[i])) for i in (1, 2, 3))


def frac_curl(A: Sequence[GridField], alphas) -> tuple[GridField, GridField, GridField]:
    """``H_i = D_j A_k - D_k A_j`` for cyclic ``(i, j, k)``."""
    alphas = _check_alphas(alphas)
    A = tuple(A)
    grid = A[0].grid
    out = []
    for i, j, k in _CYCLIC:
        val = _d(A[k - 1].values, grid, j, alphas[j]) - _d(A[j - 1].values, grid, k, alphas[k])
        out.append(A[0].with_values(val))
    return tuple(out)


def em_fields(P: Potential) -> EMFields:
    """``E = grad A0 - D_0 A`` and ``H = curl A``."""
    grad = frac_grad(P.A0, P.alphas)
    E = tuple(
        g.with_values(g.values - _d(a.values, P.grid, 0, P.alphas[0])) for g, a in zip(grad, P.A)
    )
    return EMFields(E, frac_curl(P.A, P.alphas))


def _fields_from_grad(grad: np.ndarray):
    E = np.stack([grad[0, k] - grad[k, 0] for k in (1, 2, 3)])
    H = np.stack([grad[k, j] - grad[j, k] for _, j, k in _CYCLIC])
    return E, H


def _density_eval(coords, u, grad):
    E, H = _fields_from_grad(grad)
    return _INV_8PI * (np.sum(E**2, axis=0) - np.sum(H**2, axis=0))


def _density_d_du(coords, u, grad):
    return np.zeros(u.shape)


def _density_d_dgrad(coords, u, grad):
    E, H = _fields_from_grad(grad)
    G = np.zeros(grad.shape)
    for k in (1, 2, 3):
        G[0, k] += 2 * _INV_8PI * E[k - 1]
        G[k, 0] -= 2 * _INV_8PI * E[k - 1]
    for idx, (_, j, k) in enumerate(_CYCLIC):
        # H_idx = grad[k, j] - grad[j, k] enters with a minus sign
        G[k, j] -= 2 * _INV_8PI * H[idx]
        G[j, k] += 2 * _INV_8PI * H[idx]
    return G


def em_density(alphas) -> LagrangianDensity:
    """``(|E|^2 - |H|^2) / (8 pi)`` as a density in the fields ``(A0, A1, A2, A3)``."""
    return LagrangianDensity(4, 3, _check_alphas(alphas), _density_eval, _density_d_du, _density_d_dgrad)


def perturbed_density(alphas, c: float = 1.0) -> LagrangianDensity:
    """EM density plus ``c * A0^2``, which breaks gauge invariance."""
    c = float(c)

    def d_du(coords, u, grad):
        out = np.zeros(u.shape)
        out[0] = 2 * c * u[0]
        return out

    mass = LagrangianDensity(
        4, 3, _check_alphas(alphas), lambda coords, u, grad: c * u[0] ** 2, d_du, lambda coords, u, grad: np.zeros(grad.shape)
    )
    return em_density(alphas) + mass


def em_lagrangian(P: Potential) -> float:
    """Action of the EM density over the grid box (tensor trapezoid)."""
    return action_md(em_density(P.alphas), P.config())


def gauge_transformation(grid: TensorGrid, alphas) -> Transformation:
    """``n = 4, r = 1`` transformation with ``T[j][0] = C D_{x_j}^{alpha_j}``."""
    alphas = _check_alphas(alphas)
    return Transformation(
        tuple((FracOperator.partial(grid, 0.0, [(1.0, j, alphas[j])]),) for j in range(4))
    )


def gauge_transform(P: Potential, f: GridField) -> Potential:
    """``A_j -> A_j + C D_{x_j}^{alpha_j} f`` for ``j = 0..3``."""
    if f.grid != P.grid:
        raise GridError(f"gauge function lives on {f.grid}, potential on {P.grid}")
    cfg = transform(P.config(), gauge_transformation(P.grid, P.alphas), ParamFunctions((f,)))
    return Potential(cfg.components[0], cfg.components[1:], P.alphas)


def em_noether_residual(P: Potential, density: LagrangianDensity | None = None) -> GridField:
    """``sum_j (x_j)D_{b_j}^{alpha_j} E_j(L)``.

    ``density`` defaults to the EM density; pass :func:`perturbed_density` for a
    negative control.  Use :func:`fracnoether.noether.interior_norm` to measure
    it away from the singular boundary cells.
    """
    density = em_density(P.alphas) if density is None else density
    report = noether_residual(density, P.config(), gauge_transformation(P.grid, P.alphas))
    return report.residuals[0]
