"""Uniform 1D grids, tensor-product grids and sampled functions on them.

All fractional operators in this package assume a constant step, so only
uniform, node-inclusive grids are provided: both interval endpoints are nodes.
Multi-dimensional data is stored as an ``ndarray`` whose axis ``i`` runs over
the nodes of grid axis ``i`` (axis 0 is time), which makes the flattened
values row-major.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from itertools import product

import numpy as np


class GridError(ValueError):
    """Raised on malformed grids or non-finite samples."""


def _frozen(values: np.ndarray) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class UniformGrid1D:
    """Uniform grid on ``[a, b]`` with ``n`` subintervals and ``n + 1`` nodes."""

    a: float
    b: float
    n: int

    def __post_init__(self) -> None:
        if not (np.isfinite(self.a) and np.isfinite(self.b)):
            raise GridError("grid endpoints must be finite")
        if not self.a < self.b:
            raise GridError(f"need a < b, got a={self.a}, b={self.b}")
        if int(self.n) != self.n or self.n < 2:
            raise GridError(f"need an integer n >= 2, got {self.n}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def h(self) -> float:
        return (self.b - self.a) / self.n

    @property
    def size(self) -> int:
        """Number of nodes."""
        return self.n + 1

    def node(self, j: int) -> float:
        if not 0 <= j <= self.n:
            raise IndexError(f"node index {j} outside [0, {self.n}]")
        if j == self.n:
            return float(self.b)
        return self.a + j * self.h

    @property
    def nodes(self) -> np.ndarray:
        x = self.a + np.arange(self.n + 1) * self.h
        x[-1] = self.b
        return x

    def reflect(self, x):
        """Image of ``x`` under ``x -> a + b - x``."""
        return self.a + self.b - x


def refine(grid: UniformGrid1D, factor: int) -> UniformGrid1D:
    """Split every cell of ``grid`` into ``factor`` equal cells.

    Node ``j`` of the coarse grid is node ``j * factor`` of the result.
    """
    if int(factor) != factor or factor < 2:
        raise GridError(f"refinement factor must be an integer >= 2, got {factor}")
    return UniformGrid1D(grid.a, grid.b, grid.n * int(factor))


def restrict(values: np.ndarray, factor: int, axis: int = 0) -> np.ndarray:
    """Values of a refined sampling at the coarse nodes (exact injection)."""
    values = np.asarray(values)
    index = [slice(None)] * values.ndim
    index[axis] = slice(None, None, int(factor))
    return values[tuple(index)]


@dataclass(frozen=True)
class GridFn1D:
    """Real function sampled at the nodes of a :class:`UniformGrid1D`.

    Non-finite values are only produced by operators at singular endpoint
    nodes (see :mod:`fracnoether.fracops`); user samples must be finite.
    """

    grid: UniformGrid1D
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        values = _frozen(self.values)
        if values.shape != (self.grid.size,):
            raise GridError(
                f"expected {self.grid.size} values, got shape {values.shape}"
            )
        object.__setattr__(self, "values", values)

    @property
    def nodes(self) -> np.ndarray:
        return self.grid.nodes

    def with_values(self, values) -> GridFn1D:
        return GridFn1D(self.grid, values)

    def __add__(self, other: GridFn1D) -> GridFn1D:
        _check_same(self.grid, other.grid)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: GridFn1D) -> GridFn1D:
        _check_same(self.grid, other.grid)
        return self.with_values(self.values - other.values)

    def __mul__(self, c) -> GridFn1D:
        if isinstance(c, GridFn1D):
            _check_same(self.grid, c.grid)
            return self.with_values(self.values * c.values)
        return self.with_values(self.values * float(c))

    __rmul__ = __mul__

    def __neg__(self) -> GridFn1D:
        return self.with_values(-self.values)


def _check_same(g1, g2) -> None:
    if g1 != g2:
        raise GridError(f"grid mismatch: {g1} vs {g2}")


def sample_1d(f: Callable[[np.ndarray], np.ndarray], grid: UniformGrid1D) -> GridFn1D:
    """Sample ``f`` at every node of ``grid``.

    ``f`` is called once with the node array; scalar-only callables are
    evaluated node by node as a fallback.
    """
    x = grid.nodes
    try:
        values = np.broadcast_to(np.asarray(f(x), dtype=float), x.shape).copy()
    except (TypeError, ValueError):
        values = np.array([float(f(float(t))) for t in x])
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        j = int(bad[0])
        raise GridError(f"non-finite sample {values[j]} at node {j} (t={x[j]})")
    return GridFn1D(grid, values)


@dataclass(frozen=True)
class TensorGrid:
    """Tensor product of uniform 1D grids; axis 0 is time."""

    axes: tuple[UniformGrid1D, ...]

    def __post_init__(self) -> None:
        axes = tuple(self.axes)
        if not axes:
            raise GridError("a tensor grid needs at least one axis")
        for ax in axes:
            if not isinstance(ax, UniformGrid1D):
                raise GridError(f"axis {ax!r} is not a UniformGrid1D")
        object.__setattr__(self, "axes", axes)

    @classmethod
    def box(cls, bounds: Sequence[tuple[float, float]], n: int | Sequence[int]) -> TensorGrid:
        if np.isscalar(n):
            n = [int(n)] * len(bounds)
        return cls(tuple(UniformGrid1D(a, b, k) for (a, b), k in zip(bounds, n)))

    @property
    def ndim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(ax.size for ax in self.axes)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(ax.h for ax in self.axes)

    def coordinates(self) -> tuple[np.ndarray, ...]:
        """Broadcastable coordinate arrays, one per axis (``ij`` indexing)."""
        return tuple(np.meshgrid(*(ax.nodes for ax in self.axes), indexing="ij", sparse=True))


@dataclass(frozen=True)
class GridField:
    """Real function sampled at every node of a :class:`TensorGrid`."""

    grid: TensorGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        values = _frozen(self.values)
        if values.size != int(np.prod(self.grid.shape)):
            raise GridError(
                f"expected {int(np.prod(self.grid.shape))} values, got {values.size}"
            )
        object.__setattr__(self, "values", _frozen(values.reshape(self.grid.shape)))

    def with_values(self, values) -> GridField:
        return GridField(self.grid, values)

    def __add__(self, other: GridField) -> GridField:
        _check_same(self.grid, other.grid)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: GridField) -> GridField:
        _check_same(self.grid, other.grid)
        return self.with_values(self.values - other.values)

    def __mul__(self, c) -> GridField:
        if isinstance(c, GridField):
            _check_same(self.grid, c.grid)
            return self.with_values(self.values * c.values)
        return self.with_values(self.values * float(c))

    __rmul__ = __mul__

    def __neg__(self) -> GridField:
        return self.with_values(-self.values)

    @property
    def flat(self) -> np.ndarray:
        """Values in row-major node order."""
        return self.values.reshape(-1)


def sample_field(f: Callable[..., np.ndarray], grid: TensorGrid) -> GridField:
    """Sample ``f(x0, x1, ..., xm)`` at every node of ``grid``.

    ``f`` receives broadcastable coordinate arrays and should return an array
    broadcastable to ``grid.shape``; scalar callables fall back to a node loop.
    """
    try:
        values = np.broadcast_to(
            np.asarray(f(*grid.coordinates()), dtype=float), grid.shape
        ).copy()
    except (TypeError, ValueError):
        values = np.empty(grid.shape)
        nodes = [ax.nodes for ax in grid.axes]
        for idx in product(*(range(k) for k in grid.shape)):
            values[idx] = float(f(*(nodes[i][j] for i, j in enumerate(idx))))
    bad = np.argwhere(~np.isfinite(values))
    if bad.size:
        idx = tuple(int(i) for i in bad[0])
        raise GridError(f"non-finite sample {values[idx]} at node {idx}")
    return GridField(grid, values)


def integrate(f: GridFn1D | GridField) -> float:
    """Trapezoidal integral over the whole grid.

    Written cell by cell (mean of the ``2**d`` corner values times the cell
    volume), which equals the tensor trapezoidal rule when every sample is
    finite.  Cells touching a non-finite sample are skipped, which is how the
    singular endpoint cells of RL derivatives are excluded.
    """
    if isinstance(f, GridFn1D):
        values, spacing = f.values, (f.grid.h,)
    else:
        values, spacing = f.values, f.grid.spacing
    finite = np.isfinite(values)
    clean = np.where(finite, values, 0.0)
    ndim = clean.ndim
    total = np.zeros(tuple(s - 1 for s in clean.shape))
    valid = np.ones(total.shape, dtype=bool)
    for corner in product((0, 1), repeat=ndim):
        index = tuple(slice(c, c + s - 1) for c, s in zip(corner, clean.shape))
        total = total + clean[index]
        valid &= finite[index]
    volume = float(np.prod(spacing)) / 2**ndim
    return float(np.sum(total[valid]) * volume)
