"""Discrete Riemann-Liouville and Caputo operators on uniform grids.

Schemes
-------
* RL integrals: product trapezoidal rule (piecewise-linear ``f``, exact
  integration of the kernel ``(x - t)**(alpha - 1)``), order 2.
* Caputo derivatives, ``0 < alpha < 1``: L1 scheme, order ``2 - alpha``.
* ``alpha == 1`` and integer-order derivatives: classical second-order finite
  differences (centred inside, one-sided at the ends).
* Caputo of order ``mu > 1``: ``I**(ceil(mu) - mu)`` of the ``ceil(mu)``-th
  finite-difference derivative.
* RL derivatives: Caputo derivative plus the boundary terms
  ``f^(k)(a) (x - a)**(k - mu) / Gamma(k + 1 - mu)``.

Every derivative acts on first differences of the samples, so constants are
annihilated exactly.  Right-sided operators are the left ones conjugated by
the reflection ``x -> a + b - x``.

Singular endpoints
------------------
An RL derivative of a function that does not vanish at the lower limit blows
up there; the node is stored as a signed infinity.  When an operator is fed a
fiber whose only non-finite samples sit at one or both ends, it is evaluated
on the shortened uniform sub-grid of finite samples and the dropped end nodes
are returned as NaN.  Fibers with interior non-finite samples give all NaN.
"""

from __future__ import annotations

import enum
import math
from functools import lru_cache

import numpy as np

from .grid import GridField, GridFn1D

__all__ = [
    "FracOrderError",
    "OpKind",
    "gamma",
    "rgamma",
    "left_rl_integral",
    "right_rl_integral",
    "left_caputo",
    "right_caputo",
    "left_rl_derivative",
    "right_rl_derivative",
    "left_caputo_high",
    "right_caputo_high",
    "left_rl_derivative_high",
    "right_rl_derivative_high",
    "classical_derivative",
    "partial_frac",
    "apply_along",
]


class FracOrderError(ValueError):
    """Order outside the range an operator is defined for."""


class OpKind(enum.Enum):
    LeftRLIntegral = "left-rl-integral"
    RightRLIntegral = "right-rl-integral"
    LeftRLDerivative = "left-rl-derivative"
    RightRLDerivative = "right-rl-derivative"
    LeftCaputo = "left-caputo"
    RightCaputo = "right-caputo"

    @property
    def is_left(self) -> bool:
        return self in (OpKind.LeftRLIntegral, OpKind.LeftRLDerivative, OpKind.LeftCaputo)

    @property
    def mirror(self) -> OpKind:
        return _MIRROR[self]

    @property
    def is_derivative(self) -> bool:
        return self not in (OpKind.LeftRLIntegral, OpKind.RightRLIntegral)


_MIRROR = {
    OpKind.LeftRLIntegral: OpKind.RightRLIntegral,
    OpKind.RightRLIntegral: OpKind.LeftRLIntegral,
    OpKind.LeftRLDerivative: OpKind.RightRLDerivative,
    OpKind.RightRLDerivative: OpKind.LeftRLDerivative,
    OpKind.LeftCaputo: OpKind.RightCaputo,
    OpKind.RightCaputo: OpKind.LeftCaputo,
}


# ---------------------------------------------------------------------------
# Gamma function

# Lanczos approximation, g = 7, 9 terms.
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_SQRT_2PI = math.sqrt(2.0 * math.pi)


def _is_pole(z: float) -> bool:
    return z <= 0 and z == math.floor(z)


def gamma(z: float) -> float:
    """Gamma function via the Lanczos approximation (g=7, 9 coefficients).

    Uses the reflection formula below ``z = 0.5``.  Raises ``ValueError`` at
    the poles ``z = 0, -1, -2, ...``.
    """
    z = float(z)
    if not math.isfinite(z):
        raise ValueError(f"gamma of non-finite argument {z}")
    if _is_pole(z):
        raise ValueError(f"gamma has a pole at z={z:g}")
    if z < 0.5:
        return math.pi / (math.sin(math.pi * z) * gamma(1.0 - z))
    z -= 1.0
    x = _LANCZOS_COEF[0]
    for i in range(1, len(_LANCZOS_COEF)):
        x += _LANCZOS_COEF[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    # split the power so large z does not overflow before the exp factor
    half = t ** (0.5 * (z + 0.5))
    return _SQRT_2PI * half * (half * math.exp(-t)) * x


def rgamma(z: float) -> float:
    """``1 / Gamma(z)``, zero at the poles."""
    if _is_pole(float(z)):
        return 0.0
    return 1.0 / gamma(z)


# ---------------------------------------------------------------------------
# Weight matrices (left-sided; unit conventions noted per builder)


def _check_order(mu: float, lo: float, hi: float, *, lo_open: bool, name: str) -> float:
    mu = float(mu)
    ok = (mu > lo if lo_open else mu >= lo) and mu <= hi
    if not (math.isfinite(mu) and ok):
        bracket = "(" if lo_open else "["
        raise FracOrderError(f"{name}: order {mu} outside {bracket}{lo}, {hi}]")
    return mu


@lru_cache(maxsize=256)
def _rl_integral_matrix(N: int, h: float, alpha: float) -> np.ndarray:
    """Product-trapezoid weights of the left RL integral, shape ``(N, N)``."""
    if alpha == 0.0:
        return np.eye(N)
    W = np.zeros((N, N))
    c = h**alpha / gamma(alpha + 2.0)
    j = np.arange(1, N)
    W[j, 0] = (j - 1.0) ** (alpha + 1.0) - (j - 1.0 - alpha) * j**alpha
    W[j, j] = 1.0
    # interior weights depend on m = j - k only
    m = np.arange(1, N, dtype=float)
    interior = (m + 1.0) ** (alpha + 1.0) - 2.0 * m ** (alpha + 1.0) + (m - 1.0) ** (alpha + 1.0)
    for row in range(2, N):
        W[row, 1:row] = interior[row - 2 :: -1][: row - 1]
    W *= c
    W.setflags(write=False)
    return W


@lru_cache(maxsize=256)
def _l1_matrix(N: int, h: float, alpha: float) -> np.ndarray:
    """L1 weights acting on first differences, shape ``(N, N - 1)``."""
    m = np.arange(N - 1, dtype=float)
    b = (m + 1.0) ** (1.0 - alpha) - m ** (1.0 - alpha)
    B = np.zeros((N, N - 1))
    for j in range(1, N):
        B[j, :j] = b[j - 1 :: -1]
    B *= h ** (-alpha) * rgamma(2.0 - alpha)
    B.setflags(write=False)
    return B


def _fd_weights(offsets: np.ndarray, k: int) -> np.ndarray:
    """Weights of the ``k``-th derivative at offset 0 on unit spacing."""
    p = np.arange(len(offsets))
    V = np.asarray(offsets, dtype=float)[None, :] ** p[:, None]
    rhs = np.zeros(len(offsets))
    rhs[k] = math.factorial(k)
    return np.linalg.solve(V, rhs)


def _fd_min_nodes(k: int) -> int:
    return max(3, k + 2)


@lru_cache(maxsize=256)
def _fd_matrix(N: int, h: float, k: int) -> np.ndarray:
    """Second-order ``k``-th derivative stencils on first differences, ``(N, N - 1)``.

    Centred ``2p+1``-point stencils inside (``p = ceil(k/2)``), one-sided
    ``k+2``-point stencils where the centred one does not fit.
    """
    if N < _fd_min_nodes(k):
        raise ValueError(f"need at least {_fd_min_nodes(k)} nodes for a derivative of order {k}")
    p = (k + 1) // 2
    width = k + 2
    W = np.zeros((N, N))
    for j in range(N):
        if p <= j <= N - 1 - p:
            idx = np.arange(j - p, j + p + 1)
        elif j < p:
            idx = np.arange(0, width)
        else:
            idx = np.arange(N - width, N)
        W[j, idx] = _fd_weights(idx - j, k)
    # sum_i w_i f_i == sum_i v_i (f_{i+1} - f_i) with v_i = -sum_{l<=i} w_l
    V = -np.cumsum(W, axis=1)[:, :-1]
    V *= h ** (-k)
    V.setflags(write=False)
    return V


# ---------------------------------------------------------------------------
# Left-sided kernels on 2D arrays of fibers (rows are fibers)


def _left_integral(F: np.ndarray, h: float, mu: float) -> np.ndarray:
    if mu == 0.0:
        return F.copy()
    return F @ _rl_integral_matrix(F.shape[1], h, mu).T


def _left_caputo(F: np.ndarray, h: float, mu: float) -> np.ndarray:
    N = F.shape[1]
    d = np.diff(F, axis=1)
    if mu < 1.0:
        return d @ _l1_matrix(N, h, mu).T
    n = math.ceil(mu)
    deriv = d @ _fd_matrix(N, h, n).T
    return _left_integral(deriv, h, n - mu)


def _left_rl_derivative(F: np.ndarray, h: float, mu: float) -> np.ndarray:
    out = _left_caputo(F, h, mu)
    n = math.ceil(mu)
    N = F.shape[1]
    x = np.arange(N) * h
    singular = np.zeros(F.shape[0], dtype=bool)
    lead = np.zeros(F.shape[0])
    for k in range(n):
        coef = rgamma(k + 1.0 - mu)
        if coef == 0.0:
            continue
        if k == 0:
            trace = F[:, 0]
        else:
            trace = np.diff(F, axis=1) @ _fd_matrix(N, h, k)[0]
        out[:, 1:] += np.outer(trace * coef, x[1:] ** (k - mu))
        fresh = (trace != 0.0) & ~singular
        lead[fresh] = np.sign(trace[fresh] * coef)
        singular |= trace != 0.0
    out[singular, 0] = lead[singular] * np.inf
    return out


_LEFT_KERNELS = {
    "integral": _left_integral,
    "caputo": _left_caputo,
    "rl": _left_rl_derivative,
}


def _min_nodes(family: str, mu: float) -> int:
    if family == "integral":
        return 2
    return _fd_min_nodes(max(1, math.ceil(mu)))


def _apply_fibers(F: np.ndarray, h: float, family: str, mu: float) -> np.ndarray:
    """Apply a left-sided operator to each row of ``F`` with the endpoint policy."""
    kernel = _LEFT_KERNELS[family]
    nfib, N = F.shape
    out = np.full((nfib, N), np.nan)
    finite = np.isfinite(F)
    inner = finite[:, 1:-1].all(axis=1)
    first = finite[:, 0]
    last = finite[:, -1]
    need = _min_nodes(family, mu)
    for keep_first, keep_last in ((True, True), (True, False), (False, True), (False, False)):
        rows = np.flatnonzero(inner & (first == keep_first) & (last == keep_last))
        if rows.size == 0:
            continue
        lo = 0 if keep_first else 1
        hi = N if keep_last else N - 1
        if hi - lo < need:
            continue
        out[rows, lo:hi] = kernel(F[rows, lo:hi], h, mu)
    return out


def apply_along(values: np.ndarray, axis: int, h: float, kind: OpKind, mu: float) -> np.ndarray:
    """Apply the operator ``kind`` of order ``mu`` along ``axis`` of ``values``.

    No order validation happens here; callers use the public wrappers.
    """
    values = np.asarray(values, dtype=float)
    family = {
        OpKind.LeftRLIntegral: "integral",
        OpKind.RightRLIntegral: "integral",
        OpKind.LeftCaputo: "caputo",
        OpKind.RightCaputo: "caputo",
        OpKind.LeftRLDerivative: "rl",
        OpKind.RightRLDerivative: "rl",
    }[kind]
    moved = np.moveaxis(values, axis, -1)
    shape = moved.shape
    F = moved.reshape(-1, shape[-1])
    if not kind.is_left:
        F = F[:, ::-1]
    out = _apply_fibers(F, h, family, mu)
    if not kind.is_left:
        out = out[:, ::-1]
    return np.moveaxis(out.reshape(shape), -1, axis)


# ---------------------------------------------------------------------------
# Public 1D operators


def _validate(kind: OpKind, mu: float, name: str) -> float:
    if not kind.is_derivative:
        return _check_order(mu, 0.0, 1.0, lo_open=False, name=name)
    return _check_order(mu, 0.0, 1.0, lo_open=True, name=name)


def _validate_high(mu: float, name: str) -> float:
    mu = float(mu)
    if not (math.isfinite(mu) and mu > 1.0):
        raise FracOrderError(f"{name}: order {mu} must exceed 1 (use the order <= 1 operator)")
    return mu


def _run_1d(f: GridFn1D, kind: OpKind, mu: float) -> GridFn1D:
    return f.with_values(apply_along(f.values, 0, f.grid.h, kind, mu))


def _check_high_resolution(f: GridFn1D, mu: float, name: str) -> None:
    if f.grid.n < 4 * math.ceil(mu):
        raise ValueError(f"{name}: need n >= {4 * math.ceil(mu)} for order {mu}, got n={f.grid.n}")


def left_rl_integral(f: GridFn1D, alpha: float) -> GridFn1D:
    """Left RL integral ``aI_x^alpha f`` (identity at ``alpha = 0``)."""
    alpha = _validate(OpKind.LeftRLIntegral, alpha, "left_rl_integral")
    return _run_1d(f, OpKind.LeftRLIntegral, alpha)


def right_rl_integral(f: GridFn1D, alpha: float) -> GridFn1D:
    """Right RL integral ``xI_b^alpha f`` (identity at ``alpha = 0``)."""
    alpha = _validate(OpKind.RightRLIntegral, alpha, "right_rl_integral")
    return _run_1d(f, OpKind.RightRLIntegral, alpha)


def left_caputo(f: GridFn1D, alpha: float) -> GridFn1D:
    """Left Caputo derivative, ``0 < alpha <= 1``.

    L1 scheme for ``alpha < 1``; at ``alpha = 1`` the second-order classical
    derivative.
    """
    alpha = _validate(OpKind.LeftCaputo, alpha, "left_caputo")
    return _run_1d(f, OpKind.LeftCaputo, alpha)


def right_caputo(f: GridFn1D, alpha: float) -> GridFn1D:
    """Right Caputo derivative; ``-df/dx`` at ``alpha = 1``."""
    alpha = _validate(OpKind.RightCaputo, alpha, "right_caputo")
    return _run_1d(f, OpKind.RightCaputo, alpha)


def left_rl_derivative(f: GridFn1D, alpha: float) -> GridFn1D:
    """Left RL derivative via ``C D f + f(a) (x-a)**-alpha / Gamma(1-alpha)``.

    Node 0 is ``+-inf`` when ``f(a) != 0`` and ``alpha < 1``.
    """
    alpha = _validate(OpKind.LeftRLDerivative, alpha, "left_rl_derivative")
    return _run_1d(f, OpKind.LeftRLDerivative, alpha)


def right_rl_derivative(f: GridFn1D, alpha: float) -> GridFn1D:
    """Right RL derivative; node ``n`` is ``+-inf`` when ``f(b) != 0``."""
    alpha = _validate(OpKind.RightRLDerivative, alpha, "right_rl_derivative")
    return _run_1d(f, OpKind.RightRLDerivative, alpha)


def left_caputo_high(f: GridFn1D, mu: float) -> GridFn1D:
    """Left Caputo derivative of order ``mu > 1``."""
    mu = _validate_high(mu, "left_caputo_high")
    _check_high_resolution(f, mu, "left_caputo_high")
    return _run_1d(f, OpKind.LeftCaputo, mu)


def right_caputo_high(f: GridFn1D, mu: float) -> GridFn1D:
    """Right Caputo derivative of order ``mu > 1``, built on ``(-d/dx)**ceil(mu)``."""
    mu = _validate_high(mu, "right_caputo_high")
    _check_high_resolution(f, mu, "right_caputo_high")
    return _run_1d(f, OpKind.RightCaputo, mu)


def left_rl_derivative_high(f: GridFn1D, mu: float) -> GridFn1D:
    """Left RL derivative of order ``mu > 1`` (needed by adjoints of kind IV)."""
    mu = _validate_high(mu, "left_rl_derivative_high")
    _check_high_resolution(f, mu, "left_rl_derivative_high")
    return _run_1d(f, OpKind.LeftRLDerivative, mu)


def right_rl_derivative_high(f: GridFn1D, mu: float) -> GridFn1D:
    """Right RL derivative of order ``mu > 1`` (needed by adjoints of kind III)."""
    mu = _validate_high(mu, "right_rl_derivative_high")
    _check_high_resolution(f, mu, "right_rl_derivative_high")
    return _run_1d(f, OpKind.RightRLDerivative, mu)


def classical_derivative(f: GridFn1D, k: int = 1) -> GridFn1D:
    """``k``-th derivative with the same second-order stencils used at integer orders."""
    d = np.diff(f.values)
    return f.with_values(_fd_matrix(f.grid.size, f.grid.h, int(k)) @ d)


# ---------------------------------------------------------------------------
# Partial operators


def validate_order(kind: OpKind, mu: float) -> float:
    """Check ``mu`` for ``kind``; derivatives accept any ``mu > 0``."""
    if kind.is_derivative:
        mu = float(mu)
        if not (math.isfinite(mu) and mu > 0.0):
            raise FracOrderError(f"{kind.value}: order {mu} must be positive")
        return mu
    return _validate(kind, mu, kind.value)


def partial_frac(F: GridField, axis: int, kind: OpKind, mu: float) -> GridField:
    """Apply a 1D operator along ``axis`` to every fiber of ``F``.

    Derivative kinds with ``mu > 1`` use the higher-order schemes.
    """
    ndim = F.grid.ndim
    if not (isinstance(axis, (int, np.integer)) and 0 <= axis < ndim):
        raise IndexError(f"axis {axis} out of range for a {ndim}-axis grid")
    kind = OpKind(kind)
    mu = validate_order(kind, mu)
    ax = F.grid.axes[axis]
    if mu > 1.0 and ax.n < 4 * math.ceil(mu):
        raise ValueError(f"axis {axis}: need n >= {4 * math.ceil(mu)} for order {mu}")
    return F.with_values(apply_along(F.values, axis, ax.h, kind, mu))
