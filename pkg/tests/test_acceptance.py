"""Acceptance suite: one test per criterion, each timed and reported as a
PASS/FAIL line on the terminal (even under output capture)."""

import math
import time

import numpy as np
from scipy.integrate import quad
from scipy.special import gamma as sp_gamma

from fracnoether.cli import SCENARIOS, main
from fracnoether.emfield import Potential, em_fields, em_lagrangian, em_noether_residual, gauge_transform, perturbed_density
from fracnoether.fracops import (
    gamma,
    left_caputo,
    left_rl_derivative,
    right_caputo,
    right_rl_derivative,
)
from fracnoether.grid import GridFn1D, TensorGrid, UniformGrid1D
from fracnoether.noether import (
    Transformation,
    classical_identity_residual,
    interior_norm,
    noether_residual,
    random_field,
    random_trajectory,
)
from fracnoether.opalgebra import FracOperator, caputo_ibp_check, duality_residual, ibp_integral_check
from fracnoether.variational import Lagrangian1D, LagrangianDensity

from rounding import EPS, abs_apply


class Criterion:
    """Times a block and prints ``PASS``/``FAIL criterion k: ...``."""

    def __init__(self, k, limit, capsys):
        self.k, self.limit, self.capsys = k, limit, capsys
        self.checks = []

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def check(self, ok, what):
        self.checks.append((bool(ok), what))

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.start
        if exc_type is not None:
            self.checks.append((False, f"raised {exc_type.__name__}: {exc}"))
        if self.limit is not None:
            self.check(elapsed < self.limit, f"runtime {elapsed:.2f}s < {self.limit}s")
        failed = [w for ok, w in self.checks if not ok]
        status = "FAIL" if failed else "PASS"
        detail = "; ".join(failed) if failed else "; ".join(w for _, w in self.checks)
        with self.capsys.disabled():
            print(f"\n{status} criterion {self.k}: {detail}")
        assert not failed, "; ".join(failed)
        return False


def unit(grid):
    return (grid.nodes - grid.a) / (grid.b - grid.a)


# ---------------------------------------------------------------- 1


def test_criterion_1_operator_correctness(capsys):
    alpha = 0.5
    # Caputo of t^2 at t = 1: int_0^1 2s (1 - s)^(-alpha) ds / Gamma(1 - alpha), algebraic-weight quadrature
    oracle = quad(lambda s: 2 * s, 0, 1, weight="alg", wvar=(0.0, -alpha), epsabs=1e-14)[0] / sp_gamma(1 - alpha)
    with Criterion(1, 1.0, capsys) as c:
        closed = 2.0 / gamma(3.0 - alpha)
        c.check(abs(closed - 1.5045055561) < 1e-9 and abs(closed - oracle) < 1e-12,
                f"closed form {closed:.10f} vs quadrature {oracle:.10f}")
        errs = {}
        for n in (64, 128, 256):
            grid = UniformGrid1D(0.0, 1.0, n)
            d = left_caputo(GridFn1D(grid, grid.nodes**2), alpha).values
            errs[n] = float(np.max(np.abs(d - 2 * grid.nodes ** (2 - alpha) / gamma(3 - alpha))))
        order = math.log2(errs[64] / errs[256]) / 2
        c.check(order >= 1.4, f"order {order:.3f} >= 1.4 (errors {errs[64]:.2e}, {errs[256]:.2e})")


# ---------------------------------------------------------------- 2


def test_criterion_2_classical_limits(capsys):
    ops = {"left caputo": (left_caputo, 1), "right caputo": (right_caputo, -1),
           "left rl": (left_rl_derivative, 1), "right rl": (right_rl_derivative, -1)}
    with Criterion(2, 1.0, capsys) as c:
        errs = {}
        for n in (64, 128):
            grid = UniformGrid1D(0.0, 1.0, n)
            f = GridFn1D(grid, np.sin(np.pi * grid.nodes))
            exact = np.pi * np.cos(np.pi * grid.nodes)
            for name, (op, sign) in ops.items():
                errs[name, n] = float(np.max(np.abs(op(f, 1.0).values - sign * exact)))
        for name in ops:
            e0, e1 = errs[name, 64], errs[name, 128]
            c.check(e1 <= 1e-3, f"{name} error {e1:.2e} <= 1e-3 at n=128")
            c.check(e0 / e1 >= 3.5, f"{name} ratio {e0 / e1:.2f} (second order)")


# ---------------------------------------------------------------- 3


def test_criterion_3_integration_by_parts(capsys):
    sizes = (64, 128, 256, 512)
    with Criterion(3, 5.0, capsys) as c:
        for alpha in (0.25, 0.5, 0.75):
            exact, generic, caputo = [], [], []
            for n in sizes:
                grid = UniformGrid1D(0.0, 1.0, n)
                s = unit(grid)
                exact.append(ibp_integral_check(GridFn1D(grid, s * np.exp(s)), GridFn1D(grid, (1 - s) * np.cos(s)), alpha))
                generic.append(ibp_integral_check(GridFn1D(grid, 1 + s * np.exp(s)), GridFn1D(grid, (1 + s) * np.cos(s)), alpha))
                caputo.append(caputo_ibp_check(GridFn1D(grid, s * (1 - s) * np.exp(s)),
                                               GridFn1D(grid, np.sin(np.pi * s) * (1 + s)), alpha))
            c.check(max(exact) <= 1e-14, f"a={alpha} integral identity, vanishing data: max {max(exact):.1e} (exact)")
            for name, series in (("integral identity, generic data", generic), ("caputo identity", caputo)):
                ratios = [a / b for a, b in zip(series, series[1:])]
                c.check(min(ratios) >= 1.5, f"a={alpha} {name}: ratios {', '.join(f'{r:.2f}' for r in ratios)}")


# ---------------------------------------------------------------- 4


def test_criterion_4_adjoint_duality(capsys):
    beta = 0.3
    a0, a1, a2 = (lambda t: 1.0 + t), (lambda t: 1.0 + 0.5 * t), (lambda t: 2.0 - t)
    with Criterion(4, 10.0, capsys) as c:
        res = {}
        for n in (64, 128, 256):
            grid = UniformGrid1D(0.0, 1.0, n)
            s = unit(grid)
            p = GridFn1D(grid, s**2 * (1 - s) ** 2)
            q = GridFn1D(grid, 1 + s + np.cos(2 * s))
            ops = {
                "I": FracOperator.kind1(grid, a0, [(a1, beta)]),
                "II": FracOperator.kind2(grid, a0, [(a1, beta)]),
                "III": FracOperator.kind3(grid, a0, [a1, a2], beta),
                "IV": FracOperator.kind4(grid, a0, [a1, a2], beta),
            }
            for name, op in ops.items():
                res[name, n] = duality_residual(op, p, q)
        for name in ("I", "II", "III", "IV"):
            r = [res[name, n] for n in (64, 128, 256)]
            ratios = [a / b for a, b in zip(r, r[1:])]
            c.check(r[-1] <= 1e-3, f"kind {name} residual {r[-1]:.1e} at n=256")
            c.check(min(ratios) >= 1.5, f"kind {name} ratios {', '.join(f'{x:.2f}' for x in ratios)}")


# ---------------------------------------------------------------- 5 and 6


def shift_lagrangian(alpha, invariant):
    if invariant:
        return Lagrangian1D(2, (alpha, alpha), lambda t, x, v: 0.5 * (v[0] - v[1]) ** 2,
                            lambda t, x, v: np.zeros(x.shape),
                            lambda t, x, v: np.stack([v[0] - v[1], v[1] - v[0]]))
    return Lagrangian1D(2, (alpha, alpha), lambda t, x, v: 0.5 * v[0] ** 2,
                        lambda t, x, v: np.zeros(x.shape),
                        lambda t, x, v: np.stack([v[0], np.zeros_like(v[1])]))


def test_criterion_5_noether_1d(capsys):
    with Criterion(5, 5.0, capsys) as c:
        for alpha in (0.3, 0.5, 0.9):
            L, Lc = shift_lagrangian(alpha, True), shift_lagrangian(alpha, False)
            worst, control = 0.0, []
            for n in (32, 64, 128, 256):
                grid = UniformGrid1D(0.0, 1.0, n)
                ident = FracOperator.identity(grid)
                T = Transformation(((ident,), (ident,)))
                xs = [random_trajectory(grid, 2, seed) for seed in range(5)]
                worst = max([worst] + [noether_residual(L, x, T).max_norm for x in xs])
                control.append(min(noether_residual(Lc, x, T).max_norm for x in xs))
            c.check(worst <= 1e-10, f"a={alpha} invariant residual {worst:.1e}")
            c.check(min(control) >= 1e-2, f"a={alpha} control min {min(control):.2f}")


def shift_density(alphas, invariant):
    def dg(c, u, g):
        return np.stack([g[0] - g[1], g[1] - g[0]]) if invariant else np.stack([g[0], np.zeros_like(g[1])])

    if invariant:
        L = lambda c, u, g: 0.5 * np.sum((g[0] - g[1]) ** 2, axis=0)  # noqa: E731
    else:
        L = lambda c, u, g: 0.5 * np.sum(g[0] ** 2, axis=0)  # noqa: E731
    return LagrangianDensity(2, 1, tuple(alphas), L, lambda c, u, g: np.zeros(u.shape), dg)


def test_criterion_6_noether_multi_d(capsys):
    with Criterion(6, 30.0, capsys) as c:
        for alpha in (0.3, 0.5, 0.9):
            L, Lc = shift_density((alpha, alpha), True), shift_density((alpha, alpha), False)
            worst, control = 0.0, []
            for n in (16, 32):
                grid = TensorGrid.box([(0.0, 1.0), (0.0, 1.0)], n)
                ident = FracOperator.identity(grid)
                T = Transformation(((ident,), (ident,)))
                xs = [random_field(grid, 2, seed) for seed in range(5)]
                worst = max([worst] + [noether_residual(L, x, T).max_norm for x in xs])
                control.append(min(noether_residual(Lc, x, T).max_norm for x in xs))
            c.check(worst <= 1e-10, f"a={alpha} invariant residual {worst:.1e} up to 32x32")
            c.check(min(control) >= 1e-2, f"a={alpha} control min {min(control):.2f}")


# ---------------------------------------------------------------- 7 and 8

EM_ALPHAS = (0.5, 0.7, 0.6, 0.8)


def potential(grid, seed=11):
    cfg = random_field(grid, 4, seed)
    return Potential(cfg.components[0], cfg.components[1:], EM_ALPHAS)


def field_scales(P, f):
    """Rounding scales of E_k and H_i after a gauge shift by ``f``."""
    grid, a = P.grid, EM_ALPHAS
    u = [np.abs(c.values) + abs_apply(f.values, grid, j, a[j]) for j, c in enumerate(P.components)]
    E = [abs_apply(u[0], grid, k, a[k]) + abs_apply(u[k], grid, 0, a[0]) for k in (1, 2, 3)]
    H = [abs_apply(u[k], grid, j, a[j]) + abs_apply(u[j], grid, k, a[k]) for j, k in ((2, 3), (3, 1), (1, 2))]
    return E + H


def test_criterion_7_em_gauge_invariance(capsys):
    grid = TensorGrid.box([(0.0, 1.0)] * 4, 8)
    assert grid.shape == (9, 9, 9, 9)
    with Criterion(7, 120.0, capsys) as c:
        P = potential(grid)
        F0, J0 = em_fields(P), em_lagrangian(P)
        units, action = 0.0, 0.0
        for seed in range(10):
            f = random_field(grid, 1, 500 + seed).components[0]
            Q = gauge_transform(P, f)
            F = em_fields(Q)
            for old, new, scale in zip(F0.E + F0.H, F.E + F.H, field_scales(P, f)):
                diff = np.abs(new.values - old.values)
                with np.errstate(divide="ignore", invalid="ignore"):
                        units = max(units, float(np.max(np.where(diff > 0, diff / (EPS * scale), 0.0))))
            action = max(action, abs(em_lagrangian(Q) - J0) / abs(J0))
        c.check(units <= 8, f"field change {units:.2f} rounding units")
        c.check(action <= 1e-12, f"relative action change {action:.1e}")


def test_criterion_8_em_noether_identity(capsys):
    with Criterion(8, 300.0, capsys) as c:
        norms, control = {}, {}
        for n in (6, 12):
            P = potential(TensorGrid.box([(0.0, 1.0)] * 4, n))
            norms[n] = interior_norm(em_noether_residual(P).values)
            control[n] = interior_norm(em_noether_residual(P, perturbed_density(EM_ALPHAS)).values)
        ratio = norms[6] / norms[12] if norms[12] > 0 else math.inf
        c.check(ratio >= 1.3, f"residual {norms[6]:.2e} -> {norms[12]:.2e}, ratio {ratio:.2f} >= 1.3")
        c.check(min(control.values()) >= 1e-2, f"perturbed control {control[6]:.2f}, {control[12]:.2f}")


# ---------------------------------------------------------------- 9


def test_criterion_9_classical_reduction(capsys):
    L = Lagrangian1D(
        2, (1.0, 1.0),
        lambda t, x, v: 0.5 * v[0] ** 2 + np.cos(t) * x[0] * x[1] + 0.5 * v[1] ** 2,
        lambda t, x, v: np.stack([np.cos(t) * x[1], np.cos(t) * x[0]]),
        lambda t, x, v: v.copy(),
    )
    B = [[[0.7, 0.4, 0.1]], [[1.0, lambda t: 1 + t]]]
    with Criterion(9, 1.0, capsys) as c:
        gaps, hs = [], []
        for n in (32, 64, 128, 256):
            grid = UniformGrid1D(0.0, 1.0, n)
            s = unit(grid)
            mid = (s >= 0.125 - 1e-12) & (s <= 0.875 + 1e-12)
            x = random_trajectory(grid, 2, 4)
            classical = classical_identity_residual(L, x, B).residuals[0].values
            frac = noether_residual(L, x, Transformation.classical(B, grid)).residuals[0].values
            gaps.append(float(np.max(np.abs(classical - frac)[mid])))
            hs.append(grid.h)
        ratios = [a / b for a, b in zip(gaps, gaps[1:])]
        const = max(g / h**2 for g, h in zip(gaps, hs))
        c.check(min(ratios) >= 3.5, f"gap ratios {', '.join(f'{r:.2f}' for r in ratios)}")
        c.check(const <= 400, f"gap <= {const:.0f} h^2")


# ---------------------------------------------------------------- 10


def test_criterion_10_determinism(tmp_path, capsys):
    with Criterion(10, None, capsys) as c:
        for name in SCENARIOS:
            blobs = []
            for run in range(2):
                out = tmp_path / f"{name}-{run}.csv"
                main(["--scenario", name, "--seed", "5", "--out", str(out)])
                blobs.append(out.read_bytes())
            c.check(blobs[0] == blobs[1] and len(blobs[0]) > 0, f"{name} byte-identical")
