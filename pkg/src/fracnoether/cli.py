"""Command-line runner for the built-in verification scenarios.

Each scenario sweeps ``levels`` grids (``n, 2n, 4n, ...`` subintervals per
axis) and emits one CSV row per measured residual.  Every row carries the
behaviour it is expected to show:

* ``machine-zero``: value at most :data:`MACHINE_ZERO`,
* ``decreasing``: successive ratio (coarse / fine) at least :data:`MIN_RATIO`,
* ``bounded-away``: value on the finest grid at least ``10 * MACHINE_ZERO``.

Exit codes: 0 all rows pass, 1 verification failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .emfield import Potential, em_fields, em_lagrangian, em_noether_residual, gauge_transform, perturbed_density
from .fracops import (
    gamma,
    left_caputo,
    left_rl_derivative,
    right_caputo,
    right_rl_derivative,
)
from .grid import GridFn1D, TensorGrid, UniformGrid1D, sample_1d
from .noether import (
    Transformation,
    classical_identity_residual,
    interior_norm,
    invariance_gap,
    noether_residual,
    random_field,
    random_params,
    random_trajectory,
)
from .opalgebra import FracOperator, caputo_ibp_check, duality_residual, ibp_integral_check
from .variational import Lagrangian1D, LagrangianDensity

MACHINE_ZERO = 1e-10
MIN_RATIO = 1.3
TAGS = ("machine-zero", "decreasing", "bounded-away")
HEADER = ("scenario", "n", "orders", "residual", "value", "tag")


class UsageError(ValueError):
    """Invalid scenario configuration (exit code 2)."""


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    n: int | None = None
    orders: tuple[float, ...] = ()
    levels: int | None = None
    seed: int = 0
    bounds: tuple[tuple[float, float], ...] = ((0.0, 1.0),)
    out: str | None = None

    def resolved(self) -> ScenarioConfig:
        """Fill scenario defaults and validate."""
        if self.scenario not in SCENARIOS:
            raise UsageError(f"unknown scenario {self.scenario!r}; use --list")
        defaults = SCENARIOS[self.scenario]
        cfg = replace(
            self,
            n=defaults.n if self.n is None else int(self.n),
            levels=defaults.levels if self.levels is None else int(self.levels),
            orders=tuple(float(o) for o in (self.orders or defaults.orders)),
            bounds=tuple((float(a), float(b)) for a, b in self.bounds),
        )
        if cfg.n < 8:
            raise UsageError(f"n must be at least 8, got {cfg.n}")
        if cfg.levels < 1:
            raise UsageError(f"levels must be at least 1, got {cfg.levels}")
        for o in cfg.orders:
            if not 0.0 < o <= 1.0:
                raise UsageError(f"orders lie in (0, 1], got {o}")
        for a, b in cfg.bounds:
            if not (math.isfinite(a) and math.isfinite(b) and a < b):
                raise UsageError(f"bad interval ({a}, {b})")
        return cfg

    def sizes(self) -> list[int]:
        return [self.n * 2**k for k in range(self.levels)]

    def interval(self, axis: int = 0) -> tuple[float, float]:
        return self.bounds[axis] if axis < len(self.bounds) else self.bounds[-1]

    def grid(self, n: int) -> UniformGrid1D:
        return UniformGrid1D(*self.interval(0), n)

    def box(self, n: int, ndim: int) -> TensorGrid:
        return TensorGrid.box([self.interval(i) for i in range(ndim)], n)


@dataclass(frozen=True)
class ReportRow:
    scenario: str
    n: int
    orders: tuple[float, ...]
    residual: str
    value: float
    tag: str

    def __post_init__(self) -> None:
        if self.tag not in TAGS:
            raise ValueError(f"unknown tag {self.tag!r}")


@dataclass(frozen=True)
class Verdict:
    passed: bool
    failures: tuple[str, ...] = field(default=())

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1


@dataclass(frozen=True)
class _Scenario:
    run: Callable[[ScenarioConfig], list[ReportRow]]
    verifies: str
    n: int
    levels: int
    orders: tuple[float, ...]


# ---------------------------------------------------------------------------
# Scenarios


def _unit(grid: UniformGrid1D) -> np.ndarray:
    return (grid.nodes - grid.a) / (grid.b - grid.a)


def _convergence(cfg: ScenarioConfig) -> list[ReportRow]:
    rows = []
    for alpha in cfg.orders:
        for n in cfg.sizes():
            grid = cfg.grid(n)
            a = grid.a
            f = sample_1d(lambda t: (t - a) ** 2, grid)
            exact = 2.0 * (grid.nodes - a) ** (2.0 - alpha) / gamma(3.0 - alpha)
            err = float(np.max(np.abs(left_caputo(f, alpha).values - exact)))
            rows.append(ReportRow(cfg.scenario, n, (alpha,), "caputo_max_error", err, "decreasing"))
    return rows


def _ibp(cfg: ScenarioConfig) -> list[ReportRow]:
    rows = []
    for alpha in cfg.orders:
        for n in cfg.sizes():
            grid = cfg.grid(n)
            s = _unit(grid)
            vanishing = ibp_integral_check(
                GridFn1D(grid, s * np.exp(s)), GridFn1D(grid, (1 - s) * np.cos(s)), alpha
            )
            generic = ibp_integral_check(
                GridFn1D(grid, 1 + s * np.exp(s)), GridFn1D(grid, np.cos(s) * (1 + s)), alpha
            )
            caputo = caputo_ibp_check(
                GridFn1D(grid, s * (1 - s) * np.exp(s)), GridFn1D(grid, np.sin(np.pi * s) * (1 + s)), alpha
            )
            key = (alpha,)
            rows += [
                ReportRow(cfg.scenario, n, key, "integral_ibp_vanishing", vanishing, "machine-zero"),
                ReportRow(cfg.scenario, n, key, "integral_ibp_generic", generic, "decreasing"),
                ReportRow(cfg.scenario, n, key, "caputo_ibp", caputo, "decreasing"),
            ]
    return rows


def duality_operators(grid: UniformGrid1D, beta: float) -> dict[str, FracOperator]:
    """One operator of each kind; kinds III/IV carry orders ``beta`` and ``1 + beta``."""
    a0 = lambda t: 1.0 + t  # noqa: E731
    a1 = lambda t: 1.0 + 0.5 * t  # noqa: E731
    a2 = lambda t: 2.0 - t  # noqa: E731
    return {
        "I": FracOperator.kind1(grid, a0, [(a1, beta)]),
        "II": FracOperator.kind2(grid, a0, [(a1, beta)]),
        "III": FracOperator.kind3(grid, a0, [a1, a2], beta),
        "IV": FracOperator.kind4(grid, a0, [a1, a2], beta),
    }


def _duality(cfg: ScenarioConfig) -> list[ReportRow]:
    rows = []
    for beta in cfg.orders:
        for n in cfg.sizes():
            grid = cfg.grid(n)
            s = _unit(grid)
            p = GridFn1D(grid, s**2 * (1 - s) ** 2)
            q = GridFn1D(grid, 1 + s + np.cos(2 * s))
            for name, op in duality_operators(grid, beta).items():
                value = duality_residual(op, p, q)
                rows.append(ReportRow(cfg.scenario, n, (beta,), f"duality_kind_{name}", value, "decreasing"))
    return rows


def same_shift_lagrangian(alpha: float) -> Lagrangian1D:
    """``(v1 - v2)^2 / 2``: invariant when both components shift by the same function."""
    return Lagrangian1D(
        2,
        (alpha, alpha),
        lambda t, x, v: 0.5 * (v[0] - v[1]) ** 2,
        lambda t, x, v: np.zeros(x.shape),
        lambda t, x, v: np.stack([v[0] - v[1], v[1] - v[0]]),
    )


def control_lagrangian(alpha: float) -> Lagrangian1D:
    """``v1^2 / 2``: not invariant under the same shift."""
    return Lagrangian1D(
        2,
        (alpha, alpha),
        lambda t, x, v: 0.5 * v[0] ** 2,
        lambda t, x, v: np.zeros(x.shape),
        lambda t, x, v: np.stack([v[0], np.zeros_like(v[1])]),
    )


def _noether_rows(cfg, n, key, L, Lc, configs, shifts, params):
    """Max residual over configurations for invariant pairs, min for the control."""
    rows = []
    for name, T in shifts.items():
        value = max(noether_residual(L, x, T).max_norm for x in configs)
        rows.append(ReportRow(cfg.scenario, n, key, f"residual_{name}", value, "machine-zero"))
    T = shifts["shift"]
    control = min(noether_residual(Lc, x, T).max_norm for x in configs)
    rows.append(ReportRow(cfg.scenario, n, key, "residual_control", control, "bounded-away"))
    gap = max(invariance_gap(L, x, T, params) for x in configs)
    rows.append(ReportRow(cfg.scenario, n, key, "invariance_gap_shift", gap, "machine-zero"))
    gap_c = min(invariance_gap(Lc, x, T, params) for x in configs)
    rows.append(ReportRow(cfg.scenario, n, key, "invariance_gap_control", gap_c, "bounded-away"))
    return rows


def _noether_1d(cfg: ScenarioConfig) -> list[ReportRow]:
    rows = []
    for alpha in cfg.orders:
        for n in cfg.sizes():
            grid = cfg.grid(n)
            ident = FracOperator.identity(grid)
            deriv = FracOperator.kind1(grid, 0.0, [(1.0, 0.5)])
            shifts = {
                "shift": Transformation(((ident,), (ident,))),
                "caputo_shift": Transformation(((deriv,), (deriv,))),
            }
            configs = [random_trajectory(grid, 2, cfg.seed + i) for i in range(5)]
            params = random_params(grid, 1, 10, cfg.seed)
            rows += _noether_rows(
                cfg, n, (alpha,), same_shift_lagrangian(alpha), control_lagrangian(alpha), configs, shifts, params
            )
    return rows


def same_shift_density(alphas: Sequence[float]) -> LagrangianDensity:
    """``sum_i (grad[0, i] - grad[1, i])^2 / 2`` for two fields."""

    def d_dgrad(c, u, g):
        d = g[0] - g[1]
        return np.stack([d, -d])

    return LagrangianDensity(
        2,
        len(alphas) - 1,
        tuple(alphas),
        lambda c, u, g: 0.5 * np.sum((g[0] - g[1]) ** 2, axis=0),
        lambda c, u, g: np.zeros(u.shape),
        d_dgrad,
    )


def control_density(alphas: Sequence[float]) -> LagrangianDensity:
    """``sum_i grad[0, i]^2 / 2``."""

    def d_dgrad(c, u, g):
        return np.stack([g[0], np.zeros_like(g[1])])

    return LagrangianDensity(
        2,
        len(alphas) - 1,
        tuple(alphas),
        lambda c, u, g: 0.5 * np.sum(g[0] ** 2, axis=0),
        lambda c, u, g: np.zeros(u.shape),
        d_dgrad,
    )


def _noether_md(cfg: ScenarioConfig) -> list[ReportRow]:
    rows = []
    for alpha in cfg.orders:
        alphas = (alpha, alpha)
        for n in cfg.sizes():
            grid = cfg.box(n, 2)
            ident = FracOperator.identity(grid)
            deriv = FracOperator.partial(grid, 0.0, [(1.0, 1, 0.5)])
            shifts = {
                "shift": Transformation(((ident,), (ident,))),
                "caputo_shift": Transformation(((deriv,), (deriv,))),
            }
            configs = [random_field(grid, 2, cfg.seed + i) for i in range(5)]
            params = random_params(grid, 1, 10, cfg.seed)
            rows += _noether_rows(
                cfg, n, alphas, same_shift_density(alphas), control_density(alphas), configs, shifts, params
            )
    return rows


EM_ORDERS = (0.5, 0.7, 0.6, 0.8)


def _em_orders(cfg: ScenarioConfig) -> tuple[float, ...]:
    if len(cfg.orders) == 1:
        return cfg.orders * 4
    if len(cfg.orders) != 4:
        raise UsageError(f"EM scenarios take 1 or 4 orders, got {len(cfg.orders)}")
    return cfg.orders


def random_potential(grid: TensorGrid, alphas, seed: int) -> Potential:
    cfg = random_field(grid, 4, seed)
    return Potential(cfg.components[0], cfg.components[1:], tuple(alphas))


def _em_gauge(cfg: ScenarioConfig) -> list[ReportRow]:
    alphas = _em_orders(cfg)
    rows = []
    for n in cfg.sizes():
        grid = cfg.box(n, 4)
        P = random_potential(grid, alphas, cfg.seed)
        F0, J0 = em_fields(P), em_lagrangian(P)
        field_change, action_change = 0.0, 0.0
        for i in range(10):
            f = random_field(grid, 1, cfg.seed + 1000 + i).components[0]
            Q = gauge_transform(P, f)
            F = em_fields(Q)
            for old, new in zip(F0.E + F0.H, F.E + F.H):
                field_change = max(field_change, float(np.max(np.abs(new.values - old.values))))
            action_change = max(action_change, abs(em_lagrangian(Q) - J0) / (1.0 + abs(J0)))
        rows.append(ReportRow(cfg.scenario, n, alphas, "field_change", field_change, "machine-zero"))
        rows.append(ReportRow(cfg.scenario, n, alphas, "relative_action_change", action_change, "machine-zero"))
    return rows


def _em_identity(cfg: ScenarioConfig) -> list[ReportRow]:
    alphas = _em_orders(cfg)
    rows = []
    for n in cfg.sizes():
        grid = cfg.box(n, 4)
        P = random_potential(grid, alphas, cfg.seed)
        exact = interior_norm(em_noether_residual(P).values)
        control = interior_norm(em_noether_residual(P, perturbed_density(alphas)).values)
        # exact at the discrete level: per-axis stencils commute and the density is antisymmetric
        rows.append(ReportRow(cfg.scenario, n, alphas, "em_identity", exact, "machine-zero"))
        rows.append(ReportRow(cfg.scenario, n, alphas, "perturbed_control", control, "bounded-away"))
    return rows


def classical_test_lagrangian() -> Lagrangian1D:
    """Order-one Lagrangian with a coupling term; not invariant, so its residual is generic."""
    return Lagrangian1D(
        2,
        (1.0, 1.0),
        lambda t, x, v: 0.5 * v[0] ** 2 + np.sin(t) * x[0] * x[1] + 0.5 * v[1] ** 2,
        lambda t, x, v: np.stack([np.sin(t) * x[1], np.sin(t) * x[0]]),
        lambda t, x, v: v.copy(),
    )


CLASSICAL_B = [[[1.0, 0.5, 0.2]], [[0.3, lambda t: t]]]


def middle(grid: UniformGrid1D) -> np.ndarray:
    """Mask of nodes in the middle three quarters of the interval."""
    s = _unit(grid)
    return (s >= 0.125 - 1e-12) & (s <= 0.875 + 1e-12)


def _classical(cfg: ScenarioConfig) -> list[ReportRow]:
    rows = []
    ops = {
        "left_caputo": (left_caputo, 1.0),
        "right_caputo": (right_caputo, -1.0),
        "left_rl": (left_rl_derivative, 1.0),
        "right_rl": (right_rl_derivative, -1.0),
    }
    L = classical_test_lagrangian()
    for n in cfg.sizes():
        grid = cfg.grid(n)
        s, w = _unit(grid), np.pi / (grid.b - grid.a)
        f = GridFn1D(grid, np.sin(np.pi * s))
        exact = w * np.cos(np.pi * s)
        for name, (op, sign) in ops.items():
            err = float(np.max(np.abs(op(f, 1.0).values - sign * exact)))
            rows.append(ReportRow(cfg.scenario, n, (1.0,), f"{name}_error", err, "decreasing"))
        x = random_trajectory(grid, 2, cfg.seed)
        classical = classical_identity_residual(L, x, CLASSICAL_B).residuals[0].values
        frac = noether_residual(L, x, Transformation.classical(CLASSICAL_B, grid)).residuals[0].values
        gap = float(np.max(np.abs(classical - frac)[middle(grid)]))
        rows.append(ReportRow(cfg.scenario, n, (1.0,), "identity_gap", gap, "decreasing"))
    return rows


SCENARIOS: dict[str, _Scenario] = {
    "convergence": _Scenario(_convergence, "left Caputo derivative of t^2 against its closed form", 64, 3, (0.5,)),
    "ibp-check": _Scenario(
        _ibp, "fractional integration by parts for integrals and Caputo derivatives", 64, 4, (0.25, 0.5, 0.75)
    ),
    "adjoint-duality": _Scenario(_duality, "duality of kind I-IV operators and their adjoints", 64, 3, (0.3,)),
    "noether-1d": _Scenario(_noether_1d, "second Noether identities, one independent variable", 64, 3, (0.3, 0.5, 0.9)),
    "noether-md": _Scenario(
        _noether_md, "second Noether identities, several independent variables", 16, 2, (0.3, 0.5, 0.9)
    ),
    "em-gauge": _Scenario(_em_gauge, "gauge invariance of the fractional E, H and action", 8, 1, EM_ORDERS),
    "em-identity": _Scenario(
        _em_identity, "Noether identity of the fractional electromagnetic density", 8, 2, EM_ORDERS
    ),
    "classical-limit": _Scenario(
        _classical, "order-one limits of the operators and of the Noether identities", 64, 3, (1.0,)
    ),
}


# ---------------------------------------------------------------------------
# Running and reporting


def run_scenario(config: ScenarioConfig) -> list[ReportRow]:
    cfg = config.resolved()
    return SCENARIOS[cfg.scenario].run(cfg)


def _fmt_orders(orders: Sequence[float]) -> str:
    return ";".join(repr(float(o)) for o in orders)


def format_report(rows: Sequence[ReportRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HEADER)
    for r in rows:
        writer.writerow([r.scenario, r.n, _fmt_orders(r.orders), r.residual, f"{r.value:.17e}", r.tag])
    return buf.getvalue()


def write_report(rows: Sequence[ReportRow], path) -> None:
    """CSV with the fixed header; rows keep their order."""
    Path(path).write_text(format_report(rows), encoding="utf-8")


def verdict(rows: Sequence[ReportRow]) -> Verdict:
    """Apply the per-tag thresholds; ``decreasing`` series are grouped by
    scenario, orders and residual name and ordered by ``n``."""
    failures = []
    series: dict[tuple, list[ReportRow]] = {}
    for r in rows:
        label = f"{r.scenario} n={r.n} orders={_fmt_orders(r.orders)} {r.residual}={r.value:.3e}"
        if not math.isfinite(r.value):
            failures.append(f"{label}: not finite")
        elif r.tag == "machine-zero" and r.value > MACHINE_ZERO:
            failures.append(f"{label}: above {MACHINE_ZERO:g}")
        series.setdefault((r.scenario, r.orders, r.residual, r.tag), []).append(r)
    for (scenario, orders, residual, tag), group in series.items():
        group = sorted(group, key=lambda r: r.n)
        label = f"{scenario} orders={_fmt_orders(orders)} {residual}"
        if tag == "bounded-away" and not group[-1].value >= 10 * MACHINE_ZERO:
            failures.append(f"{label}: finest value {group[-1].value:.3e} below {10 * MACHINE_ZERO:g}")
        elif tag == "decreasing":
            if len(group) < 2:
                failures.append(f"{label}: a decreasing series needs at least 2 levels")
            for coarse, fine in zip(group, group[1:]):
                ratio = coarse.value / fine.value if fine.value > 0 else math.inf
                if not ratio >= MIN_RATIO:
                    failures.append(f"{label}: ratio {ratio:.3f} from n={coarse.n} to n={fine.n}")
    return Verdict(not failures, tuple(failures))


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fracnoether", description=__doc__.split("\n\n")[0])
    p.add_argument("--scenario", help="scenario name (see --list)")
    p.add_argument("--config", help="JSON file with any of: scenario, n, orders, levels, seed, bounds, out")
    p.add_argument("--n", type=int, help="subintervals per axis on the coarsest grid (>= 8)")
    p.add_argument("--alpha", type=float, action="append", help="fractional order; repeat for several")
    p.add_argument("--levels", type=int, help="number of grids, each twice as fine")
    p.add_argument("--seed", type=int, help="seed for trajectories and parameter functions")
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.add_argument("--list", action="store_true", help="print the scenario names and exit")
    return p


def _load_config(path: str) -> dict:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("config must be a JSON object")
    unknown = set(data) - {"scenario", "n", "orders", "levels", "seed", "bounds", "out"}
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    return data


def build_config(args: argparse.Namespace) -> ScenarioConfig:
    data = _load_config(args.config) if args.config else {}
    overrides = {
        "scenario": args.scenario,
        "n": args.n,
        "orders": args.alpha,
        "levels": args.levels,
        "seed": args.seed,
        "out": args.out,
    }
    data.update({k: v for k, v in overrides.items() if v is not None})
    if "scenario" not in data:
        raise UsageError("no scenario given")
    try:
        return ScenarioConfig(
            scenario=str(data["scenario"]),
            n=data.get("n"),
            orders=tuple(data.get("orders", ())),
            levels=data.get("levels"),
            seed=int(data.get("seed", 0)),
            bounds=tuple(tuple(b) for b in data.get("bounds", ((0.0, 1.0),))),
            out=data.get("out"),
        ).resolved()
    except (TypeError, ValueError) as exc:
        if isinstance(exc, UsageError):
            raise
        raise UsageError(str(exc)) from exc


def main(argv: Sequence[str] | None = None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)
    if args.list:
        for name in SCENARIOS:
            print(name)
        return 0
    try:
        cfg = build_config(args)
        rows = run_scenario(cfg)
    except UsageError as exc:
        print(f"fracnoether: error: {exc}", file=sys.stderr)
        return 2
    print(f"# {cfg.scenario}: verifies {SCENARIOS[cfg.scenario].verifies}", file=sys.stderr)
    if cfg.out:
        write_report(rows, cfg.out)
    else:
        sys.stdout.write(format_report(rows))
    result = verdict(rows)
    for line in result.failures:
        print(f"FAIL {line}", file=sys.stderr)
    print("PASS" if result.passed else "FAIL", file=sys.stderr)
    return result.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
