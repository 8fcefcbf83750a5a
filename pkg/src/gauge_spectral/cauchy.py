"""Multiplication semigroups and mild solutions of ``u' = g u + F(t)``.

On the grid model, ``T(t)`` multiplies node j by ``exp(t g(x_j))``.  The
step approximants ``T_n(t) = sum_k exp(t g(eta_k)) E(I_k)`` come from a
uniform step approximation of g whose tolerance halves with n.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ArgumentError
from .gauge import TaggedPartition
from .regulated import (Break, Piecewise, RegulatedFn, StepFn, approximate_by_steps,
                        compile_expr, piecewise)
from .spectral_core import GridPVM, grid_model


def grid_norm(S_or_grid, psi) -> float:
    """``L^2`` norm on the grid: ``sqrt(sum |psi_j|^2 dx)``."""
    grid = S_or_grid.grid if isinstance(S_or_grid, SemigroupModel) else S_or_grid
    return float(np.sqrt(np.sum(np.abs(psi) ** 2) * grid.dx))


class SemigroupModel:
    """``T(t) = exp(t g)`` acting on a grid of ``[a, b]``.

    ``perturbation`` lists the points where g departs from its continuous
    base; they must avoid the grid nodes, which carry all the mass of the
    discrete spectral measure.
    """

    def __init__(self, g: RegulatedFn, grid: GridPVM, perturbation: Sequence[float] = (),
                 base: RegulatedFn | None = None, samples: int = 10_000):
        if g.domain != grid.domain:
            raise ArgumentError(f"g lives on {g.domain!r} but the grid covers {grid.domain!r}")
        probe = np.unique(np.concatenate([grid.points, g.domain.sample(samples),
                                          [br.x for br in g.breakpoints()]]))
        vals = g.evaluate(probe)
        if np.any(np.abs(vals.imag) > 0):
            raise ArgumentError("the generator symbol g must be real-valued")
        D = np.asarray(sorted(float(p) for p in perturbation))
        if np.any(np.isin(D, grid.points)):
            raise ArgumentError("perturbation points must avoid the grid nodes")
        self.g, self.grid, self.base = g, grid, base
        self.perturbation = D
        limits = [v for br in g.breakpoints() for v in (br.left.real, br.right.real)]
        self.growth_bound = float(max(np.max(vals.real), *limits) if limits else np.max(vals.real))
        self.sup_abs = float(max(np.max(np.abs(vals)), *(abs(v) for v in limits))
                             if limits else np.max(np.abs(vals)))
        self.node_values = g.evaluate(grid.points).real

    def __repr__(self):
        return f"SemigroupModel({self.grid!r}, omega={self.growth_bound:.6g})"


def semigroup_apply(S: SemigroupModel, t: float, psi) -> np.ndarray:
    """``T(t) psi``: node j scaled by ``exp(t g(x_j))``."""
    if t < 0:
        raise ArgumentError("t must be nonnegative")
    return np.exp(t * S.node_values) * np.asarray(psi)


@dataclass(frozen=True)
class StepSemigroup:
    """``T_n(t) = sum_k exp(t g(eta_k)) E(I_k)`` on a shared tagged partition."""
    level: int
    eps: float
    partition: TaggedPartition
    tag_values: np.ndarray     # g(eta_k)
    node_cell: np.ndarray      # index k of the cell holding each grid node

    @property
    def tags(self) -> np.ndarray:
        return self.partition.tags

    @property
    def cells(self) -> list:
        return self.partition.cells

    def node_exponents(self) -> np.ndarray:
        return self.tag_values[self.node_cell]

    def apply(self, t: float, psi) -> np.ndarray:
        if t < 0:
            raise ArgumentError("t must be nonnegative")
        return np.exp(t * self.node_exponents()) * np.asarray(psi)

    def step_function(self, t: float) -> StepFn:
        """``s_{t,n} = sum_k exp(t g(eta_k)) 1_{I_k}``."""
        return StepFn(self.cells, np.exp(t * self.tag_values), self.partition.domain)


def level_tolerance(S: SemigroupModel, n: int) -> float:
    return 2.0 ** -n * max(S.sup_abs, 1.0)


def step_semigroup(S: SemigroupModel, n: int) -> StepSemigroup:
    if n < 1:
        raise ArgumentError("level must be at least 1")
    eps = level_tolerance(S, n)
    s = approximate_by_steps(S.g, eps)
    if s.tags is not None:
        tags = s.tags
    else:
        tags = np.array([c.lo if c.is_singleton or c.lo_closed else (c.lo + c.hi) / 2
                         for c in s.cells])
    items = tuple(zip(tags.tolist(), s.cells))
    part = TaggedPartition(items, s.domain)
    tag_values = S.g.evaluate(tags).real
    node_cell = s.cell_index(S.grid.points)
    return StepSemigroup(n, eps, part, tag_values, node_cell)


# ---------------------------------------------------------------------------
# mild solutions


@dataclass(frozen=True)
class Datum:
    x0: np.ndarray
    forcing: Callable[[float], np.ndarray]
    horizon: float


def _simpson_weights(panels: int) -> np.ndarray:
    w = np.ones(panels + 1)
    w[1:-1:2], w[2:-1:2] = 4.0, 2.0
    return w


def mild_solution(S: SemigroupModel, d: Datum, t: float, quad_steps: int = 200,
                  propagator: Callable | None = None) -> np.ndarray:
    """``T(t) x0 + int_0^t T(t - s) F(s) ds`` by composite Simpson.

    ``propagator(tau, psi)`` replaces ``T``; pass ``StepSemigroup.apply`` to
    get the approximant ``w_n``.
    """
    if not 0 <= t <= d.horizon:
        raise ArgumentError(f"t={t} outside [0, {d.horizon}]")
    if quad_steps < 2 or quad_steps % 2:
        raise ArgumentError("quad_steps must be even and at least 2")
    P = propagator if propagator is not None else (lambda tau, psi: semigroup_apply(S, tau, psi))
    u = P(t, np.asarray(d.x0, dtype=float))
    if t == 0:
        return u
    s = np.linspace(0.0, t, quad_steps + 1)
    w = _simpson_weights(quad_steps) * (t / quad_steps) / 3
    acc = np.zeros_like(u, dtype=float)
    for si, wi in zip(s, w):
        acc = acc + wi * P(t - si, np.asarray(d.forcing(si), dtype=float))
    return u + acc


def forcing_l1(S: SemigroupModel, d: Datum, quad_steps: int = 200) -> float:
    """``int_0^T ||F(s)|| ds`` with the same Simpson rule as the solution."""
    s = np.linspace(0.0, d.horizon, quad_steps + 1)
    w = _simpson_weights(quad_steps) * (d.horizon / quad_steps) / 3
    return float(sum(wi * grid_norm(S, d.forcing(si)) for si, wi in zip(s, w)))


def sup_exp_gap(a: np.ndarray, b: np.ndarray, T: float) -> np.ndarray:
    """``max_{0 <= tau <= T} |exp(tau a) - exp(tau b)|`` elementwise, exactly.

    The difference vanishes at 0 and has at most one interior critical point
    ``tau* = log(b / a) / (a - b)`` (when a, b share a sign).
    """
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    best = np.abs(np.exp(T * a) - np.exp(T * b))
    with np.errstate(divide="ignore", invalid="ignore"):
        crit = np.log(b / a) / (a - b)
    ok = np.isfinite(crit) & (crit > 0) & (crit < T) & (a != b)
    c = np.where(ok, crit, 0.0)
    inner = np.abs(np.exp(c * a) - np.exp(c * b))
    return np.where(ok, np.maximum(best, inner), best)


@dataclass(frozen=True)
class LevelReport:
    level: int
    measured: float
    bound: float
    ok: bool


@dataclass(frozen=True)
class ConvergenceReport:
    levels: tuple
    sample_times: tuple
    x0_norm: float
    forcing_l1: float

    def as_dict(self) -> dict:
        return {"levels": [asdict(r) for r in self.levels],
                "sample_times": list(self.sample_times),
                "x0_norm": self.x0_norm, "forcing_l1": self.forcing_l1, "all_ok": self.all_ok}

    def to_csv(self) -> str:
        lines = ["level,measured,bound,ok"]
        for r in self.levels:
            lines.append(f"{r.level},{r.measured!r},{r.bound!r},{str(r.ok).lower()}")
        return "\n".join(lines) + "\n"

    @property
    def all_ok(self) -> bool:
        return all(r.ok for r in self.levels)


def convergence_report(S: SemigroupModel, d: Datum, levels: Sequence[int],
                       sample_times: Sequence[float], quad_steps: int = 200,
                       slack: float = 1e-8) -> ConvergenceReport:
    """Compare ``sup_t ||w_n(t) - u(t)||`` with
    ``sup_t ||T_n(t) - T(t)||_op (||x0|| + ||F||_{L^1})`` for each level."""
    if not levels:
        raise ArgumentError("need at least one level")
    times = [float(t) for t in sample_times]
    exact = [mild_solution(S, d, t, quad_steps) for t in times]
    x0_norm = grid_norm(S, d.x0)
    l1 = forcing_l1(S, d, quad_steps)
    rows = []
    for n in levels:
        Tn = step_semigroup(S, n)
        measured = max(grid_norm(S, mild_solution(S, d, t, quad_steps, Tn.apply) - u)
                       for t, u in zip(times, exact))
        op_gap = float(np.max(sup_exp_gap(Tn.node_exponents(), S.node_values, d.horizon)))
        bound = op_gap * (x0_norm + l1)
        rows.append(LevelReport(int(n), float(measured), float(bound), bool(measured <= bound + slack)))
    return ConvergenceReport(tuple(rows), tuple(times), x0_norm, l1)


# ---------------------------------------------------------------------------
# demo configurations


def perturbed(base: Callable, interval, points: Sequence[float], values=None) -> Piecewise:
    """``base`` changed at ``points`` (to the point itself unless ``values`` given)."""
    points = sorted(float(p) for p in points)
    values = points if values is None else list(values)
    breaks = []
    for p, v in zip(points, values):
        lim = complex(np.asarray(base(np.array([p])), dtype=complex)[0])
        breaks.append(Break(p, lim, lim, complex(v)))
    return Piecewise(interval, [base] * (len(points) + 1), breaks)


def standard_demo(N: int = 64):
    """``g = sin(2 pi x)`` on [0, 1] perturbed at ``1/sqrt 2`` (value ``1/sqrt 2``),
    smooth initial state and decaying forcing, horizon 1."""
    grid = grid_model(0.0, 1.0, N)
    base = lambda x: np.sin(2 * np.pi * np.asarray(x, dtype=float))
    D = [1 / math.sqrt(2)]
    g = perturbed(base, (0.0, 1.0), D)
    S = SemigroupModel(g, grid, D, base=Piecewise((0.0, 1.0), [base]))
    x = grid.points
    datum = Datum(np.exp(-((x - 0.5) ** 2) / 0.05), lambda s: math.exp(-s) * x, 1.0)
    return S, datum


def heaviside_demo(N: int = 64, c: float = 0.3):
    """``g = sin(2 pi x) + H_c``; the jump gives a second, step-like test case."""
    grid = grid_model(0.0, 1.0, N)
    base = lambda x: np.sin(2 * np.pi * np.asarray(x, dtype=float))
    g = Piecewise((0.0, 1.0), [base, lambda x: base(x) + 1.0], [Break(c, None, None, base(np.array([c]))[0] + 1.0)])
    S = SemigroupModel(g, grid)
    x = grid.points
    datum = Datum(np.cos(np.pi * x), lambda s: math.exp(-s) * x, 1.0)
    return S, datum


def equilibrium_demo():
    """One node, ``g = -1``, ``x0 = 1``, ``F = 1``: the solution stays at 1."""
    grid = grid_model(0.0, 1.0, 1)
    g = Piecewise((0.0, 1.0), [lambda x: -np.ones_like(x)])
    S = SemigroupModel(g, grid)
    return S, Datum(np.array([1.0]), lambda s: np.array([1.0]), 10.0)


def load_demo_config(spec: dict):
    """Build ``(S, datum, levels)`` from a config mapping (see README)."""
    a, b = (float(v) for v in spec.get("interval", (0.0, 1.0)))
    grid = grid_model(a, b, int(spec.get("grid", 64)))
    g_spec = spec.get("g", "sin(2*pi*x)")
    D = [float(p) for p in spec.get("perturbation", ())]
    if isinstance(g_spec, dict):
        g = piecewise(g_spec)
        base = None
    else:
        base_fn = compile_expr(str(g_spec))
        base = Piecewise((a, b), [base_fn])
        g = perturbed(base_fn, (a, b), D) if D else base
    S = SemigroupModel(g, grid, D, base=base)
    d = spec.get("datum", {})
    x = grid.points
    x0 = compile_expr(str(d.get("x0", "1")))(x).real.copy()
    F = compile_expr(str(d.get("forcing", "0")), extra=("s",))
    datum = Datum(x0, lambda s: F(x, s=s).real.copy(), float(d.get("horizon", 1.0)))
    levels = [int(n) for n in spec.get("levels", (2, 4, 8, 16))]
    return S, datum, levels
