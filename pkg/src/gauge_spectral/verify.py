"""A deterministic battery of invariant checks.

Each check draws from its own seeded stream and reports the worst residual
it saw.  The report holds no timings or addresses, so equal seeds give
byte-identical output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import calculus, cauchy, mapping, regulated, spectral_core, unbounded
from ._domain import Cell
from .gauge import canonical_step_gauge, is_fine
from .rng import (generator, planted_symmetric, random_fine_partition, random_piecewise,
                  random_step, random_symmetric)


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.ok else 'FAIL'} {self.name}: {self.detail}"


def _random_model(rng, n_max: int = 8):
    n = int(rng.integers(1, n_max + 1))
    A = random_symmetric(rng, n)
    E = spectral_core.spectral_measure(A)
    pad = 0.5
    return A, E, (float(E.points[0]) - pad, float(E.points[-1]) + pad)


def check_oracle_equivalence(seed, cases=20):
    rng = generator(seed, "oracle")
    worst = 0.0
    for _ in range(cases):
        _, E, K = _random_model(rng)
        s = random_step(rng, K, 10, complex_values=bool(rng.integers(2)))
        worst = max(worst, calculus.operator_norm(calculus.apply_calculus(s, E)
                                                  - calculus.direct_apply(s, E)))
    return worst <= 1e-9, f"max ||f(A) - sum f(l) P_l|| = {worst:.3e}"


def check_homomorphism(seed, cases=10):
    rng = generator(seed, "homomorphism")
    worst, unit = 0.0, 0.0
    for _ in range(cases):
        _, E, K = _random_model(rng)
        f = random_step(rng, K, 8, complex_values=True)
        g = random_step(rng, K, 8)
        alpha, beta = complex(*rng.uniform(-2, 2, 2)), complex(*rng.uniform(-2, 2, 2))
        rep = calculus.homomorphism_report(E, f, g, alpha, beta)
        worst, unit = max(worst, rep.max()), max(unit, rep.unit)
    return worst <= 1e-9 and unit <= 1e-12, f"max residual = {worst:.3e}, unit = {unit:.3e}"


def check_lipschitz(seed, cases=30):
    rng = generator(seed, "lipschitz")
    slack = math.inf
    for _ in range(cases):
        _, E, K = _random_model(rng)
        lhs, rhs = calculus.lipschitz_gap(random_step(rng, K), random_step(rng, K), E)
        slack = min(slack, rhs + 1e-10 - lhs)
    E = spectral_core.spectral_measure(np.diag([0.25, 0.75]))
    lhs, rhs = calculus.lipschitz_gap(regulated.heaviside(0.5), regulated.constant(0.0), E)
    eq = abs(lhs - 1) <= 1e-12 and abs(rhs - 1) <= 1e-12
    return slack >= 0 and eq, f"min slack = {slack:.3e}, equality case = ({lhs:.12f}, {rhs:.12f})"


def check_partition_independence(seed, functions=3, partitions=5):
    rng = generator(seed, "partitions")
    worst = 0.0
    fine = True
    for _ in range(functions):
        A, E, K = _random_model(rng)
        s = random_step(rng, K, 10, complex_values=True)
        x, y = rng.standard_normal(E.dimension), rng.standard_normal(E.dimension)
        mu = spectral_core.scalar_measure(E, x, y)
        ref = calculus.integrate_step(s, mu, partition=False).value
        gamma = canonical_step_gauge(s)
        for _ in range(partitions):
            P = random_fine_partition(rng, s)
            fine &= is_fine(P, gamma)
            worst = max(worst, abs(calculus.hk_sum(s, mu, P) - ref))
    return fine and worst <= 1e-12, f"max |sum - integral| = {worst:.3e}, all fine = {fine}"


def check_spectral_mapping(seed, cases=5):
    rng = generator(seed, "mapping")
    worst = 0.0
    for _ in range(cases):
        _, E, K = _random_model(rng)
        f = random_step(rng, K, 10, complex_values=bool(rng.integers(2)))
        got = mapping.spectral_map(f, E, "finite")
        ref = np.linalg.eigvals(calculus.direct_apply(f, E))
        worst = max(worst, mapping.hausdorff_distance(got, ref))
    E = spectral_core.grid_model(0.0, 1.0, 64)
    spike = regulated.indicator(Cell.singleton(0.3), (0.0, 1.0))
    sigma = mapping.spectral_map(spike, E, "continuum")
    image = mapping.pointwise_image(spike, E.domain)
    patho = list(sigma.points) == [0] and list(image.points) == [0, 1]
    return worst <= 1e-8 and patho, f"max Hausdorff = {worst:.3e}, indicator of a point ok = {patho}"


def check_kernel_range(seed):
    rng = generator(seed, "kernel")
    ok, worst = True, 0.0
    for mults in ([1, 1, 1], [2, 1], [3, 2, 1], [1, 3]):
        A, values = planted_symmetric(rng, mults)
        E = spectral_core.spectral_measure(A)
        for lam, m in zip(values, mults):
            ran, ker, res = mapping.kernel_range_check(A, float(lam), E)
            ok &= ran == ker == m
            worst = max(worst, res)
    return ok and worst <= 1e-10, f"dimensions agree = {ok}, max residual = {worst:.3e}"


def check_thomae(seed):
    rng = generator(seed, "thomae")
    eig = np.array([1 / 2, 1 / 3, 2 / 5, 3 / 7, 1 / math.sqrt(2), 5 / 8])
    Q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
    A = (Q * eig) @ Q.T
    E = spectral_core.spectral_measure((A + A.T) / 2)
    ops = {n: calculus.apply_calculus(regulated.thomae(n), E) for n in range(1, 9)}
    slack = min(1 / (min(n, m) + 1) - calculus.operator_norm(ops[n] - ops[m])
                for n in ops for m in ops)
    E2 = spectral_core.spectral_measure(np.diag([0.5, 1 / math.sqrt(2)]))
    sig = mapping.spectral_map(regulated.thomae(8), E2, "finite")
    d = mapping.hausdorff_distance(sig, [0.5, 0.0])
    return slack >= 0 and d <= 1e-12, f"min slack = {slack:.3e}, spectrum distance = {d:.3e}"


def _mult_battery():
    return [regulated.heaviside(0.5), regulated.continuous(lambda x: np.sin(7 * x)),
            regulated.identity(), regulated.indicator(Cell(0.2, 0.4, False, True)),
            regulated.continuous(lambda x: np.exp(1j * x) * (1 - x))]


def check_mult_norm(seed):
    E = spectral_core.grid_model(0.0, 1.0, 128)
    worst = 0.0
    for f in _mult_battery():
        op = calculus.operator_norm(calculus.apply_calculus(f, E), E.dx)
        worst = max(worst, abs(op - float(np.max(np.abs(f.evaluate(E.points))))))
    return worst <= 1e-12, f"max | ||M_f|| - max|f(x_j)| | = {worst:.3e}"


def check_total_variation(seed, cases=50):
    rng = generator(seed, "variation")
    slack = math.inf
    for _ in range(cases):
        _, E, _ = _random_model(rng)
        x = rng.standard_normal(E.dimension) + 1j * rng.standard_normal(E.dimension)
        y = rng.standard_normal(E.dimension)
        mu = spectral_core.scalar_measure(E, x, y)
        slack = min(slack, np.linalg.norm(x) * np.linalg.norm(y) + 1e-12 - mu.total_variation)
    return slack >= 0, f"min slack = {slack:.3e}"


def check_unbounded(seed):
    v = unbounded.domain_member(lambda x: x, unbounded.geometric_atoms(0.5))
    atomic = v.member and abs(v.value - 6) <= 1e-9
    psi = unbounded.domain_member(lambda x: x, unbounded.DensityModel(lambda x: (1 + x * x) ** -1.5))
    growth = np.diff(psi.partial_sums)[-10:]
    logish = (not psi.member) and bool(np.all(np.abs(growth - 2 * math.log(2)) < 1e-6))
    return atomic and logish, (f"atomic value = {v.value:.12f}, psi member = {psi.member}, "
                               f"growth per doubling = {float(growth[-1]):.9f}")


def check_cauchy_equilibrium(seed):
    S, d = cauchy.equilibrium_demo()
    worst = {t: abs(float(cauchy.mild_solution(S, d, t, 200)[0]) - 1) for t in (0.1, 1.0, 5.0)}
    # composite Simpson error for int_0^t e^{-u} du is below t h^4 / 180
    ok = all(err <= t * (t / 200) ** 4 / 180 + 1e-15 for t, err in worst.items())
    return ok, ", ".join(f"|u({t:g}) - 1| = {e:.3e}" for t, e in worst.items())


def check_semigroup_laws(seed):
    rng = generator(seed, "semigroup")
    S, _ = cauchy.standard_demo(32)
    Tn = cauchy.step_semigroup(S, 4)
    worst = 0.0
    for _ in range(5):
        t, s = rng.uniform(0, 1, 2)
        psi = rng.standard_normal(S.grid.N)
        for apply in (lambda u, v: cauchy.semigroup_apply(S, u, v), Tn.apply):
            gap = np.linalg.norm(apply(t + s, psi) - apply(t, apply(s, psi)))
            worst = max(worst, gap / np.linalg.norm(psi))
    ident = np.array_equal(Tn.apply(0.0, psi), psi)
    return worst <= 1e-12 and ident, f"max law residual = {worst:.3e}, T_n(0) = I: {ident}"


def check_cauchy_inequality(seed):
    S, d = cauchy.standard_demo(32)
    rep = cauchy.convergence_report(S, d, [2, 4, 8], np.linspace(0, 1, 6))
    measured = [r.measured for r in rep.levels]
    mono = all(b <= a for a, b in zip(measured, measured[1:]))
    return rep.all_ok and mono, "; ".join(f"n={r.level}: {r.measured:.3e} <= {r.bound:.3e}"
                                          for r in rep.levels)


def step_battery(rng) -> list:
    sin = regulated.continuous(lambda x: np.sin(2 * np.pi * x))
    square = regulated.continuous(lambda x: x * x)
    fns = [regulated.heaviside(0.5), sin, square]
    fns += [regulated.thomae(n) for n in range(1, 9)]
    fns += [random_piecewise(rng) for _ in range(3)]
    return fns


def check_step_approximation(seed, eps_list=(0.1, 0.01)):
    rng = generator(seed, "steps")
    worst = 0.0
    for f in step_battery(rng):
        for eps in eps_list:
            s = regulated.approximate_by_steps(f, eps)
            worst = max(worst, regulated.sup_norm_gap(f, s) / eps)
    return worst <= 1.0, f"max gap / eps = {worst:.4f}"


CHECKS: list[tuple[str, Callable]] = [
    ("oracle_equivalence", check_oracle_equivalence),
    ("homomorphism", check_homomorphism),
    ("lipschitz", check_lipschitz),
    ("partition_independence", check_partition_independence),
    ("spectral_mapping", check_spectral_mapping),
    ("kernel_range", check_kernel_range),
    ("thomae", check_thomae),
    ("multiplication_norm", check_mult_norm),
    ("total_variation", check_total_variation),
    ("unbounded_truncation", check_unbounded),
    ("cauchy_equilibrium", check_cauchy_equilibrium),
    ("semigroup_laws", check_semigroup_laws),
    ("cauchy_inequality", check_cauchy_inequality),
    ("step_approximation", check_step_approximation),
]


def run(seed: int) -> list:
    out = []
    for name, fn in CHECKS:
        try:
            ok, detail = fn(seed)
        except Exception as exc:  # a crash is a failed check, not a crashed battery
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(name, bool(ok), detail))
    return out


def report(results: list, seed: int) -> str:
    lines = [f"verify seed={seed}"] + [r.line() for r in results]
    passed = sum(r.ok for r in results)
    lines.append(f"{passed}/{len(results)} checks passed")
    return "\n".join(lines) + "\n"
