"""Acceptance criteria 1-14 at their stated sizes and tolerances.

Each test is named ``test_criterion_NN_*``; the conftest hook prints one
PASS/FAIL line per criterion at the end of the run.
"""

import math
import subprocess
import sys
import time

import numpy as np
import pytest

from gauge_spectral import calculus as C
from gauge_spectral import cauchy as K
from gauge_spectral import mapping as M
from gauge_spectral import regulated as R
from gauge_spectral import spectral_core as sc
from gauge_spectral import unbounded as U
from gauge_spectral._domain import Cell
from gauge_spectral.gauge import canonical_step_gauge, is_fine
from gauge_spectral.rng import (generator, planted_symmetric, random_fine_partition,
                                random_piecewise, random_step, random_symmetric)
from gauge_spectral.verify import step_battery

SEED = 20241016
EPS = np.finfo(float).eps


def _model(rng):
    n = int(rng.integers(1, 9))
    A = random_symmetric(rng, n)
    E = sc.spectral_measure(A)
    return A, E, (float(E.points[0]) - 0.5, float(E.points[-1]) + 0.5)


def test_criterion_01_oracle_equivalence():
    rng = generator(SEED, "c1")
    start = time.perf_counter()
    worst = 0.0
    for _ in range(50):
        _, E, dom = _model(rng)
        s = random_step(rng, dom, 10, complex_values=bool(rng.integers(2)))
        worst = max(worst, C.operator_norm(C.apply_calculus(s, E) - C.direct_apply(s, E)))
    assert worst <= 1e-9
    assert time.perf_counter() - start < 10


def test_criterion_02_homomorphism():
    rng = generator(SEED, "c2")
    worst, unit = 0.0, 0.0
    for i in range(30):
        _, E, dom = _model(rng)
        f = random_step(rng, dom, 10, complex_values=True)
        g = random_step(rng, dom, 10, complex_values=bool(i % 2))
        alpha, beta = complex(*rng.uniform(-2, 2, 2)), complex(*rng.uniform(-2, 2, 2))
        rep = C.homomorphism_report(E, f, g, alpha, beta)
        worst, unit = max(worst, rep.max()), max(unit, rep.unit)
    assert worst <= 1e-9 and unit <= 1e-12


def test_criterion_03_lipschitz():
    rng = generator(SEED, "c3")
    for _ in range(100):
        _, E, dom = _model(rng)
        f = random_step(rng, dom, complex_values=bool(rng.integers(2)))
        g = random_step(rng, dom)
        lhs, rhs = C.lipschitz_gap(f, g, E)
        assert lhs <= rhs + 1e-10
    E = sc.spectral_measure(np.diag([0.25, 0.75]))
    lhs, rhs = C.lipschitz_gap(R.heaviside(0.5), R.constant(0.0), E)
    assert abs(lhs - 1) <= 1e-12 and abs(rhs - 1) <= 1e-12


def test_criterion_04_partition_independence():
    rng = generator(SEED, "c4")
    for _ in range(10):
        _, E, dom = _model(rng)
        s = random_step(rng, dom, 10, complex_values=True)
        mu = sc.scalar_measure(E, rng.standard_normal(E.dimension), rng.standard_normal(E.dimension))
        ref = C.integrate_step(s, mu).value
        gamma = canonical_step_gauge(s)
        for _ in range(20):
            P = random_fine_partition(rng, s)
            assert is_fine(P, gamma)
            assert abs(C.hk_sum(s, mu, P) - ref) <= 1e-12


def test_criterion_05_spectral_mapping():
    rng = generator(SEED, "c5")
    for _ in range(50):
        _, E, dom = _model(rng)
        f = random_step(rng, dom, 10, complex_values=bool(rng.integers(2)))
        got = M.spectral_map(f, E, "finite")
        assert M.hausdorff_distance(got, np.linalg.eigvals(C.direct_apply(f, E))) <= 1e-8
    spike = R.indicator(Cell.singleton(0.3), (0.0, 1.0))
    E = sc.grid_model(0.0, 1.0, 64)
    assert M.spectral_map(spike, E, "continuum").points.tolist() == [0]
    assert M.pointwise_image(spike, E.domain).points.tolist() == [0, 1]


def test_criterion_06_kernel_range():
    rng = generator(SEED, "c6")
    for _ in range(20):
        mults = rng.integers(1, 4, int(rng.integers(1, 4))).tolist()
        A, values = planted_symmetric(rng, mults)
        E = sc.spectral_measure(A)
        for lam, m in zip(values, mults):
            ran, ker, res = M.kernel_range_check(A, float(lam), E)
            assert ran == ker == m and res <= 1e-10


def test_criterion_07_thomae():
    rng = generator(SEED, "c7")
    eig = np.array([1 / 2, 1 / 3, 2 / 5, 3 / 7, 1 / math.sqrt(2), 5 / 8, 4 / 9, 1 / math.pi])
    Q, _ = np.linalg.qr(rng.standard_normal((8, 8)))
    A = (Q * eig) @ Q.T
    E = sc.spectral_measure((A + A.T) / 2)
    ops = {n: C.apply_calculus(R.thomae(n), E) for n in range(1, 9)}
    # 5/8 attains the bound for n = 7, so allow a few ulps of roundoff
    for n in ops:
        for m in ops:
            assert C.operator_norm(ops[n] - ops[m]) <= (1 / (min(n, m) + 1)) * (1 + 8 * EPS)
    E2 = sc.spectral_measure(np.diag([0.5, 1 / math.sqrt(2)]))
    sigma = M.spectral_map(R.thomae(8), E2, "finite")
    assert M.hausdorff_distance(sigma, [0.5, 0.0]) <= 1e-12


def test_criterion_08_multiplication_norm():
    rng = generator(SEED, "c8")
    fns = [R.heaviside(0.5), R.identity(), R.continuous(lambda x: np.sin(7 * x)),
           R.continuous(lambda x: np.exp(1j * x) * (1 - x)), R.indicator(Cell(0.2, 0.4, False, True)),
           R.indicator(Cell.singleton(0.3)), R.thomae(6, (0.001, 0.999)),
           random_step(rng, (0.0, 1.0), complex_values=True), random_piecewise(rng),
           random_piecewise(rng)]
    E = sc.grid_model(0.0, 1.0, 128)
    for f in fns:
        op = C.operator_norm(C.apply_calculus(f, E), E.dx)
        assert abs(op - float(np.max(np.abs(f.evaluate(E.points))))) <= 1e-12


def test_criterion_09_total_variation():
    rng = generator(SEED, "c9")
    for _ in range(100):
        _, E, _ = _model(rng)
        x = rng.standard_normal(E.dimension) + 1j * rng.standard_normal(E.dimension)
        y = rng.standard_normal(E.dimension) - 0.5j * rng.standard_normal(E.dimension)
        mu = sc.scalar_measure(E, x, y)
        assert mu.total_variation <= np.linalg.norm(x) * np.linalg.norm(y) + 1e-12


def test_criterion_10_unbounded_truncation():
    mu = U.geometric_atoms(0.5)
    assert abs(U.truncated_integral(lambda x: x * x, mu, 60) - 6) <= 1e-9
    v = U.domain_member(lambda x: x, mu, 1e-9)
    assert v.member and abs(v.value - 6) <= 1e-9 and v.bound_used < 1e-9
    psi = U.domain_member(lambda x: x, U.DensityModel(lambda x: (1 + x * x) ** -1.5))
    assert not psi.member
    radii, sums = np.array(psi.radii), np.array(psi.partial_sums)
    sel = (radii >= 2.0**9) & (radii <= 2.0**20)  # 512 .. 1.05e6
    assert np.log10(radii[sel].max() / radii[sel].min()) >= 3
    slope = np.polyfit(np.log(radii[sel]), sums[sel], 1)[0]
    assert slope == pytest.approx(2, abs=1e-6)  # sum ~ 2 log L, unbounded
    assert sums[radii >= 1e6][0] > sums[radii >= 1e3][0] + 13  # 2 ln(1000) ~ 13.8


def test_criterion_11_cauchy_equilibrium():
    S, d = K.equilibrium_demo()
    errors = {t: abs(float(K.mild_solution(S, d, t, 200)[0]) - 1) for t in (0.1, 1.0, 5.0)}
    lam, u0 = -0.7, 0.4
    Sp = K.SemigroupModel(R.Piecewise((0, 1), [lambda x: lam + 0 * x]), sc.grid_model(0, 1, 1))
    dp = K.Datum(np.array([u0]), lambda s: np.array([s]), 5.0)
    for t in (0.1, 1.0, 5.0):
        exact = math.exp(t * lam) * u0 + (math.exp(t * lam) - 1 - t * lam) / lam**2
        assert abs(K.mild_solution(Sp, dp, t, 200)[0] - exact) <= 1e-8
    assert all(e <= 1e-10 for e in errors.values()), f"equilibrium errors {errors}"


@pytest.fixture(scope="module")
def standard_report():
    S, d = K.standard_demo()
    return K.convergence_report(S, d, [2, 4, 8, 16], np.linspace(0.0, d.horizon, 11))


def test_criterion_12_cauchy_inequality(standard_report):
    rep = standard_report
    for r in rep.levels:
        assert r.measured <= r.bound + 1e-8
    measured = [r.measured for r in rep.levels]
    assert all(b <= a for a, b in zip(measured, measured[1:]))


def test_criterion_13_step_approximation():
    rng = generator(SEED, "c13")
    for f in step_battery(rng):
        for eps in (0.1, 0.01, 0.001):
            s = R.approximate_by_steps(f, eps)
            assert R.sup_norm_gap(f, s) <= eps


def test_criterion_14_determinism():
    cmd = [sys.executable, "-m", "gauge_spectral.cli", "verify", "--seed", "42"]
    a = subprocess.run(cmd, capture_output=True, check=False)
    b = subprocess.run(cmd, capture_output=True, check=False)
    assert a.stdout and a.stdout == b.stdout


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
