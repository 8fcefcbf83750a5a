import math

import numpy as np
import pytest

from gauge_spectral import calculus as C
from gauge_spectral import cauchy as K
from gauge_spectral import regulated as R
from gauge_spectral.errors import ArgumentError
from gauge_spectral.spectral_core import grid_model


def _scalar(lam, x0, forcing, T=10.0):
    S = K.SemigroupModel(R.Piecewise((0, 1), [lambda x: lam + 0 * x]), grid_model(0, 1, 1))
    return S, K.Datum(np.array([x0]), lambda s: np.array([forcing(s)]), T)


@pytest.fixture(scope="module")
def demo():
    return K.standard_demo(32)


def test_semigroup_apply_examples(rng, demo):
    S, _ = demo
    psi = rng.standard_normal(S.grid.N)
    assert np.array_equal(K.semigroup_apply(S, 0.0, psi), psi)
    S1, _ = _scalar(-1.0, 1.0, lambda s: 0.0)
    assert K.semigroup_apply(S1, math.log(2), np.array([3.0]))[0] == pytest.approx(1.5, abs=1e-15)
    with pytest.raises(ArgumentError):
        K.semigroup_apply(S, -1.0, psi)


def test_semigroup_matches_direct_apply(demo):
    S, _ = demo
    t = 0.7
    f = R.combine("mul", S.g, R.constant(1.0))
    op = C.direct_apply(R.Piecewise((0, 1), [lambda x: np.exp(t * S.g.evaluate(x))]), S.grid)
    psi = np.linspace(-1, 1, S.grid.N)
    assert np.allclose(op @ psi, K.semigroup_apply(S, t, psi), atol=1e-14)
    assert f.domain == S.g.domain


def test_semigroup_law(rng, demo):
    S, _ = demo
    for _ in range(20):
        t, s = rng.uniform(0, 2, 2)
        psi = rng.standard_normal(S.grid.N)
        gap = np.linalg.norm(K.semigroup_apply(S, t + s, psi)
                             - K.semigroup_apply(S, t, K.semigroup_apply(S, s, psi)))
        assert gap <= 1e-12 * np.linalg.norm(psi)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
def test_step_semigroup_laws(n, rng, demo):
    S, _ = demo
    Tn = K.step_semigroup(S, n)
    psi = rng.standard_normal(S.grid.N)
    assert np.array_equal(Tn.apply(0.0, psi), psi)
    for t, s in rng.uniform(0, 1, (5, 2)):
        gap = np.linalg.norm(Tn.apply(t + s, psi) - Tn.apply(t, Tn.apply(s, psi)))
        assert gap <= 1e-12 * np.linalg.norm(psi)
    sf = Tn.step_function(0.5)
    assert isinstance(sf, R.StepFn) and sf.cells == tuple(Tn.cells)


def test_step_semigroup_error_bound(demo):
    S, _ = demo
    t = 0.8
    errors = []
    for n in range(1, 8):
        Tn = K.step_semigroup(S, n)
        err = float(np.max(np.abs(np.exp(t * Tn.node_exponents()) - np.exp(t * S.node_values))))
        steps = R.StepFn(Tn.cells, Tn.tag_values, S.g.domain)
        gap = R.sup_norm_gap(S.g, steps)
        assert err <= math.exp(t * S.sup_abs) * t * gap * math.e
        errors.append(err)
    assert errors[-1] < errors[0]


def test_level_must_be_positive(demo):
    with pytest.raises(ArgumentError):
        K.step_semigroup(demo[0], 0)


def test_equilibrium():
    S, d = K.equilibrium_demo()
    for t in (0.1, 1.0):
        assert abs(K.mild_solution(S, d, t, 200)[0] - 1) <= 1e-10


def test_zero_forcing():
    S, d = K.standard_demo(16)
    d0 = K.Datum(d.x0, lambda s: np.zeros(16), 1.0)
    assert np.allclose(K.mild_solution(S, d0, 0.6), K.semigroup_apply(S, 0.6, d.x0), atol=1e-15)


def _poly_oracle(lam, u0, t):
    return math.exp(t * lam) * u0 + (math.exp(t * lam) - 1 - t * lam) / lam**2


@pytest.mark.parametrize("lam", [-1.3, -0.2, 0.5])
def test_polynomial_forcing(lam):
    S, d = _scalar(lam, 0.7, lambda s: s)
    for t in (0.3, 1.0, 2.5):
        assert abs(K.mild_solution(S, d, t, 200)[0] - _poly_oracle(lam, 0.7, t)) <= 1e-8


def test_simpson_fourth_order():
    lam, t = -1.0, 3.0
    S, d = _scalar(lam, 0.0, lambda s: s)
    errs = [abs(K.mild_solution(S, d, t, m)[0] - _poly_oracle(lam, 0.0, t)) for m in (8, 16, 32, 64)]
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    assert all(14 < r < 18 for r in ratios)


def test_quadrature_arguments():
    S, d = K.equilibrium_demo()
    with pytest.raises(ArgumentError):
        K.mild_solution(S, d, 1.0, 7)
    with pytest.raises(ArgumentError):
        K.mild_solution(S, d, 11.0)


def test_contraction_and_growth_bound(rng):
    grid = grid_model(0, 1, 32)
    neg = K.SemigroupModel(R.Piecewise((0, 1), [lambda x: -x * x]), grid)
    S, _ = K.standard_demo(32)
    for t in rng.uniform(0, 1, 5):
        Tneg = np.diag(np.exp(t * neg.node_values))
        assert C.operator_norm(Tneg, grid.dx) <= 1 + 1e-12
        T = np.diag(np.exp(t * S.node_values))
        assert C.operator_norm(T, grid.dx) <= math.exp(t * S.growth_bound) + 1e-10
    assert np.all(S.growth_bound >= S.node_values)


def test_perturbation_is_invisible():
    S, d = K.standard_demo(64)
    plain = K.SemigroupModel(S.base, S.grid)
    for t in (0.2, 0.9):
        assert np.array_equal(K.mild_solution(S, d, t), K.mild_solution(plain, d, t))
    assert S.g(S.perturbation[0]) == pytest.approx(S.perturbation[0])


def test_perturbation_on_node_rejected():
    grid = grid_model(0, 1, 4)
    g = K.perturbed(np.sin, (0, 1), [0.125])
    with pytest.raises(ArgumentError):
        K.SemigroupModel(g, grid, [0.125])


def test_complex_generator_rejected():
    with pytest.raises(ArgumentError):
        K.SemigroupModel(R.Piecewise((0, 1), [lambda x: 1j * x]), grid_model(0, 1, 4))


def test_zero_datum_report(demo):
    S, _ = demo
    d = K.Datum(np.zeros(S.grid.N), lambda s: np.zeros(S.grid.N), 1.0)
    rep = K.convergence_report(S, d, [1, 3], [0.0, 0.5, 1.0])
    assert all(r.measured == 0 and r.bound == 0 and r.ok for r in rep.levels)


def test_heaviside_demo_monotone():
    S, d = K.heaviside_demo(32)
    rep = K.convergence_report(S, d, [2, 4, 8, 16], np.linspace(0, 1, 6))
    measured = [r.measured for r in rep.levels]
    assert rep.all_ok and all(b <= a for a, b in zip(measured, measured[1:]))
    assert rep.to_csv().splitlines()[0] == "level,measured,bound,ok"


def test_sup_exp_gap_is_exact():
    a, b = np.array([-2.0, 1.0, 0.5]), np.array([-0.5, 1.2, -0.3])
    tau = np.linspace(0, 2, 200_001)
    brute = np.max(np.abs(np.exp(np.outer(tau, a)) - np.exp(np.outer(tau, b))), axis=0)
    assert np.allclose(K.sup_exp_gap(a, b, 2.0), brute, atol=1e-9)


def test_config_loader():
    cfg = {"interval": [0, 1], "grid": 16, "g": "sin(2*pi*x)", "perturbation": [0.7071],
           "datum": {"x0": "exp(-x)", "forcing": "exp(-s)*x", "horizon": 1.0}, "levels": [2, 4]}
    S, d, levels = K.load_demo_config(cfg)
    assert levels == [2, 4] and S.grid.N == 16
    assert np.allclose(d.forcing(0.0), S.grid.points)
    assert S.g(0.7071) == pytest.approx(0.7071)
    rep = K.convergence_report(S, d, levels, [0.0, 1.0])
    assert rep.all_ok
