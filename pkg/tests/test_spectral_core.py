import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, strategies as st

from gauge_spectral import spectral_core as sc
from gauge_spectral._domain import Cell
from gauge_spectral.errors import ArgumentError
from gauge_spectral.rng import random_symmetric


def test_jacobi_diagonal():
    es = sc.jacobi_eigh(np.diag([3.0, 1.0, 2.0]))
    assert np.array_equal(es.eigenvalues, [1, 2, 3])
    assert np.array_equal(np.abs(es.eigenvectors), np.eye(3)[:, [1, 2, 0]])


def test_jacobi_two_by_two():
    es = sc.jacobi_eigh([[2.0, 1.0], [1.0, 2.0]])
    assert es.eigenvalues == pytest.approx([1, 3])


def test_jacobi_matches_lapack(rng):
    for n in (1, 3, 8, 12):
        A = random_symmetric(rng, n)
        es = sc.jacobi_eigh(A)
        assert np.max(es.residuals(A)) <= 1e-10 * np.linalg.norm(A)
        assert es.eigenvalues == pytest.approx(scipy.linalg.eigvalsh(A), abs=1e-12)
        assert np.allclose(es.eigenvectors.T @ es.eigenvectors, np.eye(n), atol=1e-13)


def test_asymmetric_rejected():
    with pytest.raises(ArgumentError):
        sc.SymOperator([[1.0, 2.0], [2.0 + 1e-15, 1.0]])


def test_multiplicity_grouping():
    E = sc.spectral_measure(np.diag([1.0, 1.0, 2.0]))
    assert E.points.tolist() == [1, 2]
    assert [round(np.trace(P)) for P in E.projections] == [2, 1]


def test_distinct_eigenvalues_resolve_identity(rng):
    E = sc.spectral_measure(random_symmetric(rng, 6))
    assert len(E.points) == 6
    assert np.allclose(E.projections.sum(axis=0), np.eye(6), atol=1e-13)


def test_near_double_eigenvalue_merged(rng):
    Q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    es = sc.EigenSystem(np.array([1.0, 1.0 + 1e-14, 2.0]), Q)
    E = sc.pvm_from_eigensystem(es, cluster_tol=1e-10)
    assert len(E.points) == 2 and round(np.trace(E.projections[0])) == 2


def test_projection_examples():
    E = sc.spectral_measure(np.diag([1.0, 2.0]))
    assert np.array_equal(sc.project(E, E.domain), np.eye(2))
    assert np.array_equal(sc.project(E, []), np.zeros((2, 2)))
    assert np.array_equal(sc.project(E, [1.0]), np.diag([1.0, 0.0]))


def test_scalar_measure_examples():
    E = sc.spectral_measure(np.diag([1.0, 2.0]))
    mu = sc.scalar_measure(E, [1, 0], [1, 0])
    assert mu.atoms == [(1.0, 1.0), (2.0, 0.0)]
    A = np.array([[2.0, 1.0], [1.0, 2.0]])
    E = sc.spectral_measure(A)
    x = np.array([1.0, 1.0])  # eigenvector for 3, orthogonal to the eigenspace of 1
    mu = sc.scalar_measure(E, x, x)
    assert abs(mu.weights[0]) < 1e-15


def test_total_variation_bound(rng):
    for _ in range(100):
        n = int(rng.integers(1, 9))
        E = sc.spectral_measure(random_symmetric(rng, n))
        x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        y = rng.standard_normal(n)
        mu = sc.scalar_measure(E, x, y)
        assert mu.total_variation <= np.linalg.norm(x) * np.linalg.norm(y) + 1e-12


def test_grid_model():
    G = sc.grid_model(0, 1, 4)
    assert G.points.tolist() == [0.125, 0.375, 0.625, 0.875]
    assert np.array_equal(np.diag(sc.project(G, Cell(0, 0.5, True, False))), [1, 1, 0, 0])
    assert np.array_equal(sc.project(G, G.domain), np.eye(4))
    for N in (1, 7, 64):
        psi = np.ones(N)
        assert sc.inner(sc.grid_model(0, 1, N), psi, psi) == pytest.approx(1)


def test_reconstruction(rng):
    for n in range(1, 13):
        A = random_symmetric(rng, n)
        E = sc.spectral_measure(A)
        rebuilt = np.einsum("k,kij->ij", E.points, E.projections)
        assert np.linalg.norm(rebuilt - A) <= 1e-9 * np.linalg.norm(A)


def test_pvm_axioms(rng):
    E = sc.spectral_measure(random_symmetric(rng, 7))
    for i, P in enumerate(E.projections):
        assert np.allclose(P, P.T, atol=1e-14)
        for j, Q in enumerate(E.projections):
            assert np.allclose(P @ Q, P if i == j else 0, atol=1e-13)


def _random_cells(rng, k):
    out = []
    for _ in range(k):
        a, b = np.sort(rng.uniform(-4, 4, 2))
        out.append(Cell(a, b, bool(rng.integers(2)), bool(rng.integers(2))))
    return out


def test_multiplicativity_and_additivity(rng):
    for _ in range(20):
        E = sc.spectral_measure(random_symmetric(rng, 6))
        B1, B2 = _random_cells(rng, 2), _random_cells(rng, 2)
        m1, m2 = sc.membership(E.points, B1), sc.membership(E.points, B2)
        both = E.points[m1 & m2].tolist()
        P12 = sc.project(E, both)
        assert np.allclose(P12, sc.project(E, B1) @ sc.project(E, B2), atol=1e-12)
        only1 = E.points[m1 & ~m2].tolist()
        assert np.allclose(sc.project(E, only1) + P12, sc.project(E, B1), atol=1e-13)


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_sesquilinear_scaling(re, im):
    rng = np.random.default_rng(7)
    E = sc.spectral_measure(random_symmetric(rng, 4))
    x, y = rng.standard_normal(4), rng.standard_normal(4)
    alpha = complex(re, im)
    a = sc.scalar_measure(E, alpha * x, y).weights
    b = sc.scalar_measure(E, x, y).weights
    assert np.allclose(a, alpha * b, atol=1e-12)
    assert np.allclose(sc.scalar_measure(E, y, x).weights, np.conj(b), atol=1e-14)


def test_masses_respect_open_ends():
    mu = sc.ScalarMeasure([0.0, 0.5, 1.0], [1, 2, 4])
    cells = [Cell(0, 0.5, True, False), Cell(0, 0.5, False, True), Cell.singleton(1.0)]
    assert mu.masses(cells).tolist() == [1, 2, 4]


def test_matrix_csv(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("1,2\n2,5\n")
    assert sc.load_matrix_csv(path).entries.tolist() == [[1, 2], [2, 5]]
    path.write_text("1,2\n3,5\n")
    with pytest.raises(ArgumentError):
        sc.load_matrix_csv(path)
