"""Finite self-adjoint models and their projection-valued measures.

Two models are supported: dense real symmetric matrices, diagonalized by a
cyclic Jacobi method, and midpoint grids standing in for multiplication by
``x`` on ``L^2(a, b)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from ._domain import Cell, Domain
from .errors import ArgumentError, NumericalError

MAX_SWEEPS = 100


class SymOperator:
    """A real symmetric matrix; symmetry is checked exactly."""

    def __init__(self, entries):
        a = np.array(entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ArgumentError(f"expected a nonempty square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ArgumentError("matrix entries must be finite")
        if not np.array_equal(a, a.T):
            raise ArgumentError("matrix is not exactly symmetric")
        a.flags.writeable = False
        self.entries = a

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def __repr__(self):
        return f"SymOperator(n={self.n})"


def load_matrix_csv(path) -> SymOperator:
    """Read a row-major CSV matrix; exact symmetry is required."""
    try:
        a = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise ArgumentError(f"could not parse matrix CSV {path}: {exc}") from exc
    return SymOperator(a)


@dataclass(frozen=True)
class EigenSystem:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns

    def residuals(self, A) -> np.ndarray:
        a = A.entries if isinstance(A, SymOperator) else np.asarray(A)
        V = self.eigenvectors
        return np.linalg.norm(a @ V - V * self.eigenvalues, axis=0)


def jacobi_eigh(A, tol: float = 1e-14) -> EigenSystem:
    """Eigenpairs of a real symmetric matrix by cyclic Jacobi rotations.

    Sweeps over all (p, q) pairs until the off-diagonal Frobenius norm drops
    below ``tol * ||A||_F``.
    """
    if not tol > 0:
        raise ArgumentError("tol must be positive")
    if not isinstance(A, SymOperator):
        A = SymOperator(A)
    a = A.entries.copy()
    n = a.shape[0]
    v = np.eye(n)
    target = tol * np.linalg.norm(a)
    for _ in range(MAX_SWEEPS + 1):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                ap, aq = a[:, p].copy(), a[:, q].copy()
                a[:, p], a[:, q] = c * ap - s * aq, s * ap + c * aq
                ap, aq = a[p, :].copy(), a[q, :].copy()
                a[p, :], a[q, :] = c * ap - s * aq, s * ap + c * aq
                a[p, q] = a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p], v[:, q] = c * vp - s * vq, s * vp + c * vq
    else:
        raise NumericalError(f"Jacobi did not converge in {MAX_SWEEPS} sweeps")
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return EigenSystem(w[order], v[:, order])


class SpectralMeasure:
    """Common interface of the finite projection-valued measures."""

    dimension: int
    points: np.ndarray  # support of E, ascending

    @property
    def support(self) -> Domain:
        return Domain.points(self.points)


class DiscretePVM(SpectralMeasure):
    """``E = sum_k P_k delta_{lambda_k}`` with orthogonal projections P_k."""

    def __init__(self, atoms, dimension: int | None = None):
        atoms = sorted(((float(lam), np.asarray(P, dtype=float)) for lam, P in atoms),
                       key=lambda a: a[0])
        if not atoms and dimension is None:
            raise ArgumentError("an empty measure needs an explicit dimension")
        self.points = np.array([lam for lam, _ in atoms], dtype=float)
        if len(np.unique(self.points)) != len(self.points):
            raise ArgumentError("atoms must be at distinct points")
        n = atoms[0][1].shape[0] if atoms else int(dimension)
        self.projections = (np.stack([P for _, P in atoms]) if atoms
                            else np.zeros((0, n, n)))
        self.projections.flags.writeable = False
        self.dimension = n

    @property
    def atoms(self):
        return list(zip(self.points.tolist(), self.projections))

    @property
    def domain(self) -> Domain:
        return self.support

    def __repr__(self):
        ranks = [int(round(np.trace(P))) for P in self.projections]
        return f"DiscretePVM(points={self.points.tolist()}, ranks={ranks})"


class GridPVM(SpectralMeasure):
    """Multiplication by x on a midpoint grid of ``[a, b]`` with N nodes."""

    def __init__(self, a: float, b: float, N: int):
        if not a < b:
            raise ArgumentError("grid needs a < b")
        if N < 1:
            raise ArgumentError("grid needs N >= 1")
        self.a, self.b, self.N = float(a), float(b), int(N)
        self.dx = (self.b - self.a) / self.N
        self.points = self.a + (np.arange(self.N) + 0.5) * self.dx
        self.points.flags.writeable = False
        self.dimension = self.N

    @property
    def nodes(self) -> np.ndarray:
        return self.points

    @property
    def domain(self) -> Domain:
        return Domain.interval(self.a, self.b)

    def __repr__(self):
        return f"GridPVM({self.a}, {self.b}, N={self.N})"


def grid_model(a: float, b: float, N: int) -> GridPVM:
    return GridPVM(a, b, N)


def default_cluster_tol(n: int) -> float:
    return n * np.finfo(float).eps * 64


def pvm_from_eigensystem(es: EigenSystem, cluster_tol: float | None = None) -> DiscretePVM:
    """Merge eigenvalues closer than ``cluster_tol * max|λ|`` into one atom."""
    lam = es.eigenvalues
    V = es.eigenvectors
    n = len(lam)
    if cluster_tol is None:
        cluster_tol = default_cluster_tol(n)
    scale = max(float(np.max(np.abs(lam))), np.finfo(float).tiny)
    groups = [[0]]
    for i in range(1, n):
        if lam[i] - lam[groups[-1][-1]] <= cluster_tol * scale:
            groups[-1].append(i)
        else:
            groups.append([i])
    atoms = []
    for g in groups:
        vs = V[:, g]
        atoms.append((float(np.mean(lam[g])), vs @ vs.T))
    return DiscretePVM(atoms)


def spectral_measure(A, tol: float = 1e-14, cluster_tol: float | None = None) -> DiscretePVM:
    """Eigendecompose ``A`` and group its spectrum into a projection-valued measure."""
    return pvm_from_eigensystem(jacobi_eigh(A, tol), cluster_tol)


def _as_cells(B) -> list:
    if B is None:
        return []
    if isinstance(B, Cell):
        return [B]
    if isinstance(B, Domain):
        return [Cell.closed(a, b) for a, b in B.components]
    out = []
    for item in B:
        if isinstance(item, Cell):
            out.append(item)
        elif isinstance(item, (tuple, list)) and len(item) == 2:
            out.append(Cell.closed(*item))
        else:
            out.append(Cell.singleton(float(item)))
    return out


def membership(points: np.ndarray, B) -> np.ndarray:
    """Boolean mask of ``points`` lying in the union of cells/points ``B``."""
    mask = np.zeros(len(points), dtype=bool)
    for c in _as_cells(B):
        mask |= np.atleast_1d(c.contains(points))
    return mask


def project(E: SpectralMeasure, B) -> np.ndarray:
    """``E(B)`` for B a Cell, a Domain, or an iterable of cells and points."""
    mask = membership(E.points, B)
    if isinstance(E, GridPVM):
        return np.diag(mask.astype(float))
    return np.sum(E.projections[mask], axis=0) if mask.any() else np.zeros((E.dimension,) * 2)


class ScalarMeasure:
    """Complex atomic measure ``sum_k w_k delta_{p_k}``."""

    def __init__(self, points, weights):
        p = np.asarray(points, dtype=float).ravel()
        w = np.asarray(weights, dtype=complex).ravel()
        if p.shape != w.shape:
            raise ArgumentError("one weight per point")
        if np.any(np.diff(p) <= 0):
            order = np.argsort(p, kind="stable")
            p, w = p[order], w[order]
            if np.any(np.diff(p) == 0):
                raise ArgumentError("atoms must be at distinct points")
        self.points, self.weights = p, w
        self._cum = np.concatenate([[0.0], np.cumsum(self.weights)])

    def __repr__(self):
        return f"ScalarMeasure({len(self.points)} atoms, |mu|={self.total_variation:.6g})"

    @property
    def atoms(self):
        return list(zip(self.points.tolist(), self.weights.tolist()))

    @property
    def total_variation(self) -> float:
        return float(np.sum(np.abs(self.weights)))

    @property
    def total_mass(self) -> complex:
        return complex(np.sum(self.weights))

    def masses(self, cells: Iterable[Cell]) -> np.ndarray:
        """Exact ``mu(cell)`` for each cell, respecting open and closed ends."""
        cells = list(cells)
        lo = np.array([c.lo for c in cells])
        hi = np.array([c.hi for c in cells])
        loc = np.array([c.lo_closed for c in cells])
        hic = np.array([c.hi_closed for c in cells])
        i = np.where(loc, np.searchsorted(self.points, lo, "left"),
                     np.searchsorted(self.points, lo, "right"))
        j = np.where(hic, np.searchsorted(self.points, hi, "right"),
                     np.searchsorted(self.points, hi, "left"))
        return np.where(j > i, self._cum[np.maximum(j, i)] - self._cum[i], 0.0)

    def mass(self, B) -> complex:
        return complex(np.sum(self.weights[membership(self.points, B)]))


def inner(E: SpectralMeasure, x, y) -> complex:
    """``<x, y>`` in the model's Hilbert space (grid vectors carry weight dx)."""
    x, y = np.asarray(x), np.asarray(y)
    w = E.dx if isinstance(E, GridPVM) else 1.0
    return complex(np.sum(x * np.conj(y)) * w)


def scalar_measure(E: SpectralMeasure, x, y) -> ScalarMeasure:
    """``mu_{x,y}(B) = <E(B) x, y>``."""
    x = np.asarray(x, dtype=complex).ravel()
    y = np.asarray(y, dtype=complex).ravel()
    if x.shape != (E.dimension,) or y.shape != (E.dimension,):
        raise ArgumentError(f"vectors must have length {E.dimension}")
    if isinstance(E, GridPVM):
        return ScalarMeasure(E.points, x * np.conj(y) * E.dx)
    w = np.einsum("i,kij,j->k", np.conj(y), E.projections, x)
    return ScalarMeasure(E.points, w)
