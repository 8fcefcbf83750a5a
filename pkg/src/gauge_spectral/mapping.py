"""Point spectra, essential ranges and the spectrum of ``f(A)`` for regulated f.

For a regulated f the spectrum of ``f(A)`` is the closure of the values of
f on the point spectrum together with the one-sided limits ``f(c-)`` and
``f(c+)`` at the remaining spectral points.  In a finite model everything is
point spectrum; in a continuum model (multiplication by x on an interval)
nothing is, so only one-sided limits contribute.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ._domain import Domain
from .calculus import operator_norm
from .errors import ArgumentError
from .regulated import DEFAULT_REVEAL_LEVEL, RegulatedFn
from .spectral_core import (DiscretePVM, GridPVM, SpectralMeasure, SymOperator,
                            default_cluster_tol, jacobi_eigh)

DEDUPE_TOL = 1e-10
CONTINUUM_SAMPLES = 1000
DEFAULT_EPS_GRID = tuple(10.0 ** -k for k in range(1, 9))


def dedupe(values, tol: float = DEDUPE_TOL) -> np.ndarray:
    """Sort complex values and drop those within ``tol`` of a kept one."""
    vals = np.asarray(values, dtype=complex).ravel()
    vals = vals[np.lexsort((vals.imag, vals.real))]
    kept = np.empty(len(vals), dtype=complex)
    n = 0
    for v in vals:
        if n == 0 or np.min(np.abs(kept[:n] - v)) > tol:
            kept[n] = v
            n += 1
    return kept[:n].copy()


@dataclass(frozen=True)
class SpectrumApprox:
    points: np.ndarray
    resolution: float = 0.0
    closure_note: str = "finite set; closed as given"

    def __post_init__(self):
        object.__setattr__(self, "points", dedupe(self.points))

    def __len__(self):
        return len(self.points)

    def __contains__(self, z) -> bool:
        return bool(np.any(np.abs(self.points - complex(z)) <= DEDUPE_TOL))

    def to_json(self) -> str:
        return json.dumps({"points": [[float(z.real), float(z.imag)] for z in self.points],
                           "resolution": self.resolution})

    @classmethod
    def from_json(cls, text: str) -> "SpectrumApprox":
        data = json.loads(text)
        pts = [complex(re, im) for re, im in data["points"]]
        return cls(np.array(pts, dtype=complex), float(data.get("resolution", 0.0)))


def point_spectrum(E: SpectralMeasure, tol: float = 0.0) -> SpectrumApprox:
    """Atoms with a nonzero projection; a grid model has none."""
    if isinstance(E, GridPVM):
        return SpectrumApprox(np.array([], dtype=complex), 0.0,
                              "multiplication operator: no eigenvalues")
    norms = np.array([np.linalg.norm(P) for P in E.projections]) if len(E.points) else np.array([])
    return SpectrumApprox(E.points[norms > tol].astype(complex))


def kernel_range_check(A, lam: float, E: DiscretePVM, cluster_tol: float | None = None):
    """``(rank E({lam}), dim ker(A - lam), ||(A - lam I) E({lam})||_op)``."""
    if not isinstance(A, SymOperator):
        A = SymOperator(A)
    if cluster_tol is None:
        cluster_tol = default_cluster_tol(A.n)
    scale = max(float(np.max(np.abs(E.points))) if len(E.points) else 0.0, 1e-300)
    hit = np.nonzero(np.abs(E.points - lam) <= cluster_tol * scale)[0]
    if len(hit) == 0:
        return 0, 0, 0.0
    k = int(hit[0])
    P = E.projections[k]
    mu = float(E.points[k])
    dim_ran = int(round(float(np.trace(P))))
    eig = jacobi_eigh(A).eigenvalues
    dim_ker = int(np.sum(np.abs(eig - mu) <= cluster_tol * scale))
    residual = operator_norm((A.entries - mu * np.eye(A.n)) @ P)
    return dim_ran, dim_ker, residual


def _continuum_probe(f: RegulatedFn, K: Domain, samples: int):
    xs = [np.linspace(a, b, samples) for a, b in K.components if a < b]
    xs.append(np.array([br.x for br in f.breakpoints(DEFAULT_REVEAL_LEVEL)]))
    pts = np.unique(np.concatenate(xs))
    return pts[K.contains(pts)]


def spectral_map(f: RegulatedFn, E: SpectralMeasure | None = None, model: str = "finite",
                 K: Domain | None = None, samples: int = CONTINUUM_SAMPLES) -> SpectrumApprox:
    """Spectrum of ``f(A)``.

    ``model="finite"``: ``{f(lambda)}`` over the atoms of E.
    ``model="continuum"``: ``{f(c-), f(c+)}`` over a uniform sample of K
    (default: E's interval) plus every breakpoint of f.
    """
    if model == "finite":
        if E is None:
            raise ArgumentError("the finite model needs a spectral measure")
        sp = point_spectrum(E)
        return SpectrumApprox(f.evaluate(sp.points.real), 0.0)
    if model != "continuum":
        raise ArgumentError(f"unknown model {model!r}")
    if K is None:
        if E is None:
            raise ArgumentError("the continuum model needs K or a grid model")
        K = E.domain
    pts = _continuum_probe(f, K, samples)
    vals = []
    for x in pts:
        left, right = f.side_limits(float(x))
        vals.extend((left, right))
    span = sum(b - a for a, b in K.components)
    res = span / (samples - 1)
    note = (f"one-sided limits at {len(pts)} points of K (uniform spacing {res:.3g} plus "
            "breakpoints); limit points beyond this resolution are not added")
    return SpectrumApprox(np.array(vals), res, note)


def pointwise_image(f: RegulatedFn, K: Domain, samples: int = CONTINUUM_SAMPLES) -> SpectrumApprox:
    """``f(K)`` sampled the same way, using point values instead of limits."""
    pts = _continuum_probe(f, K, samples)
    return SpectrumApprox(f.evaluate(pts), 0.0, "pointwise values")


def essential_range(f: RegulatedFn, E: SpectralMeasure,
                    eps_grid=DEFAULT_EPS_GRID) -> SpectrumApprox:
    """Values ``lam`` of f on the model's points with ``E(f^-1(B(lam, eps))) != 0``
    for every eps in ``eps_grid``."""
    eps_grid = sorted(eps_grid, reverse=True)
    if not eps_grid or eps_grid[-1] <= 0:
        raise ArgumentError("eps_grid must hold positive values")
    values = f.evaluate(E.points)
    # E(B) != 0 exactly when B holds a point whose own projection is nonzero
    if isinstance(E, GridPVM):
        charged = np.ones(len(E.points), dtype=bool)
    else:
        charged = np.array([np.any(P) for P in E.projections], dtype=bool)
    kept = []
    for lam in dedupe(values):
        dist = np.abs(values - lam)
        if all(np.any(charged & (dist < eps)) for eps in eps_grid):
            kept.append(lam)
    return SpectrumApprox(np.array(kept, dtype=complex), float(eps_grid[-1]),
                          f"checked down to eps={eps_grid[-1]:g}")


def hausdorff_distance(S1, S2) -> float:
    """Hausdorff distance between two finite sets in the complex plane."""
    a = np.asarray(S1.points if isinstance(S1, SpectrumApprox) else S1, dtype=complex).ravel()
    b = np.asarray(S2.points if isinstance(S2, SpectrumApprox) else S2, dtype=complex).ravel()
    if a.size == 0 or b.size == 0:
        raise ArgumentError("Hausdorff distance needs nonempty sets")
    d = np.abs(a[:, None] - b[None, :])
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))
