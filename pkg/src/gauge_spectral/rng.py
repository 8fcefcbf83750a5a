"""Seeded randomness and random test models.

Every random draw in the package flows from :func:`generator`, which
derives an independent stream per name from one integer seed, so adding a
new consumer never perturbs the others.
"""

from __future__ import annotations

import os
import zlib

import numpy as np

from ._domain import Cell, Domain
from .gauge import Gauge, TaggedPartition, build_fine_partition, canonical_step_gauge
from .regulated import Break, Piecewise, StepFn

SEED_ENV = "GAUGE_SPECTRAL_SEED"


def default_seed() -> int:
    return int(os.environ.get(SEED_ENV, "0"))


def generator(seed: int | None = None, stream: str = "") -> np.random.Generator:
    """Generator for ``stream`` under ``seed`` (default from the environment)."""
    if seed is None:
        seed = default_seed()
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1),
                                                         zlib.crc32(stream.encode())]))


def random_symmetric(rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
    """Exactly symmetric matrix with entries in ``[-scale, scale]``."""
    B = rng.uniform(-scale, scale, (n, n))
    return (B + B.T) / 2


def planted_symmetric(rng: np.random.Generator, multiplicities) -> tuple:
    """Symmetric matrix with integer eigenvalues ``1, 2, ...`` repeated as asked.

    Returns ``(A, eigenvalues)``.
    """
    values = np.repeat(np.arange(1, len(multiplicities) + 1, dtype=float), multiplicities)
    n = len(values)
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    A = (Q * values) @ Q.T
    return (A + A.T) / 2, np.unique(values)


def random_step(rng: np.random.Generator, domain=(-1.0, 1.0), max_cells: int = 10,
                complex_values: bool = False, singletons: bool = True) -> StepFn:
    """Step function on an interval with at most ``max_cells`` cells.

    Interior edges are drawn uniformly; each edge belongs to the left or the
    right cell at random, or becomes its own singleton cell.
    """
    a, b = (float(v) for v in domain)
    k = int(rng.integers(1, max_cells + 1))
    cells = []
    edges = np.sort(rng.uniform(a, b, k - 1)) if k > 1 else np.array([])
    # leave room for singleton cells inside the budget
    lo, lo_closed = a, True
    for x in edges:
        if len(cells) + 2 >= max_cells:
            break
        mode = int(rng.integers(0, 3 if singletons else 2))
        if mode == 2 and len(cells) + 3 <= max_cells:
            cells.append(Cell(lo, x, lo_closed, False))
            cells.append(Cell.singleton(x))
            lo, lo_closed = x, False
        else:
            cells.append(Cell(lo, x, lo_closed, mode == 1))
            lo, lo_closed = x, mode != 1
    cells.append(Cell(lo, b, lo_closed, True))
    values = rng.uniform(-2, 2, len(cells))
    if complex_values:
        values = values + 1j * rng.uniform(-2, 2, len(cells))
    return StepFn(cells, values, Domain.interval(a, b))


_SMOOTH = (np.sin, np.cos, np.exp, np.tanh, lambda x: x * x, lambda x: x)


def random_piecewise(rng: np.random.Generator, domain=(0.0, 1.0), max_breaks: int = 4) -> Piecewise:
    """Piecewise function with random smooth pieces, jumps and removable breaks."""
    a, b = (float(v) for v in domain)
    k = int(rng.integers(0, max_breaks + 1))
    xs = np.sort(rng.uniform(a + 0.05 * (b - a), b - 0.05 * (b - a), k))
    pieces, breaks = [], []
    for _ in range(k + 1):
        fn = _SMOOTH[int(rng.integers(len(_SMOOTH)))]
        c0, c1, c2 = rng.uniform(-1, 1, 3)
        pieces.append(lambda x, fn=fn, c0=c0, c1=c1, c2=c2: c0 + c1 * fn(c2 * 3 * x))
    for x in xs:
        breaks.append(Break(float(x), None, None, float(rng.uniform(-2, 2))))
    # roughly one break in three is removable: the right piece continues the left one
    for i, x in enumerate(xs):
        if rng.random() < 1 / 3:
            pieces[i + 1] = pieces[i]
    return Piecewise((a, b), pieces, breaks)


def random_fine_partition(rng: np.random.Generator, s: StepFn,
                          max_exceptional: int = 3) -> TaggedPartition:
    """A partition fine for the canonical gauge of ``s``, randomized two ways:
    the gauge is shrunk by random piecewise-constant factors, and a few random
    points are forced to be singleton cells."""
    base = canonical_step_gauge(s)
    a, b = s.domain.lo, s.domain.hi
    k = int(rng.integers(0, 6))
    edges = np.sort(rng.uniform(a, b, k))
    factors = rng.uniform(0.05, 1.0, k + 1)
    shrink = lambda t: factors[np.searchsorted(edges, t, side="right")]
    # base(t) already applies the singleton overrides
    gamma = Gauge(lambda t: base(t) * shrink(t), description="shrunk canonical gauge",
                  stops=base.stops)
    extra = rng.uniform(a, b, int(rng.integers(0, max_exceptional + 1)))
    return build_fine_partition(s.domain, gamma, extra)
