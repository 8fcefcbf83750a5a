"""K-cells and compact subsets of the real line.

A :class:`Domain` is a finite union of disjoint closed intervals, some of
which may be degenerate (isolated points).  That covers both the interval
hulls functions are usually defined on and the finite spectra of matrix
models.  A :class:`Cell` is an interval with explicit open/closed ends; as a
K-cell it always means ``K ∩ cell``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ArgumentError


@dataclass(frozen=True)
class Cell:
    lo: float
    hi: float
    lo_closed: bool = True
    hi_closed: bool = False

    def __post_init__(self):
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))
        if not (self.lo <= self.hi):
            raise ArgumentError(f"cell with lo > hi: {self.lo} > {self.hi}")
        if self.lo == self.hi and not (self.lo_closed and self.hi_closed):
            raise ArgumentError("a degenerate cell must be a closed singleton")

    @classmethod
    def singleton(cls, p: float) -> "Cell":
        return cls(float(p), float(p), True, True)

    @classmethod
    def closed(cls, lo: float, hi: float) -> "Cell":
        return cls(float(lo), float(hi), True, True)

    @property
    def is_singleton(self) -> bool:
        return self.lo == self.hi

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        left = (x > self.lo) | ((x == self.lo) & self.lo_closed)
        right = (x < self.hi) | ((x == self.hi) & self.hi_closed)
        out = left & right
        return bool(out) if out.ndim == 0 else out

    def is_subset_of(self, other: "Cell") -> bool:
        if self.lo < other.lo or (self.lo == other.lo and self.lo_closed and not other.lo_closed):
            return False
        if self.hi > other.hi or (self.hi == other.hi and self.hi_closed and not other.hi_closed):
            return False
        return True

    def __str__(self):
        if self.is_singleton:
            return f"{{{self.lo!r}}}"
        return f"{'[' if self.lo_closed else '('}{self.lo!r}, {self.hi!r}{']' if self.hi_closed else ')'}"


@lru_cache(maxsize=32)
def _van_der_corput(n: int) -> np.ndarray:
    """First ``n`` points of the base-2 van der Corput sequence in [0, 1)."""
    i = np.arange(n, dtype=np.uint64)
    out = np.zeros(n)
    scale = 0.5
    while i.any():
        out += (i & np.uint64(1)).astype(float) * scale
        i >>= np.uint64(1)
        scale *= 0.5
    out.flags.writeable = False
    return out


class Domain:
    """A compact set given as disjoint closed components ``[lo, hi]``."""

    def __init__(self, components):
        comps = sorted((float(a), float(b)) for a, b in components)
        if not comps:
            raise ArgumentError("a compact set needs at least one component")
        merged = []
        for a, b in comps:
            if not (math.isfinite(a) and math.isfinite(b)) or a > b:
                raise ArgumentError(f"bad component [{a}, {b}]")
            if merged and a <= merged[-1][1]:
                merged[-1] = (merged[-1][0], max(merged[-1][1], b))
            else:
                merged.append((a, b))
        self.components = tuple(merged)
        self._starts = np.array([a for a, _ in merged])
        self._ends = np.array([b for _, b in merged])

    @classmethod
    def interval(cls, a: float, b: float) -> "Domain":
        if not a < b:
            raise ArgumentError(f"interval needs a < b, got [{a}, {b}]")
        return cls([(a, b)])

    @classmethod
    def points(cls, pts) -> "Domain":
        return cls([(p, p) for p in np.asarray(pts, dtype=float).ravel()])

    @property
    def lo(self) -> float:
        return self.components[0][0]

    @property
    def hi(self) -> float:
        return self.components[-1][1]

    @property
    def is_interval(self) -> bool:
        return len(self.components) == 1 and self.components[0][0] < self.components[0][1]

    @property
    def is_finite(self) -> bool:
        return all(a == b for a, b in self.components)

    @property
    def point_set(self) -> np.ndarray:
        if not self.is_finite:
            raise ArgumentError("domain is not a finite set")
        return np.array([a for a, _ in self.components])

    def __eq__(self, other):
        return isinstance(other, Domain) and self.components == other.components

    def __hash__(self):
        return hash(self.components)

    def __repr__(self):
        if self.is_interval:
            return f"Domain.interval({self.lo!r}, {self.hi!r})"
        return f"Domain({list(self.components)!r})"

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self._starts, x, side="right") - 1
        out = (idx >= 0) & (x <= self._ends[np.maximum(idx, 0)])
        return bool(out) if out.ndim == 0 else out

    def issubset(self, other: "Domain") -> bool:
        return all(any(c <= a and b <= d for c, d in other.components)
                   for a, b in self.components)

    def extent(self, cell: Cell):
        """inf/sup of ``K ∩ cell`` with attainment flags, or None if empty."""
        pieces = []
        for a, b in self.components:
            lo, lo_in = (a, True) if a > cell.lo else (cell.lo, cell.lo_closed)
            hi, hi_in = (b, True) if b < cell.hi else (cell.hi, cell.hi_closed)
            if lo < hi or (lo == hi and lo_in and hi_in):
                pieces.append((lo, lo_in, hi, hi_in))
        if not pieces:
            return None
        lo, lo_in = pieces[0][0], pieces[0][1]
        hi, hi_in = pieces[-1][2], pieces[-1][3]
        return lo, hi, lo_in, hi_in

    def intersects(self, cell: Cell) -> bool:
        return self.extent(cell) is not None

    def sup_below(self, x: float, inclusive: bool = False):
        """sup of ``K ∩ (-inf, x)`` (or ``(-inf, x]``); None when empty."""
        best = None
        for a, b in self.components:
            if a < x or (inclusive and a == x):
                v = min(b, x)
                best = v if best is None else max(best, v)
        return best

    def inf_above(self, x: float, inclusive: bool = False):
        best = None
        for a, b in self.components:
            if b > x or (inclusive and b == x):
                v = max(a, x)
                best = v if best is None else min(best, v)
        return best

    def distance_outside(self, t: float, cell: Cell) -> float:
        """``d(t, K \\ cell)``; ``inf`` when the cell already contains K."""
        left = self.sup_below(cell.lo, inclusive=not cell.lo_closed)
        right = self.inf_above(cell.hi, inclusive=not cell.hi_closed)
        d = math.inf
        if left is not None:
            d = min(d, t - left)
        if right is not None:
            d = min(d, right - t)
        return d

    def sample(self, n: int) -> np.ndarray:
        """Nested sample of K: isolated points plus ``n`` points spread over the
        nondegenerate components.  ``sample(n)`` is a subset of ``sample(m)``
        for ``n <= m``."""
        iso = [a for a, b in self.components if a == b]
        spans = [(a, b) for a, b in self.components if a < b]
        pts = list(iso)
        if spans and n > 0:
            lengths = np.array([b - a for a, b in spans])
            cum = np.concatenate([[0.0], np.cumsum(lengths)])
            u = _van_der_corput(n) * cum[-1]
            # endpoints first so even tiny samples see them
            u = np.concatenate([[0.0, cum[-1]], u])
            idx = np.clip(np.searchsorted(cum, u, side="right") - 1, 0, len(spans) - 1)
            starts = np.array([a for a, _ in spans])
            ends = np.array([b for _, b in spans])
            pts.extend(np.minimum(starts[idx] + (u - cum[idx]), ends[idx]).tolist())
            pts.extend(a for a, _ in spans)
            pts.extend(b for _, b in spans)
        return np.unique(np.asarray(pts, dtype=float))
