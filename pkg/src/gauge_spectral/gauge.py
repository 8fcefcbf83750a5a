"""Gauges, gauge-fine tagged partitions and a sweep that builds them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from ._domain import Cell, Domain
from .errors import ArgumentError, GaugeTooSmallError
from .regulated import StepFn, check_cover

MAX_CELLS = 1_000_000
SAFETY = 0.9

# how a sweep must treat a boundary point
SINGLE = "single"  # the point is a singleton cell
LEFT = "left"      # a cell starts at the point and contains it
RIGHT = "right"    # a cell ends at the point and contains it


class Gauge:
    """A strictly positive function on K, with optional point overrides."""

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], overrides: dict | None = None,
                 description: str = "gauge", stops: dict | None = None):
        self._fn = fn
        self.stops = dict(stops or {})
        self.overrides = dict(overrides or {})
        self.description = description

    @classmethod
    def constant(cls, c: float) -> "Gauge":
        if not c > 0:
            raise ArgumentError("a gauge must be positive")
        return cls(lambda t: np.full(np.shape(t), float(c)), description=f"constant {c:g}")

    @classmethod
    def piecewise_constant(cls, edges: Sequence[float], values: Sequence[float]) -> "Gauge":
        """``values[i]`` on ``[edges[i-1], edges[i])``; ``len(values) == len(edges) + 1``."""
        edges = np.asarray(edges, dtype=float)
        values = np.asarray(values, dtype=float)
        if len(values) != len(edges) + 1 or np.any(values <= 0):
            raise ArgumentError("need len(edges)+1 positive values")
        return cls(lambda t: values[np.searchsorted(edges, t, side="right")],
                   description=f"piecewise constant ({len(values)} levels)")

    def __call__(self, t):
        arr = np.asarray(t, dtype=float)
        out = np.asarray(self._fn(np.atleast_1d(arr)), dtype=float).copy()
        if self.overrides:
            flat = np.atleast_1d(arr)
            for i, x in enumerate(flat):
                if float(x) in self.overrides:
                    out[i] = self.overrides[float(x)]
        return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)

    def __repr__(self):
        return f"Gauge({self.description})"


@dataclass(frozen=True)
class TaggedPartition:
    """Tagged K-cells ``(tag, cell)`` covering ``domain``."""
    items: tuple
    domain: Domain = field(compare=False)

    def __post_init__(self):
        if self.items:
            t = np.array([t for t, _ in self.items], dtype=float)
            lo = np.array([c.lo for _, c in self.items])
            hi = np.array([c.hi for _, c in self.items])
            loc = np.array([c.lo_closed for _, c in self.items])
            hic = np.array([c.hi_closed for _, c in self.items])
            ok = (((t > lo) | ((t == lo) & loc)) & ((t < hi) | ((t == hi) & hic)))
            if not ok.all():
                k = int(np.argmin(ok))
                t_bad, c_bad = self.items[k]
                raise ArgumentError(f"tag {t_bad} is not in its cell {c_bad}")
        check_cover([c for _, c in self.items], self.domain)

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    @property
    def tags(self) -> np.ndarray:
        return np.array([t for t, _ in self.items])

    @property
    def cells(self) -> list:
        return [c for _, c in self.items]


def _as_domain(K) -> Domain:
    if isinstance(K, Domain):
        return K
    if isinstance(K, Cell):
        return Domain([(K.lo, K.hi)])
    return Domain.interval(*K)


def canonical_step_gauge(s: StepFn) -> Gauge:
    """Gauge under which every fine cell lies inside one cell of ``s``.

    A tag t in cell C gets half its distance to K outside C.  Where that
    distance can shrink to zero (C abuts the rest of K) the value is floored
    at an eighth of C's width, and at half the width where it is exactly
    zero.  A singleton cell gets half the distance to the nearest other
    point of K, or to the nearest other cell endpoint when K is a continuum
    there.  The cell boundaries are recorded as sweep stops so that
    :func:`build_fine_partition` never lets a cell straddle two step cells.
    """
    K = s.domain
    cells = s.cells
    lo = np.array([c.lo for c in cells])
    hi = np.array([c.hi for c in cells])
    width = hi - lo
    left = np.array([K.sup_below(c.lo, inclusive=not c.lo_closed) for c in cells], dtype=object)
    right = np.array([K.inf_above(c.hi, inclusive=not c.hi_closed) for c in cells], dtype=object)
    L = np.array([-math.inf if v is None else v for v in left], dtype=float)
    R = np.array([math.inf if v is None else v for v in right], dtype=float)
    abutting = (L == lo) | (R == hi)
    span = max(K.hi - K.lo, 1.0)
    ends = np.unique(np.concatenate([lo, hi]))

    overrides = {}
    for c in cells:
        if not c.is_singleton:
            continue
        p = c.lo
        below, above = K.sup_below(p), K.inf_above(p)
        gaps = [p - below if below is not None else math.inf,
                above - p if above is not None else math.inf]
        d = min(gaps)
        if d == 0 or not math.isfinite(d):
            others = np.abs(ends[ends != p] - p)
            d = float(others.min()) if len(others) else span if d != 0 else span
        overrides[p] = 0.5 * d

    def fn(t):
        t = np.asarray(t, dtype=float)
        j = s.cell_index(t)
        d = np.minimum(t - L[j], R[j] - t)
        g = 0.5 * d
        g = np.where(abutting[j], np.maximum(g, width[j] / 8), g)
        g = np.where(d == 0, width[j] / 2, g)
        g = np.where(np.isinf(d), span, g)
        return g

    stops = {}
    for c in cells:
        if c.is_singleton:
            stops[c.lo] = SINGLE
            continue
        if c.lo_closed and c.lo > K.lo:
            stops.setdefault(c.lo, LEFT)
        if c.hi_closed and c.hi < K.hi:
            stops.setdefault(c.hi, RIGHT)
    return Gauge(fn, overrides, description=f"canonical step gauge ({len(cells)} cells)",
                 stops=stops)


def is_fine(P: TaggedPartition, gamma: Gauge) -> bool:
    """Every ``K ∩ cell`` lies strictly inside ``(t - γ(t), t + γ(t))``."""
    K = P.domain
    tags = P.tags
    radii = gamma(tags)
    for (t, c), r in zip(P.items, np.atleast_1d(radii)):
        if not r > 0:
            return False
        ext = K.extent(c)
        if ext is None:
            continue
        inf, sup, inf_in, sup_in = ext
        lo_ok = inf > t - r or (not inf_in and inf == t - r)
        hi_ok = sup < t + r or (not sup_in and sup == t + r)
        if not (lo_ok and hi_ok):
            return False
    return True


def _sweep_component(a: float, b: float, gamma: Gauge, stops: dict, items: list):
    xs = sorted(x for x in stops if a <= x <= b)
    pos, pos_closed = a, True
    k = 0
    while True:
        if len(items) > MAX_CELLS:
            raise GaugeTooSmallError(f"more than {MAX_CELLS} cells needed; gauge too small")
        while k < len(xs) and xs[k] < pos:
            k += 1
        if pos_closed and stops.get(pos) == SINGLE:
            items.append((pos, Cell.singleton(pos)))
            if pos == b:
                return
            pos_closed = False
            continue
        if pos == b:
            if pos_closed:
                items.append((b, Cell.singleton(b)))
            return
        while k < len(xs) and xs[k] <= pos:
            k += 1
        nxt = xs[k] if k < len(xs) else b
        if pos_closed:
            tag = pos
            reach = tag + SAFETY * gamma(tag)
        else:
            h = (nxt - pos) / 2
            for _ in range(1100):
                tag = pos + h
                g = gamma(tag)
                if SAFETY * g >= h and tag > pos:
                    break
                h /= 2
            else:
                raise GaugeTooSmallError(f"no admissible tag right of {pos}")
            reach = tag + SAFETY * g
        if reach >= nxt:
            kind = stops.get(nxt)
            if nxt == b and kind != SINGLE:
                items.append((tag, Cell(pos, b, pos_closed, True)))
                return
            if kind == RIGHT:
                items.append((tag, Cell(pos, nxt, pos_closed, True)))
                pos, pos_closed = nxt, False
            else:
                items.append((tag, Cell(pos, nxt, pos_closed, False)))
                pos, pos_closed = nxt, True
        else:
            if not reach > pos:
                raise GaugeTooSmallError(f"gauge underflows at {pos}")
            items.append((tag, Cell(pos, reach, pos_closed, False)))
            pos, pos_closed = reach, True


def build_fine_partition(K, gamma: Gauge, exceptional: Iterable[float] = ()) -> TaggedPartition:
    """Left-to-right sweep producing a ``gamma``-fine tagged partition of K.

    Exceptional points become singleton cells tagged at themselves.  Between
    them, each cell is tagged at its left end and extends to
    ``min(tag + 0.9 γ(tag), next stop)``, where the stops are the exceptional
    points plus any cell boundaries the gauge carries.  After a singleton or
    a right-closed stop the next cell is open on the left; its tag is moved
    right until the gauge there covers the gap back to the stop.
    """
    K = _as_domain(K)
    stops = dict(gamma.stops)
    for x in exceptional:
        if K.contains(float(x)):
            stops[float(x)] = SINGLE
    items: list = []
    for a, b in K.components:
        if a == b:
            items.append((a, Cell.singleton(a)))
            continue
        _sweep_component(a, b, gamma, stops, items)
    return TaggedPartition(tuple(items), K)


def refine(P: TaggedPartition, index: int, point: float) -> TaggedPartition:
    """Split cell ``index`` at an interior ``point``.

    The half holding the old tag keeps it; the other half is tagged at its
    end next to the old tag.
    """
    t, c = P.items[index]
    if not (c.lo < point < c.hi):
        raise ArgumentError("split point must be interior to the cell")
    left = Cell(c.lo, point, c.lo_closed, False)
    right = Cell(point, c.hi, True, c.hi_closed)
    if t < point:
        new = [(t, left), (point, right)]
    else:
        new = [(c.lo if c.lo_closed else (c.lo + point) / 2, left), (t, right)]
    items = P.items[:index] + tuple(new) + P.items[index + 1:]
    return TaggedPartition(items, P.domain)
