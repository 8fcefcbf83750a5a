"""Regulated functions on a compact set K.

Three concrete representations share one interface:

* :class:`StepFn` -- finitely many disjoint K-cells with one value each.
* :class:`Piecewise` -- continuous evaluators between breakpoints, with the
  point value and both one-sided limits stored at every breakpoint.
* :class:`AtomicPerturbation` -- a base function changed at a countable set
  of atoms whose deviations vanish along an enumeration (Thomae's function
  is the canonical example).

Pointwise sums, products, scalings and conjugates of any of these give a
:class:`Combination`, or a :class:`StepFn` when both operands are steps.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from ._domain import Cell, Domain
from .errors import (ArgumentError, ConvergenceError, DomainError,
                     EssentialDiscontinuityError)

# atoms revealed when an infinite atomic perturbation is inspected without an
# explicit truncation level
DEFAULT_REVEAL_LEVEL = 64
CLASSIFY_RTOL = 1e-9
LIMIT_TOL = 1e-9
MAX_CELLS = 1_000_000


@dataclass(frozen=True)
class Break:
    """Point value and one-sided limits at a breakpoint."""
    x: float
    left: complex
    right: complex
    value: complex


@dataclass(frozen=True)
class Discontinuity:
    point: float
    kind: str  # "jump" or "removable"
    left: complex
    right: complex
    value: complex


@dataclass(frozen=True)
class DiscontinuityReport:
    entries: tuple

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def points(self):
        return [e.point for e in self.entries]


def _close(a, b, scale):
    return abs(a - b) <= CLASSIFY_RTOL * max(1.0, scale)


def one_sided_limit(fn: Callable, x: float, side: int, h: float) -> complex:
    """Limit of ``fn`` at ``x`` from the left (side=-1) or right (side=+1).

    Samples ``x + side * 2**-k * h`` for k = 1..40 and accepts once the last
    few samples agree to within ``LIMIT_TOL``.
    """
    if h <= 0:
        raise ArgumentError("probe width must be positive")
    ks = np.arange(1, 41)
    xs = x + side * h * np.exp2(-ks.astype(float))
    vals = np.asarray(fn(xs), dtype=complex)
    tail = vals[-8:]
    scale = max(1.0, float(np.max(np.abs(tail))))
    if np.max(np.abs(tail - tail[-1])) < LIMIT_TOL * scale:
        return complex(tail[-1])
    raise EssentialDiscontinuityError(
        f"{'left' if side < 0 else 'right'} limit at {x!r} did not settle; "
        "possibly essential discontinuity")


class RegulatedFn:
    """Common interface.  Subclasses implement ``_eval``, ``side_limits``,
    ``breakpoints`` and ``envelope``."""

    domain: Domain

    # -- evaluation -------------------------------------------------------
    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if not np.all(self.domain.contains(x)):
            bad = np.atleast_1d(x)[~np.atleast_1d(self.domain.contains(x))][0]
            raise DomainError(f"{bad!r} is outside {self.domain!r}")
        return np.asarray(self._eval(np.atleast_1d(x)), dtype=complex).reshape(x.shape)

    def __call__(self, x):
        out = self.evaluate(x)
        return complex(out) if out.ndim == 0 else out

    def _eval(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def side_limits(self, x: float) -> tuple:
        raise NotImplementedError

    def side_limits_at(self, xs) -> tuple:
        """Arrays ``(left, right)`` of one-sided limits at each point of ``xs``."""
        pairs = [self.side_limits(float(x)) for x in np.atleast_1d(xs)]
        if not pairs:
            return np.zeros(0, complex), np.zeros(0, complex)
        left, right = zip(*pairs)
        return np.array(left, dtype=complex), np.array(right, dtype=complex)

    def breakpoints(self, level: int | None = None) -> list:
        """Breaks revealed up to ``level``, sorted by position."""
        raise NotImplementedError

    def envelope(self, level: int) -> float:
        """Bound on the deviation of every atom not revealed by ``level``."""
        return 0.0

    @property
    def is_step_like(self) -> bool:
        return False

    @property
    def has_hidden_atoms(self) -> bool:
        return False

    def _check_domain(self, x):
        if not self.domain.contains(x):
            raise DomainError(f"{x!r} is outside {self.domain!r}")

    # -- algebra ------------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, RegulatedFn):
            return combine("add", self, other)
        return combine("add", self, constant(other, self.domain))

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, RegulatedFn):
            other = constant(other, self.domain)
        return combine("add", self, combine("scale", other, alpha=-1.0))

    def __rsub__(self, other):
        return constant(other, self.domain) - self

    def __mul__(self, other):
        if isinstance(other, RegulatedFn):
            return combine("mul", self, other)
        return combine("scale", self, alpha=other)

    __rmul__ = __mul__

    def __neg__(self):
        return combine("scale", self, alpha=-1.0)

    def conj(self):
        return combine("conj", self)


# ---------------------------------------------------------------------------
# step functions


def _cell_key(c: Cell):
    return (c.lo, 0 if c.lo_closed else 1, c.hi)


def check_cover(cells: Sequence[Cell], domain: Domain) -> None:
    """Raise unless the K-cells are pairwise disjoint and cover ``domain``."""
    if not cells:
        raise ArgumentError("need at least one cell")
    cells = sorted(cells, key=_cell_key)
    if domain.sup_below(cells[0].lo, inclusive=not cells[0].lo_closed) is not None:
        raise ArgumentError(f"points of K left of {cells[0]} are not covered")
    if domain.inf_above(cells[-1].hi, inclusive=not cells[-1].hi_closed) is not None:
        raise ArgumentError(f"points of K right of {cells[-1]} are not covered")
    for prev, nxt in zip(cells, cells[1:]):
        if prev.hi > nxt.lo or (prev.hi == nxt.lo and prev.hi_closed and nxt.lo_closed):
            raise ArgumentError(f"cells {prev} and {nxt} overlap")
        if prev.hi < nxt.lo:
            gap = Cell(prev.hi, nxt.lo, not prev.hi_closed, not nxt.lo_closed)
        elif not prev.hi_closed and not nxt.lo_closed:
            gap = Cell.singleton(prev.hi)
        else:
            continue
        if domain.intersects(gap):
            raise ArgumentError(f"gap {gap} between cells meets K")


def fill_cells(domain: Domain, pieces: Iterable, fill: complex = 0.0):
    """Complete disjoint (cell, value) pairs on an interval K with ``fill``."""
    pieces = sorted(pieces, key=lambda p: _cell_key(p[0]))
    out = []
    pos, pos_closed = domain.lo, True  # next uncovered point, and whether it is included
    for cell, val in pieces:
        if cell.lo > pos or (cell.lo == pos and pos_closed and not cell.lo_closed):
            if cell.lo == pos:
                out.append((Cell.singleton(pos), fill))
            else:
                out.append((Cell(pos, cell.lo, pos_closed, not cell.lo_closed), fill))
        out.append((cell, val))
        pos, pos_closed = cell.hi, not cell.hi_closed
    if pos < domain.hi:
        out.append((Cell(pos, domain.hi, pos_closed, True), fill))
    elif pos == domain.hi and pos_closed:
        out.append((Cell.singleton(pos), fill))
    return out


class StepFn(RegulatedFn):
    """``sum_i values[i] * 1_{cells[i]}`` on K.

    ``tags`` optionally records a representative point per cell (the point
    whose function value the cell carries when built by approximation).
    """

    def __init__(self, cells: Sequence[Cell], values, domain: Domain | None = None,
                 tags=None):
        cells = list(cells)
        values = np.asarray(values, dtype=complex).ravel()
        if len(cells) != len(values):
            raise ArgumentError("one value per cell is required")
        if domain is None:
            if not cells:
                raise ArgumentError("need at least one cell")
            domain = Domain.interval(min(c.lo for c in cells), max(c.hi for c in cells))
        order = sorted(range(len(cells)), key=lambda i: _cell_key(cells[i]))
        self.cells = tuple(cells[i] for i in order)
        self.values = values[order]
        self.values.flags.writeable = False
        self.tags = None if tags is None else np.asarray(tags, dtype=float)[order]
        self.domain = domain
        check_cover(self.cells, domain)
        self._lo = np.array([c.lo for c in self.cells])
        self._hi = np.array([c.hi for c in self.cells])
        self._loc = np.array([c.lo_closed for c in self.cells])
        self._hic = np.array([c.hi_closed for c in self.cells])
        wide = [i for i, c in enumerate(self.cells) if not c.is_singleton]
        self._wide = np.array(wide, dtype=int)

    def __repr__(self):
        body = ", ".join(f"{c}:{complex(v):g}" for c, v in zip(self.cells[:6], self.values[:6]))
        more = "" if len(self.cells) <= 6 else f", ... ({len(self.cells)} cells)"
        return f"StepFn({body}{more})"

    @property
    def is_step_like(self) -> bool:
        return True

    def _locate(self, x: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self._lo, x, side="right") - 1
        for _ in range(3):
            j = np.clip(idx, 0, len(self.cells) - 1)
            ok = (idx >= 0) & (((x > self._lo[j]) | ((x == self._lo[j]) & self._loc[j]))
                               & ((x < self._hi[j]) | ((x == self._hi[j]) & self._hic[j])))
            if ok.all():
                return idx
            idx = np.where(ok, idx, idx - 1)
        raise DomainError("point not covered by any cell")

    def _eval(self, x):
        return self.values[self._locate(x)]

    def cell_index(self, x) -> np.ndarray:
        return self._locate(np.atleast_1d(np.asarray(x, dtype=float)))

    def side_limits(self, x: float):
        self._check_domain(x)
        value = complex(self.values[self._locate(np.array([float(x)]))[0]])
        left = right = value
        w = self._wide
        if len(w):
            lo, hi = self._lo[w], self._hi[w]
            hit = np.nonzero((lo < x) & (x <= hi))[0]
            if len(hit) and self.domain.sup_below(x) == x:
                left = complex(self.values[w[hit[0]]])
            hit = np.nonzero((lo <= x) & (x < hi))[0]
            if len(hit) and self.domain.inf_above(x) == x:
                right = complex(self.values[w[hit[0]]])
        return left, right

    def side_limits_at(self, xs):
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        if not self.domain.is_interval:
            return super().side_limits_at(xs)
        if not np.all(self.domain.contains(xs)):
            raise DomainError(f"points outside {self.domain!r}")
        value = self.values[self._locate(xs)]
        left, right = value.copy(), value.copy()
        w = self._wide
        if len(w):
            lo, hi, vals = self._lo[w], self._hi[w], self.values[w]
            # wide cells are disjoint apart from shared endpoints
            i = np.searchsorted(lo, xs, side="left") - 1
            ok = (i >= 0) & (xs > self.domain.lo)
            ic = np.clip(i, 0, len(w) - 1)
            ok &= hi[ic] >= xs
            left[ok] = vals[ic[ok]]
            j = np.searchsorted(lo, xs, side="right") - 1
            ok = (j >= 0) & (xs < self.domain.hi)
            jc = np.clip(j, 0, len(w) - 1)
            ok &= hi[jc] > xs
            right[ok] = vals[jc[ok]]
        return left, right

    def breakpoints(self, level=None):
        xs = np.unique(np.concatenate([self._lo, self._hi]))
        xs = xs[self.domain.contains(xs)]
        left, right = self.side_limits_at(xs)
        value = self.values[self._locate(xs)]
        return [Break(x, l, r, v) for x, l, r, v in
                zip(xs.tolist(), left.tolist(), right.tolist(), value.tolist())]

    def normalized(self) -> "StepFn":
        """Merge neighbouring cells that carry the same value."""
        cells, vals = [self.cells[0]], [self.values[0]]
        for c, v in zip(self.cells[1:], self.values[1:]):
            p = cells[-1]
            touching = p.hi == c.lo and (p.hi_closed != c.lo_closed)
            if touching and v == vals[-1]:
                cells[-1] = Cell(p.lo, c.hi, p.lo_closed, c.hi_closed)
            else:
                cells.append(c)
                vals.append(v)
        return StepFn(cells, vals, self.domain)


# ---------------------------------------------------------------------------
# piecewise continuous functions


def _as_complex(v) -> complex:
    if isinstance(v, (list, tuple)):
        return complex(v[0], v[1])
    if isinstance(v, dict):
        return complex(v.get("re", 0.0), v.get("im", 0.0))
    return complex(v)


def _vectorized(fn):
    def wrapped(x):
        x = np.asarray(x, dtype=float)
        try:
            out = np.asarray(fn(x), dtype=complex)
            if out.shape == x.shape:
                return out
            if out.ndim == 0:
                return np.full(x.shape, complex(out))
        except (TypeError, ValueError):
            pass
        return np.array([complex(fn(float(t))) for t in x.ravel()]).reshape(x.shape)
    return wrapped


class Piecewise(RegulatedFn):
    """Continuous evaluators between breakpoints on an interval ``[a, b]``.

    ``pieces[i]`` is evaluated on the open interval between consecutive
    interior breakpoints.  A break may omit ``left``/``right``; the missing
    limits are then extracted numerically from the adjacent pieces.
    """

    def __init__(self, domain, pieces: Sequence[Callable], breaks=(), validate: bool = True):
        if not isinstance(domain, Domain):
            domain = Domain.interval(*domain)
        if not domain.is_interval:
            raise ArgumentError("piecewise functions live on an interval")
        self.domain = domain
        a, b = domain.lo, domain.hi
        raw = []
        for br in breaks:
            if isinstance(br, Break):
                raw.append((br.x, br.left, br.right, br.value))
            else:
                raw.append((float(br["x"]), br.get("left"), br.get("right"), br["value"]))
        raw.sort(key=lambda r: r[0])
        xs = [r[0] for r in raw]
        if len(set(xs)) != len(xs):
            raise ArgumentError("duplicate breakpoints")
        if any(not (a <= x <= b) for x in xs):
            raise ArgumentError("breakpoints must lie in K")
        self._interior = np.array([x for x in xs if a < x < b], dtype=float)
        pieces = [_vectorized(p) for p in pieces]
        if len(pieces) != len(self._interior) + 1:
            raise ArgumentError(
                f"{len(self._interior)} interior breaks need {len(self._interior) + 1} pieces")
        self.pieces = tuple(pieces)
        nodes = [a, *self._interior.tolist(), b]
        self._breaks = {}
        for x, left, right, value in raw:
            value = _as_complex(value)
            i = int(np.searchsorted(self._interior, x, side="left"))
            if x == a:
                left = value
            elif left is None:
                left = one_sided_limit(self.pieces[i], x, -1, (x - nodes[i]) / 2)
            if x == b:
                right = value
            elif right is None:
                j = i + 1 if a < x else 0
                right = one_sided_limit(self.pieces[j], x, +1, (nodes[j + 1] - x) / 2)
            self._breaks[x] = Break(x, _as_complex(left), _as_complex(right), value)
        if validate:
            self._validate_limits(nodes)

    def _validate_limits(self, nodes):
        for x, br in self._breaks.items():
            i = int(np.searchsorted(self._interior, x, side="left"))
            a, b = self.domain.lo, self.domain.hi
            if x > a:
                got = one_sided_limit(self.pieces[i], x, -1, (x - nodes[i]) / 2)
                if not _close(got, br.left, abs(got)):
                    raise ArgumentError(f"stored left limit at {x} disagrees with piece: {got}")
            if x < b:
                j = i + 1 if x > a else 0
                got = one_sided_limit(self.pieces[j], x, +1, (nodes[j + 1] - x) / 2)
                if not _close(got, br.right, abs(got)):
                    raise ArgumentError(f"stored right limit at {x} disagrees with piece: {got}")

    def __repr__(self):
        return f"Piecewise({self.domain!r}, breaks={sorted(self._breaks)})"

    def _eval(self, x):
        out = np.empty(x.shape, dtype=complex)
        idx = np.searchsorted(self._interior, x, side="right")
        for i, piece in enumerate(self.pieces):
            m = idx == i
            if m.any():
                out[m] = piece(x[m])
        for bx, br in self._breaks.items():
            out[x == bx] = br.value
        return out

    def side_limits(self, x):
        self._check_domain(x)
        br = self._breaks.get(float(x))
        if br is not None:
            return br.left, br.right
        v = complex(self(x))
        return v, v

    def side_limits_at(self, xs):
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        left = self.evaluate(xs)
        right = left.copy()
        for i, x in enumerate(xs.tolist()):
            br = self._breaks.get(x)
            if br is not None:
                left[i], right[i] = br.left, br.right
        return left, right

    def breakpoints(self, level=None):
        return [self._breaks[x] for x in sorted(self._breaks)]


# ---------------------------------------------------------------------------
# atomic perturbations


class AtomicPerturbation(RegulatedFn):
    """``base`` overridden at atoms revealed level by level.

    ``atoms(level)`` returns the (point, value) pairs revealed up to
    ``level``; every atom revealed later deviates from ``base`` by at most
    ``envelope(level)``, which must tend to zero.  With ``level=None`` the
    function is the full (infinite) perturbation and point evaluation uses
    ``rule(x)``, which returns the atom value at ``x`` or None.
    """

    def __init__(self, base: RegulatedFn, atoms: Callable[[int], list],
                 envelope: Callable[[int], float], level: int | None = None,
                 rule: Callable[[float], complex | None] | None = None, name: str = "atomic"):
        if level is None and rule is None:
            raise ArgumentError("an untruncated perturbation needs an evaluation rule")
        if level is not None and level < 0:
            raise ArgumentError("level must be nonnegative")
        self.base = base
        self.domain = base.domain
        self._atoms = atoms
        self._envelope = envelope
        self.level = level
        self.rule = rule
        self.name = name
        if level is not None:
            pts = self._atoms(level)
            self._atom_map = {float(p): complex(v) for p, v in pts}
        else:
            self._atom_map = None

    def __repr__(self):
        return f"AtomicPerturbation({self.name}, level={self.level})"

    def truncate(self, level: int) -> "AtomicPerturbation":
        return AtomicPerturbation(self.base, self._atoms, self._envelope, level, self.rule, self.name)

    def atoms(self, level: int | None = None) -> list:
        if level is None:
            level = self.level if self.level is not None else DEFAULT_REVEAL_LEVEL
        elif self.level is not None:
            level = min(level, self.level)
        return [(float(p), complex(v)) for p, v in self._atoms(level)]

    def envelope(self, level):
        if self.level is not None and level >= self.level:
            return 0.0
        return float(self._envelope(level))

    @property
    def has_hidden_atoms(self):
        return self.level is None or self.base.has_hidden_atoms

    @property
    def is_step_like(self):
        return self.level is not None and self.base.is_step_like

    def _eval(self, x):
        out = np.asarray(self.base._eval(x), dtype=complex).copy()
        if self._atom_map is not None:
            if self._atom_map:
                keys = np.fromiter(self._atom_map.keys(), dtype=float)
                hit = np.isin(x, keys)
                for i in np.nonzero(hit)[0]:
                    out[i] = self._atom_map[float(x[i])]
        else:
            for i, t in enumerate(x):
                v = self.rule(float(t))
                if v is not None:
                    out[i] = v
        return out

    def side_limits(self, x):
        return self.base.side_limits(x)

    def side_limits_at(self, xs):
        return self.base.side_limits_at(xs)

    def breakpoints(self, level=None):
        merged = {br.x: br for br in self.base.breakpoints(level)}
        for p, v in self.atoms(level):
            left, right = self.base.side_limits(p)
            merged[p] = Break(p, left, right, v)
        return [merged[x] for x in sorted(merged)]


# ---------------------------------------------------------------------------
# pointwise combinations

_UNARY = {"scale", "conj"}
_BINARY = {"add", "mul"}


def _sup_bound(f: RegulatedFn) -> float:
    pts = f.domain.sample(256)
    vals = [np.max(np.abs(f.evaluate(pts)))]
    for br in f.breakpoints():
        vals.append(max(abs(br.left), abs(br.right), abs(br.value)))
    return float(max(vals))


class Combination(RegulatedFn):
    """Pointwise ``op`` applied to one or two regulated functions."""

    def __init__(self, op: str, f: RegulatedFn, g: RegulatedFn | None = None, alpha=None):
        self.op, self.f, self.g = op, f, g
        self.alpha = None if alpha is None else complex(alpha)
        self.domain = f.domain
        self._bounds = None

    def __repr__(self):
        if self.op == "scale":
            return f"Combination(scale {self.alpha}, {self.f!r})"
        if self.op == "conj":
            return f"Combination(conj, {self.f!r})"
        return f"Combination({self.op}, {self.f!r}, {self.g!r})"

    def _apply(self, u, v=None):
        if self.op == "add":
            return u + v
        if self.op == "mul":
            return u * v
        if self.op == "scale":
            return self.alpha * u
        return np.conj(u)

    def _eval(self, x):
        if self.g is None:
            return self._apply(self.f._eval(x))
        return self._apply(self.f._eval(x), self.g._eval(x))

    def side_limits(self, x):
        fl, fr = self.f.side_limits(x)
        if self.g is None:
            return complex(self._apply(fl)), complex(self._apply(fr))
        gl, gr = self.g.side_limits(x)
        return complex(self._apply(fl, gl)), complex(self._apply(fr, gr))

    def side_limits_at(self, xs):
        fl, fr = self.f.side_limits_at(xs)
        if self.g is None:
            return self._apply(fl), self._apply(fr)
        gl, gr = self.g.side_limits_at(xs)
        return self._apply(fl, gl), self._apply(fr, gr)

    def breakpoints(self, level=None):
        xs = {br.x for br in self.f.breakpoints(level)}
        if self.g is not None:
            xs |= {br.x for br in self.g.breakpoints(level)}
        xs = np.array(sorted(xs), dtype=float)
        if not len(xs):
            return []
        left, right = self.side_limits_at(xs)
        value = self.evaluate(xs)
        return [Break(x, l, r, v) for x, l, r, v in
                zip(xs.tolist(), left.tolist(), right.tolist(), value.tolist())]

    def envelope(self, level):
        ef = self.f.envelope(level)
        if self.g is None:
            return ef * (abs(self.alpha) if self.op == "scale" else 1.0)
        eg = self.g.envelope(level)
        if self.op == "add":
            return ef + eg
        if ef == 0.0 and eg == 0.0:
            return 0.0
        if self._bounds is None:
            self._bounds = (_sup_bound(self.f), _sup_bound(self.g))
        bf, bg = self._bounds
        return ef * bg + eg * bf + ef * eg

    @property
    def is_step_like(self):
        return self.f.is_step_like and (self.g is None or self.g.is_step_like)

    @property
    def has_hidden_atoms(self):
        return self.f.has_hidden_atoms or (self.g is not None and self.g.has_hidden_atoms)


def _combine_steps(op, f: StepFn, g: StepFn | None, alpha):
    if g is None:
        vals = alpha * f.values if op == "scale" else np.conj(f.values)
        return StepFn(f.cells, vals, f.domain, f.tags)
    if f.domain.is_finite:
        pts = f.domain.point_set
        vals = f.evaluate(pts) + g.evaluate(pts) if op == "add" else f.evaluate(pts) * g.evaluate(pts)
        cells = [Cell(p, q, True, False) for p, q in zip(pts, pts[1:])] + [Cell.singleton(pts[-1])]
        return StepFn(cells, vals, f.domain).normalized()
    nodes = np.unique(np.concatenate([f._lo, f._hi, g._lo, g._hi]))
    cells = []
    for i, p in enumerate(nodes):
        cells.append(Cell.singleton(p))
        if i + 1 < len(nodes):
            cells.append(Cell(p, nodes[i + 1], False, False))
    probe = np.array([(c.lo + c.hi) / 2 for c in cells])
    fv, gv = f.evaluate(probe), g.evaluate(probe)
    vals = fv + gv if op == "add" else fv * gv
    return StepFn(cells, vals, f.domain).normalized()


def combine(op: str, f: RegulatedFn, g: RegulatedFn | None = None, alpha=None) -> RegulatedFn:
    """Pointwise algebra: ``add``, ``mul`` (binary), ``scale`` by ``alpha`` and ``conj``."""
    if op in _BINARY:
        if g is None:
            raise ArgumentError(f"{op} needs two operands")
        if f.domain != g.domain:
            raise ArgumentError(f"mismatched domains {f.domain!r} and {g.domain!r}")
    elif op in _UNARY:
        if g is not None:
            raise ArgumentError(f"{op} takes one operand")
        if op == "scale":
            if alpha is None:
                raise ArgumentError("scale needs alpha")
            alpha = complex(alpha)
    else:
        raise ArgumentError(f"unknown operation {op!r}")
    if isinstance(f, StepFn) and (g is None or isinstance(g, StepFn)):
        return _combine_steps(op, f, g, alpha)
    return Combination(op, f, g, alpha)


# ---------------------------------------------------------------------------
# analysis


def evaluate(f: RegulatedFn, x):
    return f(x)


def side_limits(f: RegulatedFn, x: float):
    return f.side_limits(x)


def discontinuities(f: RegulatedFn, level: int = DEFAULT_REVEAL_LEVEL) -> DiscontinuityReport:
    """Jump and removable discontinuities among the breaks revealed by ``level``."""
    if level < 0:
        raise ArgumentError("level must be nonnegative")
    out = []
    for br in f.breakpoints(level):
        scale = max(abs(br.left), abs(br.right), abs(br.value))
        if not _close(br.left, br.right, scale):
            out.append(Discontinuity(br.x, "jump", br.left, br.right, br.value))
        elif not _close(br.value, br.left, scale):
            out.append(Discontinuity(br.x, "removable", br.left, br.right, br.value))
    return DiscontinuityReport(tuple(out))


def _probe_points(f: RegulatedFn, g: RegulatedFn, samples: int):
    xs = [f.domain.sample(samples)]
    bx = sorted({br.x for br in f.breakpoints()} | {br.x for br in g.breakpoints()})
    if bx:
        b = np.asarray(bx)
        xs.append(b)
        if f.domain.is_interval:
            nodes = np.unique(np.concatenate([[f.domain.lo], b, [f.domain.hi]]))
            xs.append((nodes[:-1] + nodes[1:]) / 2)
    return np.unique(np.concatenate(xs)), bx


def sup_norm_gap(f: RegulatedFn, g: RegulatedFn, samples: int = 10_000) -> float:
    """Sampled lower estimate of ``||f - g||_inf``.

    Uses a nested sample of K, every breakpoint of either function, the
    midpoints between breakpoints and both one-sided limits at each
    breakpoint, so it is exact when both functions are piecewise constant.
    """
    if samples < 2:
        raise ArgumentError("samples must be at least 2")
    if f.domain != g.domain:
        raise ArgumentError(f"mismatched domains {f.domain!r} and {g.domain!r}")
    pts, bx = _probe_points(f, g, samples)
    gap = float(np.max(np.abs(f.evaluate(pts) - g.evaluate(pts))))
    if f.domain.is_interval and bx:
        fl, fr = f.side_limits_at(bx)
        gl, gr = g.side_limits_at(bx)
        gap = max(gap, float(np.max(np.abs(fl - gl))), float(np.max(np.abs(fr - gr))))
    return gap


# ---------------------------------------------------------------------------
# step approximation


def _approx_finite(f: RegulatedFn, points: np.ndarray, eps: float, theta: float):
    vals = f.evaluate(points)
    cells, out, tags = [], [], []
    i, n = 0, len(points)
    while i < n:
        j = i + 1
        while j < n and abs(vals[j] - vals[i]) <= theta * eps:
            j += 1
        if j < n:
            cells.append(Cell(points[i], points[j], True, False))
        else:
            cells.append(Cell(points[i], points[-1], True, True))
        out.append(vals[i])
        tags.append(points[i])
        i = j
    return StepFn(cells, out, Domain.points(points), tags)


_NSAMP = 33


def _approx_interval(f: RegulatedFn, eps: float, theta: float, level):
    a, b = f.domain.lo, f.domain.hi
    breaks = {br.x: br for br in f.breakpoints(level)}
    nodes = sorted(set([a, b]) | set(breaks))
    cells, vals, tags = [], [], []
    todo = []  # (l, r, u, v, lo_closed_at_u, hi_closed_at_v, left_value_at_u, right_value_at_v)
    for i, u in enumerate(nodes):
        if u in breaks:
            cells.append(Cell.singleton(u))
            vals.append(breaks[u].value)
            tags.append(u)
        if i + 1 == len(nodes):
            break
        v = nodes[i + 1]
        ulim = breaks[u].right if u in breaks else complex(f(u))
        vlim = breaks[v].left if v in breaks else complex(f(v))
        todo.append((u, v, u, v, u not in breaks, v == b and v not in breaks, ulim, vlim))
    grid = np.linspace(0.0, 1.0, _NSAMP)
    depth = 0
    while todo:
        if len(cells) + len(todo) > MAX_CELLS or depth > 48:
            raise ConvergenceError(f"step approximation to eps={eps} needs too many cells")
        L = np.array([t[0] for t in todo])
        R = np.array([t[1] for t in todo])
        xs = L[:, None] + (R - L)[:, None] * grid[None, :]
        xs[:, 0], xs[:, -1] = L, R
        mids = (L + R) / 2
        inner = f.evaluate(np.concatenate([xs[:, 1:-1].ravel(), mids]))
        samp = np.empty(xs.shape, dtype=complex)
        samp[:, 1:-1] = inner[: xs[:, 1:-1].size].reshape(len(todo), _NSAMP - 2)
        mval = inner[xs[:, 1:-1].size:]
        ends = [e for t in todo for e in (t[0], t[1])]
        end_vals = f.evaluate(np.array(ends)).reshape(len(todo), 2)
        for k, t in enumerate(todo):
            samp[k, 0] = t[6] if t[0] == t[2] else end_vals[k, 0]
            samp[k, -1] = t[7] if t[1] == t[3] else end_vals[k, 1]
        dev = np.max(np.abs(samp - mval[:, None]), axis=1)
        nxt = []
        for k, t in enumerate(todo):
            l, r, u, v, ucl, vcl, ulim, vlim = t
            if dev[k] <= theta * eps:
                lo_closed = ucl if l == u else True
                hi_closed = vcl if r == v else False
                cells.append(Cell(l, r, lo_closed, hi_closed))
                vals.append(mval[k])
                tags.append(mids[k])
            else:
                m = mids[k]
                if not (l < m < r):
                    raise ConvergenceError(f"modulus bound not met near {l!r} at eps={eps}")
                nxt.append((l, m, u, v, ucl, vcl, ulim, vlim))
                nxt.append((m, r, u, v, ucl, vcl, ulim, vlim))
        todo = nxt
        depth += 1
    return StepFn(cells, vals, f.domain, tags)


def approximate_by_steps(f: RegulatedFn, eps: float, domain: Domain | None = None,
                         samples: int = 10_000) -> StepFn:
    """A step function within ``eps`` of ``f`` in the sampled sup norm.

    On an interval the continuity intervals are bisected until the sampled
    oscillation about the midpoint value is small, with singleton cells at
    every breakpoint.  On a finite ``domain`` (a subset of ``f.domain``)
    neighbouring points with close values are grouped into one cell.
    """
    if not eps > 0:
        raise ArgumentError("eps must be positive")
    if domain is None:
        domain = f.domain
    elif not domain.issubset(f.domain):
        raise ArgumentError(f"{domain!r} is not inside {f.domain!r}")
    if isinstance(f, StepFn) and domain == f.domain:
        return f
    if domain.is_finite:
        pts = domain.point_set
        return _approx_finite(f, pts, eps, 0.5)
    if domain != f.domain:
        raise ArgumentError("restriction is only supported to finite subsets")
    level = None
    if f.has_hidden_atoms:
        level = 1
        while f.envelope(level) >= eps / 2:
            level += 1
            if level > 1_000_000:
                raise ConvergenceError("atom envelope does not decay fast enough")
    budget = eps if level is None else eps - f.envelope(level)
    theta = 0.75
    for _ in range(5):
        s = _approx_interval(f, budget, theta, level)
        if sup_norm_gap(f, s, samples) < eps:
            return s
        theta /= 4
    raise ConvergenceError(f"could not certify a step approximation within eps={eps}")


# ---------------------------------------------------------------------------
# constructors


def _dom(domain) -> Domain:
    if isinstance(domain, Domain):
        return domain
    return Domain.interval(*domain)


def constant(c, domain=(0.0, 1.0)) -> StepFn:
    d = _dom(domain)
    if d.is_finite:
        pts = d.point_set
        cells = [Cell(p, q, True, False) for p, q in zip(pts, pts[1:])] + [Cell.singleton(pts[-1])]
        return StepFn(cells, [c] * len(cells), d).normalized()
    return StepFn([Cell.closed(d.lo, d.hi)], [c], d)


def continuous(fn: Callable, domain=(0.0, 1.0)) -> Piecewise:
    return Piecewise(_dom(domain), [fn])


def identity(domain=(0.0, 1.0)) -> Piecewise:
    return continuous(lambda x: x, domain)


def heaviside(c: float, domain=(0.0, 1.0)) -> StepFn:
    """Right-continuous unit step at ``c``: 0 left of c, 1 from c on."""
    d = _dom(domain)
    if not d.contains(c):
        raise ArgumentError(f"jump point {c} outside {d!r}")
    return StepFn([cell for cell, _ in fill_cells(d, [(Cell(c, d.hi, True, True), 1.0)])],
                  [v for _, v in fill_cells(d, [(Cell(c, d.hi, True, True), 1.0)])], d)


def indicator(cell: Cell, domain=(0.0, 1.0)) -> StepFn:
    d = _dom(domain)
    if cell.lo < d.lo or cell.hi > d.hi:
        raise ArgumentError(f"{cell} is not inside {d!r}")
    pieces = fill_cells(d, [(cell, 1.0)])
    return StepFn([c for c, _ in pieces], [v for _, v in pieces], d)


def thomae_atoms(level: int, domain: Domain) -> list:
    """Reduced fractions p/q in K with q <= level, ordered by denominator."""
    out = []
    for q in range(2, level + 1):
        for p in range(1, q):
            if math.gcd(p, q) == 1:
                x = p / q
                if domain.contains(x):
                    out.append((x, 1.0 / q))
    return out


THOMAE_MAX_DENOMINATOR = 10_000
THOMAE_SNAP = 1e-12


def thomae_rule(x: float):
    """1/q when x is within 1e-12 of a reduced p/q with q <= 10**4, else 0."""
    fr = Fraction(x).limit_denominator(THOMAE_MAX_DENOMINATOR)
    if abs(x - fr.numerator / fr.denominator) <= THOMAE_SNAP and fr.denominator > 1:
        return 1.0 / fr.denominator
    return None


def thomae(level: int | None = None, domain=(0.01, 0.99)) -> AtomicPerturbation:
    """Thomae's function truncated to denominators ``<= level``.

    ``level=None`` gives the untruncated function, evaluated by rational
    recognition (see :func:`thomae_rule`).
    """
    d = _dom(domain)
    if not (0.0 < d.lo and d.hi < 1.0):
        raise ArgumentError("Thomae's function is only set up on compact subsets of (0, 1)")
    base = constant(0.0, d)
    return AtomicPerturbation(base, lambda n: thomae_atoms(n, d), lambda n: 1.0 / (n + 1),
                              level=level, rule=thomae_rule, name="thomae")


# ---------------------------------------------------------------------------
# JSON piecewise specs

_SAFE_FUNCS = {
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp, "log": np.log,
    "sqrt": np.sqrt, "abs": np.abs, "sinh": np.sinh, "cosh": np.cosh, "tanh": np.tanh,
    "arctan": np.arctan, "floor": np.floor,
}
_SAFE_CONSTS = {"pi": math.pi, "e": math.e, "j": 1j}


def compile_expr(src: str, extra: tuple = ()) -> Callable:
    """Compile an arithmetic expression in ``x`` into a vectorized callable.

    Names in ``extra`` become keyword arguments of the result (scalars such
    as a time variable).
    """
    import ast

    tree = ast.parse(src, mode="eval")
    allowed = (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Call, ast.Name, ast.Load,
               ast.Constant, ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd)
    for node in ast.walk(tree):
        if not isinstance(node, allowed):
            raise ArgumentError(f"disallowed syntax in expression {src!r}")
        if isinstance(node, ast.Name) and node.id != "x" and node.id not in extra \
                and node.id not in _SAFE_FUNCS \
                and node.id not in _SAFE_CONSTS:
            raise ArgumentError(f"unknown name {node.id!r} in expression {src!r}")
        if isinstance(node, ast.Call) and not (isinstance(node.func, ast.Name)
                                               and node.func.id in _SAFE_FUNCS):
            raise ArgumentError(f"disallowed call in expression {src!r}")
    code = compile(tree, "<expr>", "eval")
    env = {"__builtins__": {}, **_SAFE_FUNCS, **_SAFE_CONSTS}

    def fn(x, **scalars):
        x = np.asarray(x, dtype=float)
        local = {"x": x, **{k: float(v) for k, v in scalars.items() if k in extra}}
        return np.broadcast_to(np.asarray(eval(code, env, local), dtype=complex), x.shape)

    fn.__name__ = f"expr<{src}>"
    return fn


def _piece_from_spec(spec) -> Callable:
    if isinstance(spec, str):
        return compile_expr(spec)
    if "expr" in spec:
        return compile_expr(spec["expr"])
    if "const" in spec:
        c = _as_complex(spec["const"])
        return lambda x: np.full(np.shape(x), c)
    if "poly" in spec:
        coeffs = [_as_complex(c) for c in spec["poly"]]
        return lambda x: np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), coeffs)
    raise ArgumentError(f"unrecognized piece {spec!r}")


def piecewise(spec: dict) -> Piecewise:
    """Build from ``{"k": [a, b], "pieces": [...], "breaks": [{x, left, right, value}]}``."""
    try:
        a, b = spec["k"]
        pieces = [_piece_from_spec(p) for p in spec["pieces"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ArgumentError(f"malformed piecewise spec: {exc}") from exc
    return Piecewise((float(a), float(b)), pieces, spec.get("breaks", ()))


def load_piecewise(path) -> Piecewise:
    with open(path) as fh:
        return piecewise(json.load(fh))


def construct(kind: str, *args, **kwargs) -> RegulatedFn:
    """Dispatch to a named constructor: heaviside, indicator, thomae, piecewise."""
    table = {"heaviside": heaviside, "indicator": indicator, "thomae": thomae,
             "piecewise": piecewise, "constant": constant, "identity": identity,
             "continuous": continuous}
    try:
        return table[kind](*args, **kwargs)
    except KeyError:
        raise ArgumentError(f"unknown kind {kind!r}") from None
