"""Truncated integrals against measures on the whole real line.

A measure is either atomic, given by a restartable enumeration of
``(lambda_k, w_k)`` ordered by ``|lambda_k|``, or absolutely continuous with
a density.  Integrals over ``[-n, n]`` are exact sums or adaptive Simpson
quadrature; the limit ``n -> inf`` is accepted once the remaining mass of
``|f|^2`` certifies the Cauchy bound.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .errors import ArgumentError, ConvergenceError, DivergenceSuspected

QUAD_RTOL = 1e-8
MAX_PANELS = 1 << 20
DEFAULT_N_MAX = 1_000_000
DEFAULT_L_MAX = 1e8
# successive dyadic blocks must shrink at least this fast for a tail estimate
RATIO_LIMIT = 0.9
FIRST_BLOCK = 64


class AtomicModel:
    """Atoms ``(lambda_k, w_k)``, ``w_k >= 0``, enumerated by increasing ``|lambda_k|``.

    ``source`` is either a finite sequence of pairs or a zero-argument
    callable returning a fresh iterator, so enumeration can restart.
    """

    def __init__(self, source):
        if callable(source):
            self._factory = source
            self._finite = None
        else:
            pairs = sorted(((float(l), float(w)) for l, w in source), key=lambda p: abs(p[0]))
            if any(w < 0 for _, w in pairs):
                raise ArgumentError("atomic weights must be nonnegative")
            self._finite = pairs
            self._factory = lambda: iter(pairs)

    def atoms(self):
        last = 0.0
        for lam, w in self._factory():
            lam, w = float(lam), float(w)
            if w < 0:
                raise ArgumentError("atomic weights must be nonnegative")
            if abs(lam) < last:
                raise ArgumentError("atoms must be ordered by |lambda|")
            last = abs(lam)
            yield lam, w

    def take(self, count: int):
        pairs = list(itertools.islice(self.atoms(), count))
        if not pairs:
            return np.array([]), np.array([])
        lam, w = zip(*pairs)
        return np.array(lam), np.array(w)

    def __repr__(self):
        n = "infinite" if self._finite is None else len(self._finite)
        return f"AtomicModel({n} atoms)"


def geometric_atoms(ratio: float = 0.5, start: int = 1) -> AtomicModel:
    """Atoms ``w_k = ratio**k`` at ``lambda_k = k``."""
    return AtomicModel(lambda: ((k, ratio ** k) for k in itertools.count(start)))


def power_atoms(power: float = 2.0, start: int = 1) -> AtomicModel:
    """Atoms ``w_k = k**-power`` at ``lambda_k = k``."""
    return AtomicModel(lambda: ((k, float(k) ** -power) for k in itertools.count(start)))


def load_atoms_csv(path) -> AtomicModel:
    """Rows ``lambda,weight``; a header row is skipped if present."""
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            try:
                rows.append((float(parts[0]), float(parts[1])))
            except (ValueError, IndexError):
                if rows:
                    raise ArgumentError(f"bad atom row {line!r}") from None
    return AtomicModel(rows)


class DensityModel:
    """``d mu = rho(x) dx`` on the real line."""

    def __init__(self, rho: Callable):
        self.rho = rho

    def __repr__(self):
        return "DensityModel()"


# ---------------------------------------------------------------------------
# quadrature


def _simpson(h: Callable, a: float, b: float, panels: int):
    x = np.linspace(a, b, panels + 1)
    # endpoint samples one ulp inside, i.e. one-sided limits at jumps on the cuts
    x[0], x[-1] = np.nextafter(a, b), np.nextafter(b, a)
    y = np.asarray(h(x), dtype=complex)
    w = np.ones(panels + 1)
    w[1:-1:2], w[2:-1:2] = 4.0, 2.0
    step = (b - a) / panels
    return complex(np.dot(w, y) * step / 3), float(np.dot(w, np.abs(y)) * step / 3)


def simpson(h: Callable, a: float, b: float, rtol: float = QUAD_RTOL, panels: int = 16):
    """Composite Simpson on ``[a, b]`` doubling the panel count until two
    successive values agree to ``rtol`` (relative to the integral of |h|)."""
    if a == b:
        return 0j
    prev, _ = _simpson(h, a, b, panels)
    while panels < MAX_PANELS:
        panels *= 2
        cur, mag = _simpson(h, a, b, panels)
        if abs(cur - prev) <= rtol * max(abs(cur), mag) or mag == 0.0:
            return cur
        prev = cur
    raise ConvergenceError(f"Simpson quadrature on [{a}, {b}] did not settle")


def _annuli(lo: float, hi: float):
    """Split ``[lo, hi)`` (0 <= lo) at powers of two so scales stay comparable."""
    cuts = [lo]
    edge = max(1.0, 2.0 ** math.ceil(math.log2(lo)) if lo > 0 else 1.0)
    while edge < hi:
        if edge > cuts[-1]:
            cuts.append(edge)
        edge *= 2
    cuts.append(hi)
    return list(zip(cuts, cuts[1:]))


def _symmetric_integral(h: Callable, lo: float, hi: float, rtol: float = QUAD_RTOL) -> complex:
    """``int_{lo <= |x| <= hi} h``."""
    total = 0j
    for a, b in _annuli(lo, hi):
        total += simpson(h, a, b, rtol) + simpson(h, -b, -a, rtol)
    return total


def _density_integrand(f: Callable, mu: DensityModel):
    return lambda x: np.asarray(f(x), dtype=complex) * np.asarray(mu.rho(x), dtype=float)


def _real_if_exact(z: complex):
    return z.real if z.imag == 0 else z


def truncated_integral(f: Callable, mu, n: float):
    """``int_{[-n, n]} f dmu``; real when ``f`` is real on the truncation."""
    if not n >= 1:
        raise ArgumentError("truncation radius must be at least 1")
    if isinstance(mu, AtomicModel):
        total = 0j
        lam_chunk, w_chunk = [], []
        for lam, w in mu.atoms():
            if abs(lam) > n:
                break
            lam_chunk.append(lam)
            w_chunk.append(w)
        if lam_chunk:
            total = complex(np.sum(np.asarray(f(np.array(lam_chunk)), dtype=complex)
                                   * np.array(w_chunk)))
        return _real_if_exact(total)
    if isinstance(mu, DensityModel):
        return _real_if_exact(complex(_symmetric_integral(_density_integrand(f, mu), 0.0, float(n))))
    raise ArgumentError(f"unsupported model {mu!r}")


# ---------------------------------------------------------------------------
# Cauchy certificates


@dataclass(frozen=True)
class CertifiedLimit:
    value: complex
    radius: float            # N: every truncation beyond it is within eps of the limit
    tail_bound: float        # estimate of int_{|lambda| > N} |f|^2 dmu times ||y||^2
    partial_sums: tuple = field(default=())


@dataclass(frozen=True)
class DomainVerdict:
    member: bool
    partial_sums: tuple
    bound_used: float
    value: float = math.nan
    radii: tuple = ()


def _tail_beyond(blocks: list) -> float | None:
    """Estimated mass past the last dyadic block, or None if blocks are not
    shrinking geometrically."""
    if len(blocks) < 3:
        return None
    b1, b2, b3 = blocks[-3:]
    if b3 == 0.0 and b2 == 0.0:
        return 0.0
    if b1 <= 0 or b2 <= 0:
        return None if b3 > 0 else 0.0
    r = max(b2 / b1, b3 / b2)
    if r >= RATIO_LIMIT:
        return None
    return b3 * r / (1 - r)


def _atomic_blocks(f, mu: AtomicModel, n_max: int):
    """Yield ``(lam, f_vals, weights, complete)`` for dyadic blocks of atoms;
    ``complete`` is False once the enumeration has run out."""
    it = mu.atoms()
    size, seen = FIRST_BLOCK, 0
    while seen < n_max:
        want = min(size, n_max - seen)
        chunk = list(itertools.islice(it, want))
        lam = np.array([c[0] for c in chunk], dtype=float)
        w = np.array([c[1] for c in chunk], dtype=float)
        fv = np.asarray(f(lam), dtype=complex) if len(chunk) else np.array([], dtype=complex)
        yield lam, fv, w, len(chunk) == want
        if len(chunk) < want:
            return
        seen += len(chunk)
        size = seen  # doubles the horizon each time


def _certify_atomic(f, mu: AtomicModel, eps: float, n_max: int, y_norm: float,
                    tail_of: Callable | None):
    lam_all, val_all, tail_all = [], [], []
    blocks, partial, radii = [], [], []
    total = 0j
    for lam, fv, w, complete in _atomic_blocks(f, mu, n_max):
        sq = (np.abs(fv) ** 2 if tail_of is None else np.abs(tail_of(lam))) * w
        lam_all.append(lam)
        val_all.append(fv * w)
        tail_all.append(sq)
        blocks.append(float(np.sum(sq)))
        total += complex(np.sum(fv * w))
        partial.append(total)
        radii.append(float(np.max(np.abs(lam))) if len(lam) else (radii[-1] if radii else 0.0))
        # a finished enumeration has nothing beyond its last atom
        beyond = 0.0 if not complete else _tail_beyond(blocks)
        if beyond is not None:
            res = _finish_atomic(lam_all, val_all, tail_all, beyond, eps, y_norm, partial)
            if res is not None:
                return res
    raise DivergenceSuspected(
        f"no certificate within {n_max} atoms; tail of |f|^2 does not appear summable",
        partial_sums=[p.real if p.imag == 0 else p for p in partial], radii=radii)


def _finish_atomic(lam_all, val_all, tail_all, beyond, eps, y_norm, partial):
    lam = np.concatenate(lam_all) if lam_all else np.array([])
    vals = np.concatenate(val_all) if val_all else np.array([])
    sq = np.concatenate(tail_all) if tail_all else np.array([])
    # tail[i] = mass of |f|^2 strictly beyond atom i
    tail = np.concatenate([np.cumsum(sq[::-1])[::-1][1:], [0.0]]) + beyond
    # a truncation radius must not split atoms of equal |lambda|
    absl = np.abs(lam)
    ok = (tail * y_norm ** 2 < eps ** 2) & np.append(absl[1:] > absl[:-1], True)
    if not ok.any():
        return None
    i = int(np.argmax(ok))
    radius = float(absl[i]) if len(absl) else 1.0
    return CertifiedLimit(complex(np.sum(vals)), max(radius, 1.0),
                          float(tail[i] * y_norm ** 2), tuple(partial))


def _certify_density(f, mu: DensityModel, eps: float, L_max: float, y_norm: float,
                     tail_of: Callable | None):
    h = _density_integrand(f, mu)
    sq_fn = tail_of if tail_of is not None else (lambda x: np.abs(np.asarray(f(x))) ** 2)
    sq = lambda x: np.abs(np.asarray(sq_fn(x))) * np.asarray(mu.rho(x), dtype=float)
    value = _symmetric_integral(h, 0.0, 1.0)
    blocks, radii, values = [], [1.0], [value]
    L = 1.0
    while L < L_max:
        value += _symmetric_integral(h, L, 2 * L)
        blocks.append(float(_symmetric_integral(sq, L, 2 * L).real))
        L *= 2
        radii.append(L)
        values.append(value)
        beyond = _tail_beyond(blocks)
        if beyond is None:
            continue
        # tails[i] = mass beyond radii[i]
        cum = np.concatenate([np.cumsum(blocks[::-1])[::-1], [0.0]]) + beyond
        ok = cum * y_norm ** 2 < eps ** 2
        if ok.any():
            i = int(np.argmax(ok))
            return CertifiedLimit(value, radii[i], float(cum[i] * y_norm ** 2), tuple(values))
    raise DivergenceSuspected(
        f"no certificate up to radius {L_max:g}; tail of |f|^2 does not appear integrable",
        partial_sums=[v.real if v.imag == 0 else v for v in values], radii=radii)


def limit_integral(f: Callable, mu, eps: float, n_max: float | None = None,
                   y_norm: float = 1.0) -> CertifiedLimit:
    """``lim_n int_{[-n, n]} f dmu`` with a Cauchy certificate.

    The certified radius N satisfies ``int_{|lambda| > N} |f|^2 dmu * ||y||^2 < eps^2``.
    For atomic models the tail is summed exactly up to the enumeration
    horizon (at most ``n_max`` atoms, default 10**6); the mass beyond the
    horizon, and all tails of density models (out to radius ``n_max``,
    default 1e8), are estimated from dyadic blocks that must shrink
    geometrically.  Failure raises :class:`DivergenceSuspected`.
    """
    if not eps > 0:
        raise ArgumentError("eps must be positive")
    if isinstance(mu, AtomicModel):
        return _certify_atomic(f, mu, eps, int(n_max or DEFAULT_N_MAX), y_norm, None)
    if isinstance(mu, DensityModel):
        return _certify_density(f, mu, eps, float(n_max or DEFAULT_L_MAX), y_norm, None)
    raise ArgumentError(f"unsupported model {mu!r}")


def domain_member(f: Callable, mu_xx, eps: float = 1e-6, n_max: float | None = None) -> DomainVerdict:
    """Is ``int |f|^2 dmu_{x,x}`` finite?  Divergence is a verdict, not an error.

    The integrand ``|f|^2`` is nonnegative, so its own tail bounds the
    distance of every truncation from the limit; certification asks that
    tail to drop below ``eps``.
    """
    sq = lambda x: np.abs(np.asarray(f(x), dtype=complex)) ** 2
    # certificate: tail of sq itself below eps, i.e. sqrt-tail below sqrt(eps)
    root_eps = math.sqrt(eps)
    try:
        if isinstance(mu_xx, AtomicModel):
            res = _certify_atomic(sq, mu_xx, root_eps, int(n_max or DEFAULT_N_MAX), 1.0, sq)
        elif isinstance(mu_xx, DensityModel):
            res = _certify_density(sq, mu_xx, root_eps, float(n_max or DEFAULT_L_MAX), 1.0, sq)
        else:
            raise ArgumentError(f"unsupported model {mu_xx!r}")
    except DivergenceSuspected as exc:
        return DomainVerdict(False, tuple(float(np.real(p)) for p in exc.partial_sums), eps,
                             radii=tuple(exc.radii))
    return DomainVerdict(True, tuple(float(np.real(p)) for p in res.partial_sums),
                         res.tail_bound, float(res.value.real))


def position_expectation(psi_density: Callable, L: float) -> float:
    """``int_{-L}^{L} x |psi(x)|^2 dx`` given the density ``|psi|^2``."""
    if not L > 0:
        raise ArgumentError("L must be positive")
    h = lambda x: x * np.asarray(psi_density(x), dtype=float)
    return float(_symmetric_integral(h, 0.0, float(L)).real)
