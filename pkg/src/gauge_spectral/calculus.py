"""The bounded functional calculus built from gauge integrals.

``f(A)`` is assembled entry by entry from the sesquilinear form
``<f(A) e_j, e_i> = I_{e_j, e_i}(f)``, where each integral is taken against
the scalar measure ``mu_{e_j, e_i}`` of the model's projection-valued
measure.  :func:`direct_apply` computes ``sum f(lambda) P_lambda`` instead
and serves as an independent oracle.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ._domain import Domain
from .errors import ArgumentError, DomainError, NumericalError
from .gauge import build_fine_partition, canonical_step_gauge, TaggedPartition
from .regulated import (RegulatedFn, StepFn, approximate_by_steps, combine, constant,
                        sup_norm_gap)
from .spectral_core import DiscretePVM, GridPVM, ScalarMeasure, SpectralMeasure

DEFAULT_EPS = 1e-10
POWER_RTOL = 1e-10
POWER_MAX_ITER = 10_000


@dataclass(frozen=True)
class HKIntegralResult:
    value: complex
    gauge_used: str
    partition_size: int
    tail_estimate: float


def _check_support(domain: Domain, mu: ScalarMeasure):
    if len(mu.points) and not np.all(domain.contains(mu.points)):
        bad = mu.points[~domain.contains(mu.points)][0]
        raise DomainError(f"measure has an atom at {bad!r} outside {domain!r}")


def hk_sum(f: RegulatedFn, mu: ScalarMeasure, P: TaggedPartition) -> complex:
    """``sum_i f(t_i) mu(C_i)`` over the tagged partition."""
    for _, c in P.items:
        if c.lo < f.domain.lo or c.hi > f.domain.hi:
            raise DomainError(f"cell {c} lies outside {f.domain!r}")
    _check_support(P.domain, mu)
    values = f.evaluate(P.tags)
    return complex(np.sum(values * mu.masses(P.cells)))


def integrate_step(s: StepFn, mu: ScalarMeasure, partition: bool = True) -> HKIntegralResult:
    """Exact ``sum_i c_i mu(C_i)``.

    ``partition_size`` reports the size of the fine partition the canonical
    gauge of ``s`` produces; pass ``partition=False`` to skip building it.
    """
    _check_support(s.domain, mu)
    # each atom falls in exactly one cell, so this is sum_i c_i mu(C_i)
    value = complex(np.sum(s.values[s.cell_index(mu.points)] * mu.weights)) if len(mu.points) else 0j
    if not partition:
        return HKIntegralResult(value, "canonical step gauge", 0, 0.0)
    gauge = canonical_step_gauge(s)
    size = len(build_fine_partition(s.domain, gauge))
    return HKIntegralResult(value, gauge.description, size, 0.0)


def _support_domain(mu: ScalarMeasure) -> Domain | None:
    return Domain.points(mu.points) if len(mu.points) else None


def integrate_regulated(f: RegulatedFn, mu: ScalarMeasure, eps: float = DEFAULT_EPS,
                        partition: bool = True) -> HKIntegralResult:
    """Integral of ``f`` against ``mu`` through a uniform step approximation.

    The step function is built on the (finite) support of ``mu`` with
    tolerance ``eps'`` such that ``eps' * |mu|(K) < eps``; the tail estimate
    is that product.
    """
    if not eps > 0:
        raise ArgumentError("eps must be positive")
    if isinstance(f, StepFn):
        return integrate_step(f, mu, partition)
    support = _support_domain(mu)
    if support is None:
        return HKIntegralResult(0j, "none (zero measure)", 0, 0.0)
    _check_support(f.domain, mu)
    tv = mu.total_variation
    eps_step = eps / (2 * tv) if tv > 0 else eps
    s = approximate_by_steps(f, eps_step, domain=support)
    res = integrate_step(s, mu, partition)
    return HKIntegralResult(res.value, res.gauge_used, res.partition_size, eps_step * tv)


def apply_calculus(f: RegulatedFn, E: SpectralMeasure, eps: float = DEFAULT_EPS) -> np.ndarray:
    """``f(A)`` with ``M[i, j] = I_{e_j, e_i}(f)``; on a grid, ``diag f(x_j)``."""
    if not eps > 0:
        raise ArgumentError("eps must be positive")
    if isinstance(E, GridPVM):
        return np.diag(f.evaluate(E.points))
    if not isinstance(E, DiscretePVM):
        raise ArgumentError(f"unsupported spectral measure {E!r}")
    if isinstance(f, StepFn):
        s = f
    else:
        # |mu_{e_j, e_i}| <= 1, so one approximation serves every pair
        s = approximate_by_steps(f, eps / 2, domain=E.support)
    _check_support(s.domain, ScalarMeasure(E.points, np.ones(len(E.points))))
    n = E.dimension
    M = np.empty((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            # mu_{e_j, e_i}(B) = <E(B) e_j, e_i> = sum over atoms in B of P[i, j]
            mu = ScalarMeasure(E.points, E.projections[:, i, j])
            M[i, j] = integrate_step(s, mu, partition=False).value
    return M


def direct_apply(f: RegulatedFn, E: SpectralMeasure) -> np.ndarray:
    """``sum_lambda f(lambda) P_lambda`` (grid: ``diag f(x_j)``)."""
    values = f.evaluate(E.points)
    if isinstance(E, GridPVM):
        return np.diag(values)
    return np.einsum("k,kij->ij", values, E.projections)


def operator_norm(M, weight=None) -> float:
    """Largest singular value by power iteration on ``M^H M``.

    The iteration is accelerated by repeated squaring: after k steps the
    normalized matrix is ``(M^H M)^(2^k)``, whose dominant column gives the
    top right singular vector.  ``weight`` is the grid weight (scalar or per
    coordinate) of a weighted inner product.
    """
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ArgumentError("operator_norm needs a square matrix")
    if weight is not None:
        w = np.broadcast_to(np.asarray(weight, dtype=float), (M.shape[0],))
        if np.any(w <= 0):
            raise ArgumentError("weights must be positive")
        r = np.sqrt(w)
        M = (r[:, None] * M) / r[None, :]
    B = M.conj().T @ M
    top = float(np.max(np.abs(B))) if B.size else 0.0
    if top == 0.0:
        return 0.0
    C = B / top
    prev = None
    for _ in range(POWER_MAX_ITER):
        col = int(np.argmax(np.linalg.norm(C, axis=0)))
        v = C[:, col] / np.linalg.norm(C[:, col])
        rho = float(np.real(np.vdot(v, B @ v)))
        if prev is not None and abs(rho - prev) <= POWER_RTOL * rho:
            resid = np.linalg.norm(B @ v - rho * v)
            if resid <= np.sqrt(POWER_RTOL) * rho or abs(rho - prev) == 0.0:
                return float(np.sqrt(rho))
        prev = rho
        C = C @ C
        norm = np.linalg.norm(C)
        if not np.isfinite(norm) or norm == 0.0:
            raise NumericalError("power iteration degenerated")
        C /= norm
    raise NumericalError("power iteration did not converge")


def _weight(E: SpectralMeasure):
    return E.dx if isinstance(E, GridPVM) else None


@dataclass(frozen=True)
class HomomorphismReport:
    linearity: float
    multiplicativity: float
    adjoint: float
    unit: float

    def max(self) -> float:
        return max(self.linearity, self.multiplicativity, self.adjoint, self.unit)

    def as_dict(self) -> dict:
        return asdict(self)


def homomorphism_report(E: SpectralMeasure, f: RegulatedFn, g: RegulatedFn,
                        alpha: complex = 1.0, beta: complex = 1.0,
                        eps: float = DEFAULT_EPS) -> HomomorphismReport:
    """Residual norms of the four *-homomorphism identities."""
    w = _weight(E)
    n = E.dimension
    fA, gA = apply_calculus(f, E, eps), apply_calculus(g, E, eps)
    lin = apply_calculus(combine("add", combine("scale", f, alpha=alpha),
                                 combine("scale", g, alpha=beta)), E, eps)
    mul = apply_calculus(combine("mul", f, g), E, eps)
    adj = apply_calculus(combine("conj", f), E, eps)
    one = apply_calculus(constant(1.0, f.domain), E, eps)
    return HomomorphismReport(
        linearity=operator_norm(lin - alpha * fA - beta * gA, w),
        multiplicativity=operator_norm(mul - fA @ gA, w),
        adjoint=operator_norm(adj - fA.conj().T, w),
        unit=operator_norm(one - np.eye(n), w),
    )


def lipschitz_gap(f: RegulatedFn, g: RegulatedFn, E: SpectralMeasure,
                  eps: float = DEFAULT_EPS, samples: int = 10_000) -> tuple:
    """``(||(f - g)(A)||_op, ||f - g||_inf)``, the sup norm as a sampled estimate
    that also includes every spectral point."""
    diff = combine("add", f, combine("scale", g, alpha=-1.0))
    lhs = operator_norm(apply_calculus(diff, E, eps), _weight(E))
    rhs = sup_norm_gap(f, g, samples)
    rhs = max(rhs, float(np.max(np.abs(diff.evaluate(E.points)))))
    return lhs, rhs
