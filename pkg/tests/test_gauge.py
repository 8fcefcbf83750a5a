import numpy as np
import pytest
from hypothesis import given, strategies as st

from gauge_spectral import regulated as R
from gauge_spectral._domain import Cell, Domain
from gauge_spectral.errors import ArgumentError
from gauge_spectral.gauge import (Gauge, TaggedPartition, build_fine_partition,
                                  canonical_step_gauge, is_fine, refine)
from gauge_spectral.rng import random_fine_partition, random_step

HALVES = R.StepFn([Cell(0, 0.5, True, False), Cell(0.5, 1, True, True)], [1, 2])


def test_canonical_gauge_interior_value():
    assert canonical_step_gauge(HALVES)(0.25) == pytest.approx(0.125)


def test_singleton_gauge_on_grid():
    K = Domain.points(np.round(np.linspace(0, 1, 11), 12))
    s = R.StepFn([Cell(0, 0.5, True, False), Cell.singleton(0.5), Cell(0.5, 1, False, True)],
                 [0, 1, 0], K)
    assert canonical_step_gauge(s)(0.5) == pytest.approx(0.05)


def test_canonical_gauge_positive(rng):
    for _ in range(5):
        s = random_step(rng, (-1, 1))
        assert np.all(canonical_step_gauge(s)(rng.uniform(-1, 1, 1000)) > 0)


def test_is_fine_examples():
    P = TaggedPartition(((0.5, Cell.closed(0, 1)),), Domain.interval(0, 1))
    assert is_fine(P, Gauge.constant(1.0))
    assert not is_fine(P, Gauge.constant(0.4))


def test_tag_must_lie_in_cell():
    with pytest.raises(ArgumentError):
        TaggedPartition(((2.0, Cell.closed(0, 1)),), Domain.interval(0, 1))


def test_constant_gauge_sweep():
    P = build_fine_partition((0, 1), Gauge.constant(0.3))
    # each step advances 0.9 * 0.3 = 0.27
    assert len(P) == 4
    assert is_fine(P, Gauge.constant(0.3))


def test_singleton_domain():
    P = build_fine_partition(Domain.points([0.7]), Gauge.constant(0.1))
    assert P.items == ((0.7, Cell.singleton(0.7)),)


def test_exceptional_points_become_singletons():
    P = build_fine_partition((0, 1), Gauge.constant(0.2), exceptional=[0.33])
    assert (0.33, Cell.singleton(0.33)) in P.items
    assert is_fine(P, Gauge.constant(0.2))


def _contained_in_step_cells(P, s):
    for t, c in P.items:
        j = s.cell_index(t)[0]
        if not c.is_subset_of(s.cells[j]):
            return False
    return True


def test_step_gauge_forces_containment():
    gamma = canonical_step_gauge(HALVES)
    P = build_fine_partition(HALVES.domain, gamma)
    assert is_fine(P, gamma)
    assert _contained_in_step_cells(P, HALVES)


def test_containment_random_steps(rng):
    for _ in range(20):
        s = random_step(rng, (-2, 3))
        gamma = canonical_step_gauge(s)
        P = build_fine_partition(s.domain, gamma)
        assert is_fine(P, gamma) and _contained_in_step_cells(P, s)
        Q = random_fine_partition(rng, s)
        assert is_fine(Q, gamma) and _contained_in_step_cells(Q, s)


def test_containment_with_heaviside_and_thomae():
    for s in (R.heaviside(0.5), R.approximate_by_steps(R.thomae(6), 0.1)):
        gamma = canonical_step_gauge(s)
        P = build_fine_partition(s.domain, gamma)
        assert is_fine(P, gamma) and _contained_in_step_cells(P, s)


@given(st.lists(st.floats(0.01, 0.99), max_size=5, unique=True),
       st.lists(st.floats(0.02, 0.5), min_size=6, max_size=6),
       st.lists(st.floats(0.0, 1.0), max_size=3))
def test_round_trip_piecewise_constant_gauges(edges, values, exceptional):
    edges = sorted(edges)
    gamma = Gauge.piecewise_constant(edges, values[: len(edges) + 1])
    P = build_fine_partition((0, 1), gamma, exceptional)
    assert is_fine(P, gamma)


@given(st.floats(0.05, 0.5), st.data())
def test_refinement_preserves_fineness(c, data):
    gamma = Gauge.constant(c)
    P = build_fine_partition((0, 1), gamma)
    k = data.draw(st.integers(0, len(P) - 1))
    _, cell = P.items[k]
    if cell.width == 0:
        return
    point = data.draw(st.floats(cell.lo, cell.hi, exclude_min=True, exclude_max=True))
    if not cell.lo < point < cell.hi:
        return
    Q = refine(P, k, point)
    assert len(Q) == len(P) + 1
    assert is_fine(Q, gamma)


def test_refine_rejects_boundary_split():
    P = build_fine_partition((0, 1), Gauge.constant(0.3))
    t, c = P.items[0]
    with pytest.raises(ArgumentError):
        refine(P, 0, c.lo)
