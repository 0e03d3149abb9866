import numpy as np
import pytest
from conftest import make_particles
from hypothesis import given
from hypothesis import strategies as st

from partimax import coverage
from partimax.coverage import GainTable, pcf
from partimax.tiling import TileCodingConfig, build
from partimax.verify import SMALL_TILING, random_belief

SMALL = build(SMALL_TILING)


def scratch_gain(belief, coder, applied, i):
    return pcf(belief, list(applied) + [i], coder) - pcf(belief, applied, coder)


def test_empty_selection_covers_nothing(full_coder):
    assert pcf(make_particles([[10, 10]]), [], full_coder) == 0


def test_one_box_holding_everything(full_coder):
    rng = np.random.default_rng(0)
    b = make_particles(rng.uniform(10, 170, (37, 2)))
    box = full_coder.flat_index(0, 0, 0)
    assert pcf(b, [box], full_coder) == 37


def test_pcf_on_fixed_scatter_matches_manual_scan(full_coder):
    rng = np.random.default_rng(42)
    b = make_particles(rng.uniform((0, 0), (600, 600), (250, 2)))
    boxes = [full_coder.flat_index(0, 1, 1), full_coder.flat_index(1, 2, 2), full_coder.flat_index(3, 1, 2)]
    count = 0
    for x, y, _, _ in b:
        if any(full_coder.contains(i, (x, y)) for i in boxes):
            count += 1
    assert pcf(b, boxes, full_coder) == count


def test_single_particle_activates_t_boxes(full_coder):
    table = GainTable.initialize(make_particles([[777, 555]]), full_coder)
    delta = np.array(table.delta)
    assert (delta == 1).sum() == 6
    assert delta.sum() == 6
    assert set(np.flatnonzero(delta)) == set(full_coder.covers((777, 555)))


def test_coincident_particles_accumulate(full_coder):
    table = GainTable.initialize(make_particles([[300, 300]] * 9), full_coder)
    for i in full_coder.covers((300, 300)):
        assert table.marginal_gain(i) == 9


def test_fresh_gains_equal_singleton_pcf(small_coder):
    b = random_belief(np.random.default_rng(3), 40, small_coder)
    table = coverage.initialize(b, small_coder)
    for i in range(small_coder.n):
        assert coverage.marginal_gain(table, i) == pcf(b, [i], small_coder)


def test_hand_traced_update(full_coder):
    b = make_particles([[400, 400]])
    table = GainTable.initialize(b, full_coder)
    b1, *rest = full_coder.covers((400, 400))
    assert table.apply_selection(b1) == 1
    assert all(table.marginal_gain(i) == 0 for i in rest)
    assert all(table.phi(i) == set() for i in [b1, *rest])
    assert table.is_covered(0)


def test_self_gain_vanishes_after_selection(small_coder):
    b = random_belief(np.random.default_rng(4), 30, small_coder)
    table = GainTable.initialize(b, small_coder)
    best = int(np.argmax(table.delta))
    table.apply_selection(best)
    assert table.marginal_gain(best) == 0


def test_zero_gain_box_leaves_table_unchanged(full_coder):
    b = make_particles([[100, 100], [110, 120]])
    table = GainTable.initialize(b, full_coder)
    far = full_coder.covers((4000, 3000))[0]
    before = list(table.delta)
    assert table.apply_selection(far) == 0
    assert table.delta == before


def test_repeat_application_is_noop(small_coder):
    b = random_belief(np.random.default_rng(8), 30, small_coder)
    table = GainTable.initialize(b, small_coder)
    table.apply_selection(3)
    snapshot = (list(table.delta), table.uncovered, list(table.applied))
    assert table.apply_selection(3) == 0
    assert (list(table.delta), table.uncovered, list(table.applied)) == snapshot


def test_module_level_apply_returns_table(small_coder):
    b = random_belief(np.random.default_rng(9), 10, small_coder)
    table = coverage.initialize(b, small_coder)
    assert coverage.apply_selection(table, 0) is table


@st.composite
def selection_cases(draw):
    seed = draw(st.integers(0, 2**32 - 1))
    m = draw(st.integers(1, 60))
    seq = draw(st.lists(st.integers(0, SMALL.n - 1), max_size=10))
    return random_belief(np.random.default_rng(seed), m, SMALL), seq


@given(selection_cases())
def test_table_matches_scratch_gains(case):
    b, seq = case
    table = GainTable.initialize(b, SMALL)
    applied = []
    for i in seq:
        table.apply_selection(i)
        if i not in applied:
            applied.append(i)
        base = pcf(b, applied, SMALL)
        for j in range(SMALL.n):
            assert table.marginal_gain(j) == pcf(b, applied + [j], SMALL) - base


@given(selection_cases())
def test_table_invariants(case):
    b, seq = case
    table = GainTable.initialize(b, SMALL)
    for i in seq:
        table.apply_selection(i)
    covered = table.covered
    ids = SMALL.covers_many(b)
    for i in range(SMALL.n):
        phi = table.phi(i)
        assert len(phi) == table.marginal_gain(i)
        expected = {p for p in range(len(b)) if i in ids[p] and not covered[p]}
        assert phi == expected
    # any single tiling partitions the plane, so its gains sum to the uncovered count
    for j in range(SMALL.t):
        assert sum(table.delta[i] for i in SMALL.tiling_boxes(j)) == table.uncovered
    assert table.uncovered == len(b) - pcf(b, table.applied, SMALL)


@given(st.integers(0, 2**32 - 1), st.data())
def test_pcf_monotone_and_submodular(seed, data):
    rng = np.random.default_rng(seed)
    b = random_belief(rng, int(rng.integers(1, 50)), SMALL)
    big = data.draw(st.sets(st.integers(0, SMALL.n - 1), max_size=8))
    small = data.draw(st.sets(st.sampled_from(sorted(big)), max_size=len(big))) if big else set()
    outside = [i for i in range(SMALL.n) if i not in big]
    i = data.draw(st.sampled_from(outside))
    f_small, f_big = pcf(b, small, SMALL), pcf(b, big, SMALL)
    assert 0 <= f_small <= f_big <= len(b)
    assert scratch_gain(b, SMALL, sorted(small), i) >= scratch_gain(b, SMALL, sorted(big), i)


def test_submodularity_over_many_random_triples():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        b = random_belief(rng, int(rng.integers(1, 40)), SMALL)
        big = rng.choice(SMALL.n, size=int(rng.integers(0, 10)), replace=False)
        small = big[: int(rng.integers(0, len(big) + 1))]
        i = int(rng.choice(np.setdiff1d(np.arange(SMALL.n), big)))
        assert scratch_gain(b, SMALL, list(small), i) >= scratch_gain(b, SMALL, list(big), i)


def test_grid_pcf_counts_multiplicity():
    coder = build(TileCodingConfig(390, 290, 100, 100, 100, 100))
    b = make_particles([[50, 50]] * 3 + [[150, 50]])
    assert pcf(b, [0], coder) == 3
    assert pcf(b, [0, 1], coder) == 4


@pytest.mark.parametrize("m", [1, 17, 250])
def test_uncovered_count_tracks_selections(full_coder, m):
    b = random_belief(np.random.default_rng(m), m, full_coder)
    table = GainTable.initialize(b, full_coder)
    for i in np.argsort(table.delta)[::-1][:5]:
        table.apply_selection(int(i))
    assert table.m - table.uncovered == pcf(b, table.applied, full_coder)
