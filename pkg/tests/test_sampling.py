from collections import Counter

import numpy as np
import pytest
from scipy import stats

from backend.errors import PreconditionError
from backend.groups import ball, multiply, parse_element, parse_group
from backend.sampling import (
    BernoulliField,
    IntensitySpec,
    SeedSpec,
    coinduce,
    coinduce_cells,
    extend,
    mark_uniformity,
    restrict_configuration,
    sample_marked,
    translate_configuration,
)
from backend.tiling import CellSet, TilingSampler, parse_cell_set

Z1 = parse_group("z:1")
Z2 = parse_group("z:2")
F2 = parse_group("f:2")


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5])
def test_intensity_is_open_interval(p):
    with pytest.raises(PreconditionError):
        IntensitySpec(p)


def test_seed_validation():
    with pytest.raises(PreconditionError):
        SeedSpec(-1)
    with pytest.raises(PreconditionError):
        SeedSpec(0, -3)
    assert SeedSpec(7, 2).offset(3) == SeedSpec(7, 5)
    assert SeedSpec(7, 0).key() != SeedSpec(7, 1).key()


def test_same_seed_same_configuration():
    window = ball(F2, F2.identity(), 3)
    a = sample_marked(window, IntensitySpec(0.3), SeedSpec(11))
    b = sample_marked(window, IntensitySpec(0.3), SeedSpec(11))
    c = sample_marked(window, IntensitySpec(0.3), SeedSpec(12))
    assert a.points == b.points and a.marks == b.marks
    assert a.points != c.points


def test_restriction_matches_smaller_sample():
    big = sample_marked(ball(Z2, Z2.identity(), 6), IntensitySpec(0.2), SeedSpec(3))
    small = sample_marked(ball(Z2, Z2.identity(), 2), IntensitySpec(0.2), SeedSpec(3))
    restricted = restrict_configuration(big, 2)
    assert restricted.points == small.points
    assert restricted.marks == small.marks


def test_extension_is_consistent_with_fresh_sampling():
    seed = SeedSpec(5, 1)
    small = sample_marked(ball(F2, F2.identity(), 1), IntensitySpec(0.4), seed)
    grown = extend(small, 3, seed)
    fresh = sample_marked(ball(F2, F2.identity(), 3), IntensitySpec(0.4), seed)
    assert grown.points == fresh.points
    assert grown.marks == fresh.marks
    with pytest.raises(PreconditionError):
        extend(grown, 2, seed)


def test_translation_is_rekeying():
    gamma = parse_element(F2, "ab")
    field = BernoulliField(IntensitySpec(0.3), SeedSpec(9))
    moved = field.translate(gamma)
    for g in ball(F2, F2.identity(), 2).elements:
        # (gamma . omega)(gamma g) = omega(g)
        assert moved.contains(multiply(gamma, g)) == field.contains(g)
        if field.contains(g):
            assert moved.mark(multiply(gamma, g)) == field.mark(g)


def test_translate_configuration_moves_points():
    config = sample_marked(ball(Z2, Z2.identity(), 3), IntensitySpec(0.3), SeedSpec(2))
    gamma = parse_element(Z2, "4/-1")
    moved = translate_configuration(config, gamma)
    assert moved.window.center == gamma
    assert moved.points == {multiply(gamma, g) for g in config.points}
    assert all(moved.mark(multiply(gamma, g)) == config.mark(g) for g in config.points)


def test_marks_are_uniform():
    field = BernoulliField(IntensitySpec(0.5), SeedSpec(1))
    window = ball(Z2, Z2.identity(), 40)
    _, marks = field.draw(window.elements)
    _, p_value = mark_uniformity(marks)
    assert p_value > 1e-4


def test_membership_frequency():
    window = ball(Z2, Z2.identity(), 40)
    mask, _ = BernoulliField(IntensitySpec(0.2), SeedSpec(4)).draw(window.elements)
    n = len(window)
    se = np.sqrt(0.2 * 0.8 / n)
    assert abs(mask.mean() - 0.2) <= 4 * se


def test_coinduced_cells_live_on_cosets():
    base = TilingSampler(CellSet(frozenset({Z1.element((0,)), Z1.element((1,))}), 0.4))
    window = ball(Z2, Z2.identity(), 2)
    cells = coinduce_cells(1, base, window, SeedSpec(8))
    assert len(cells) == 5  # second coordinate ranges over -2..2
    for tail, cell in cells.items():
        assert all(g.form[1] == tail.form[1] for g in cell.members)
    root_cell = coinduce(1, base, window, SeedSpec(8))
    assert root_cell.root == Z2.identity()
    assert root_cell == cells[Z2.identity()]


def test_coinduction_rejects_free_groups():
    base = TilingSampler(CellSet(frozenset({Z1.element((0,))}), 0.4))
    with pytest.raises(PreconditionError):
        coinduce(1, base, ball(F2, F2.identity(), 1), SeedSpec(0))


def test_singleton_base_gives_singleton_cells():
    base = TilingSampler(CellSet(frozenset({Z1.identity()}), 0.3))
    cells = coinduce_cells(1, base, ball(Z2, Z2.identity(), 3), SeedSpec(1))
    assert all(cell.size == 1 for cell in cells.values())
    for seed in range(50):
        assert coinduce(1, base, ball(Z2, Z2.identity(), 0), SeedSpec(seed)).size == 1


def test_coinduced_root_size_law_matches_base():
    base = TilingSampler(CellSet(frozenset({Z1.element((0,)), Z1.element((1,))}), 0.4))
    window = ball(Z2, Z2.identity(), 0)
    n = 2000
    coinduced = Counter(coinduce(1, base, window, SeedSpec(100, i)).size for i in range(n))
    direct = Counter(base.sample(SeedSpec(200, i)).size for i in range(n))
    sizes = sorted(set(coinduced) | set(direct))
    table = [[coinduced[s] for s in sizes], [direct[s] for s in sizes]]
    _, p_value, _, _ = stats.chi2_contingency(table)
    assert p_value > 1e-3


def test_base_cells_must_stay_in_the_subgroup():
    base = TilingSampler(parse_cell_set(Z2, "ball:1", 0.4))
    with pytest.raises(PreconditionError, match="not contained in the subgroup"):
        coinduce(1, base, ball(Z2, Z2.identity(), 1), SeedSpec(0))
    inside = TilingSampler(parse_cell_set(Z2, "explicit:0/0,1/0", 0.4))
    assert coinduce(1, inside, ball(Z2, Z2.identity(), 1), SeedSpec(0)).root == Z2.identity()
