import random

import numpy as np
import pytest

from backend.errors import InfeasibleError, ParseError, PreconditionError
from backend.groups import ball, parse_element, parse_group, translate_set, word_length
from backend.sampling import BernoulliField, SeedSpec, sample_marked, translate_configuration
from backend.tiling import (
    INSUFFICIENT,
    BoundId,
    CellSet,
    RootOutcomes,
    TilingSampler,
    bound_in_pi,
    bound_large,
    bound_reports,
    bound_size,
    conflict_probability,
    delta_for_epsilon,
    determinacy_window,
    exact_distribution,
    lemma_bounds_pass,
    oracle_comparison,
    parse_cell_set,
    prop_lower_bound,
    root_cell_from_configuration,
    sample_outcomes,
    sample_root_cell,
    tiling_partition,
    verify_lemma_bounds,
)

Z1 = parse_group("z:1")
Z2 = parse_group("z:2")
F2 = parse_group("f:2")


def pair(delta: float) -> CellSet:
    return parse_cell_set(Z1, "explicit:0,1", delta)


# --------- Cell sets --------- #

def test_parse_cell_set():
    assert parse_cell_set(F2, "ball:2", 0.1).size == 17
    assert parse_cell_set(Z2, "ball:1", 0.1).size == 5
    assert pair(0.5).size == 2
    for bad in ["", "ball:x", "explicit:", "square:3"]:
        with pytest.raises(ParseError):
            parse_cell_set(Z1, bad, 0.1)


@pytest.mark.parametrize("delta", [0.0, -0.1, 0.6, 1.0])
def test_delta_range(delta):
    with pytest.raises(PreconditionError, match="1 − 2δ"):
        pair(delta)


def test_cell_set_needs_identity():
    with pytest.raises(PreconditionError):
        parse_cell_set(Z1, "explicit:1,2", 0.1)


def test_intensity_is_delta_over_size():
    cs = parse_cell_set(F2, "ball:2", 0.1)
    assert cs.intensity.p == pytest.approx(0.1 / 17)


def test_determinacy_window_of_pair():
    window = determinacy_window(pair(0.5))
    assert sorted(g.form[0] for g in window) == [-2, -1, 0, 1]


# --------- Bound formulas --------- #

def test_bound_values():
    cs = parse_cell_set(F2, "ball:2", 0.1)
    assert bound_in_pi(0.1) == pytest.approx(0.09)
    assert bound_size(cs) == pytest.approx(13.6)
    assert bound_large(0.1) == pytest.approx(0.0256)
    assert prop_lower_bound(0.1) == pytest.approx(0.09 * 0.0256)
    assert bound_in_pi(0.5) == pytest.approx(0.25)


def test_delta_for_epsilon():
    assert delta_for_epsilon(0.19) == pytest.approx(0.05)
    with pytest.raises(PreconditionError):
        delta_for_epsilon(1.0)


@pytest.mark.parametrize("spec, text, delta", [("z:1", "explicit:0,1", 0.3), ("f:2", "ball:2", 0.1), ("z:2", "ball:3", 0.5)])
def test_conflict_probability_below_bound(spec, text, delta):
    cs = parse_cell_set(parse_group(spec), text, delta)
    assert conflict_probability(cs) <= delta**2 / cs.size


# --------- Partition structure --------- #

def test_partition_is_consistent_with_root_cells():
    cs = parse_cell_set(Z1, "explicit:0,1,2", 0.4)
    config = sample_marked(ball(Z1, Z1.identity(), 20), cs.intensity, SeedSpec(17))
    labels = tiling_partition(config, cs)
    for x in range(-10, 11):
        g = Z1.element((x,))
        cell = root_cell_from_configuration(config, cs, root=g)
        assert cell.members == {h for h, c in labels.items() if c == labels[g]}
        assert cell.size <= cs.size


def test_points_keep_themselves():
    cs = parse_cell_set(Z2, "ball:1", 0.5)
    config = sample_marked(ball(Z2, Z2.identity(), 8), cs.intensity, SeedSpec(2))
    labels = tiling_partition(config, cs)
    assert all(labels[x] == x for x in config.points if x in labels)


@pytest.mark.parametrize("seed", range(30))
def test_sampler_matches_whole_window_view(seed):
    cs = parse_cell_set(Z1, "explicit:0,1,2", 0.45)
    field = BernoulliField(cs.intensity, SeedSpec(seed))
    direct = sample_root_cell(cs, SeedSpec(seed))
    via_window = root_cell_from_configuration(field.restrict(ball(Z1, Z1.identity(), 6)), cs)
    assert direct == via_window


@pytest.mark.parametrize("seed", range(10))
def test_equivariance(seed):
    cs = parse_cell_set(F2, "ball:1", 0.5)
    gamma = parse_element(F2, "aB")
    config = sample_marked(ball(F2, F2.identity(), 4), cs.intensity, SeedSpec(seed))
    moved = translate_configuration(config, gamma)
    cell = root_cell_from_configuration(config, cs)
    cell_moved = root_cell_from_configuration(moved, cs, root=gamma)
    assert cell_moved.members == translate_set(gamma, cell.members)


def test_cells_stay_inside_their_tile():
    cs = parse_cell_set(F2, "ball:1", 0.5)
    sampler = TilingSampler(cs)
    for i in range(200):
        cell = sampler.sample(SeedSpec(3, i))
        if cell.in_pi_class:
            assert cell.members <= translate_set(cell.center, cs.elements)
        else:
            assert cell.size == 1


# --------- Exact oracle --------- #

@pytest.mark.parametrize("delta", [0.1, 0.25, 0.49, 0.5])
def test_exact_law_of_pair(delta):
    q = delta / 2
    law = exact_distribution(pair(delta))
    assert law.total() == pytest.approx(1.0)
    assert law.p_in_pi() == pytest.approx(2 * q - q**2)
    assert law.expected_size_in_pi() == pytest.approx(4 * q - 3 * q**2)
    assert law.p_in_pi() >= bound_in_pi(delta)


def test_exact_conditional_large():
    q = 0.05
    assert exact_distribution(pair(0.1)).conditional_large() == pytest.approx(2 * (1 - q) / (2 - q))
    assert exact_distribution(pair(0.5)).conditional_large() == pytest.approx(1.0)


def test_exact_oracle_on_a_triple_satisfies_bounds():
    cs = parse_cell_set(Z1, "explicit:0,1,2", 0.3)
    law = exact_distribution(cs)
    assert law.total() == pytest.approx(1.0)
    assert law.p_in_pi() >= bound_in_pi(0.3)
    assert law.expected_size_in_pi() / law.p_in_pi() >= bound_size(cs)
    assert law.conditional_large() >= bound_large(0.3)
    # mass transport: P[o in [Pi]] = E[|o| 1{e in Pi}] <= delta
    assert law.p_in_pi() <= 0.3


def test_exact_oracle_on_a_square():
    cs = parse_cell_set(Z2, "explicit:0/0,1/0,0/1,1/1", 0.4)
    assert len(determinacy_window(cs)) == 16
    law = exact_distribution(cs)
    assert law.total() == pytest.approx(1.0)
    assert bound_in_pi(0.4) <= law.p_in_pi() <= 0.4


def test_exact_oracle_infeasible_on_big_sets():
    with pytest.raises(InfeasibleError):
        exact_distribution(parse_cell_set(F2, "ball:2", 0.1))


@pytest.mark.parametrize("delta", [0.1, 0.25, 0.49])
def test_monte_carlo_agrees_with_oracle(delta):
    cs = pair(delta)
    outcomes = sample_outcomes(cs, 20000, SeedSpec(2024))
    comparison = oracle_comparison(exact_distribution(cs), outcomes)
    assert comparison["p_in_pi"]["within_4se"]
    assert comparison["expected_size_in_pi"]["within_4se"]


@pytest.mark.slow
@pytest.mark.parametrize("delta", [0.1, 0.25, 0.49])
def test_monte_carlo_agrees_with_oracle_full_size(delta):
    cs = pair(delta)
    outcomes = sample_outcomes(cs, 10**5, SeedSpec(7))
    comparison = oracle_comparison(exact_distribution(cs), outcomes)
    assert all(entry["within_4se"] for entry in comparison.values())


# --------- Lemma bounds --------- #

def test_verify_needs_enough_samples():
    with pytest.raises(PreconditionError):
        verify_lemma_bounds(pair(0.2), 999, SeedSpec(0))


def test_bounds_pass_on_small_instance():
    reports = verify_lemma_bounds(parse_cell_set(Z2, "ball:1", 0.25), 5000, SeedSpec(1))
    assert [r.bound_id for r in reports[:3]] == [BoundId.IN_PI, BoundId.SIZE, BoundId.LARGE]
    assert lemma_bounds_pass(reports)
    by_id = {r.bound_id: r for r in reports}
    assert by_id[BoundId.MASS_TRANSPORT].estimate.within(0.0)
    assert by_id[BoundId.CONFLICT].passes
    assert by_id[BoundId.CONFLICT].exact is not None
    assert "ci99" in by_id[BoundId.IN_PI].to_dict()


def test_no_conditioning_mass_is_reported_not_failed():
    n = 1000
    zeros = np.zeros(n)
    outcomes = RootOutcomes(in_pi=zeros, size=np.ones(n), at_point=zeros, master_seed=0)
    reports = bound_reports(pair(0.2), outcomes)
    by_id = {r.bound_id: r for r in reports}
    assert by_id[BoundId.SIZE].status == INSUFFICIENT
    assert by_id[BoundId.LARGE].status == INSUFFICIENT
    assert not by_id[BoundId.IN_PI].passes
    assert not lemma_bounds_pass(reports)


def test_same_seed_same_reports():
    cs = pair(0.3)
    a = [r.to_dict() for r in verify_lemma_bounds(cs, 1000, SeedSpec(5))]
    b = [r.to_dict() for r in verify_lemma_bounds(cs, 1000, SeedSpec(5))]
    assert a == b


@pytest.mark.slow
def test_free_group_ball_acceptance():
    cs = parse_cell_set(F2, "ball:2", 0.1)
    reports = verify_lemma_bounds(cs, 10**5, SeedSpec(0))
    by_id = {r.bound_id: r for r in reports}
    assert by_id[BoundId.IN_PI].estimate.limits(0.99)[0] >= 0.09
    assert by_id[BoundId.SIZE].estimate.limits(0.99)[0] >= 13.6
    assert by_id[BoundId.LARGE].estimate.limits(0.99)[0] >= 0.0256
    assert lemma_bounds_pass(reports)


def test_sampler_matches_whole_window_view_on_random_free_cell_sets():
    rng = random.Random(11)
    pool = sorted(g for g in ball(F2, F2.identity(), 2).elements if g != F2.identity())
    for trial in range(20):
        extra = rng.sample(pool, rng.randint(1, 2))
        cs = CellSet(frozenset([F2.identity(), *extra]), 0.5)
        radius = max(word_length(g) for g in determinacy_window(cs))
        window = ball(F2, F2.identity(), radius)
        for i in range(50):
            seed = SeedSpec(trial, i)
            via_window = root_cell_from_configuration(BernoulliField(cs.intensity, seed).restrict(window), cs)
            assert sample_root_cell(cs, seed) == via_window
