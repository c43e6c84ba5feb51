import itertools
import random

import pytest

from backend.errors import GroupMismatchError, ParseError, SizeLimitError
from backend.groups import (
    ball,
    ball_size,
    format_element,
    inverse,
    inverse_set,
    multiply,
    parse_element,
    parse_group,
    set_product,
    spheres,
    translate_set,
    word_distance,
    word_length,
)

Z1 = parse_group("z:1")
Z2 = parse_group("z:2")
F2 = parse_group("f:2")


def test_parse_group_round_trip_text():
    assert str(parse_group(" Z:3 ")) == "z:3"
    assert F2.degree == 4
    assert Z2.is_abelian and not F2.is_abelian


@pytest.mark.parametrize("text", ["", "z", "q:2", "z:x", "z:0", "f:-1"])
def test_parse_group_rejects(text):
    with pytest.raises(ParseError):
        parse_group(text)


def test_free_group_reduction():
    a, a_inv = F2.element((1,)), F2.element((-1,))
    assert multiply(a, a_inv).is_identity()
    assert F2.element((1, 2, -2, -1, 2)).form == (2,)


def test_element_text_forms():
    g = parse_element(F2, "aB")
    assert g.form == (1, -2)
    assert format_element(g) == "aB"
    assert parse_element(F2, "a^-1b") == parse_element(F2, "Ab")
    assert parse_element(F2, "a⁻¹") == F2.element((-1,))
    assert parse_element(F2, "1").is_identity()
    assert format_element(parse_element(Z2, "3/-1")) == "3/-1"
    with pytest.raises(ParseError):
        parse_element(F2, "c")
    with pytest.raises(ParseError):
        parse_element(Z2, "1/2/3")


def test_inverse_and_lengths():
    g = parse_element(F2, "aB")
    assert inverse(g) == parse_element(F2, "bA")
    assert multiply(g, inverse(g)).is_identity()
    assert word_length(g) == 2
    assert word_length(parse_element(Z2, "3/-4")) == 7


def test_word_distance_is_left_invariant():
    elements = ball(F2, F2.identity(), 2).elements
    gamma = parse_element(F2, "aab")
    for g, h in itertools.combinations(elements, 2):
        assert word_distance(g, h) == word_distance(multiply(gamma, g), multiply(gamma, h))
        assert word_distance(g, h) == word_length(multiply(inverse(g), h))


def test_mixed_groups_raise():
    with pytest.raises(GroupMismatchError):
        multiply(Z1.identity(), Z2.identity())
    with pytest.raises(GroupMismatchError):
        word_distance(Z2.identity(), F2.identity())


@pytest.mark.parametrize(
    "spec, radius, size",
    [(Z1, 3, 7), (Z2, 2, 13), (parse_group("z:3"), 1, 7), (F2, 2, 17), (parse_group("f:1"), 4, 9)],
)
def test_ball_sizes(spec, radius, size):
    assert ball_size(spec, radius) == size
    window = ball(spec, spec.identity(), radius)
    assert len(window) == size
    assert all(window.distance_from_center(g) <= radius for g in window.elements)


def test_ball_adjacency_is_cayley_graph():
    window = ball(Z2, Z2.identity(), 1)
    # the plus shape: four spokes
    assert len(window.edges()) == 4
    assert sorted(format_element(g) for g in window.neighbors(Z2.identity())) == ["-1/0", "0/-1", "0/1", "1/0"]


def test_ball_cap():
    with pytest.raises(SizeLimitError):
        ball(Z2, Z2.identity(), 100, cap=1000)


def test_ball_cap_from_environment(monkeypatch):
    monkeypatch.setenv("IRELAB_BUDGET", "50")
    with pytest.raises(SizeLimitError):
        ball(F2, F2.identity(), 3)


def test_spheres_layers():
    layers = spheres(Z1, Z1.identity())
    assert [format_element(g) for g in next(layers)] == ["0"]
    assert [format_element(g) for g in next(layers)] == ["-1", "1"]
    assert [format_element(g) for g in next(layers)] == ["-2", "2"]


def test_set_operations():
    a = frozenset({Z1.element((0,)), Z1.element((1,))})
    assert inverse_set(a) == {Z1.element((0,)), Z1.element((-1,))}
    assert set_product(a, inverse_set(a)) == {Z1.element((x,)) for x in (-1, 0, 1)}
    assert translate_set(Z1.element((5,)), a) == {Z1.element((5,)), Z1.element((6,))}


def test_set_product_example():
    left = {Z1.element((x,)) for x in (0, -1)}
    right = {Z1.element((x,)) for x in (-1, 0, 1)}
    assert set_product(left, right) == {Z1.element((x,)) for x in (-2, -1, 0, 1)}


@pytest.mark.parametrize("spec", [Z2, F2, parse_group("f:3")])
def test_multiply_is_associative(spec):
    rng = random.Random(str(spec))
    elements = ball(spec, spec.identity(), 3).elements
    for _ in range(500):
        g, h, k = (rng.choice(elements) for _ in range(3))
        assert multiply(multiply(g, h), k) == multiply(g, multiply(h, k))


@pytest.mark.parametrize("k, max_radius", [(2, 6), (3, 6), (4, 4)])
def test_free_ball_sizes_match_bfs(k, max_radius):
    spec = parse_group(f"f:{k}")
    layers = spheres(spec, spec.identity())
    total = 0
    for r in range(max_radius + 1):
        total += len(next(layers))
        assert total == 1 + 2 * k * ((2 * k - 1) ** r - 1) // (2 * k - 2)
        assert total == ball_size(spec, r)


@pytest.mark.parametrize("spec, radius", [(Z2, 4), (parse_group("z:3"), 2), (F2, 3), (parse_group("f:3"), 2)])
def test_interior_vertices_have_full_degree(spec, radius):
    window = ball(spec, spec.identity(), radius)
    for g in window.elements:
        if window.distance_from_center(g) < radius:
            assert len(window.neighbors(g)) == spec.degree
