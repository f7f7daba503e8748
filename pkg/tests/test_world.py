import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from sarsim.world import (
    DEFAULT_AREA,
    Rect,
    Scenario,
    ScenarioError,
    ScenarioKind,
    ScenarioParams,
    Target,
    generate_scenario,
    targets_in_region,
)

SQUARE_100 = Rect(0, 0, 100, 100)


def brute_force_region(scenario, region):
    return [t for t in sorted(scenario.targets, key=lambda t: t.id)
            if region.x_min <= t.x <= region.x_max and region.y_min <= t.y <= region.y_max]


def test_sparse_zero_count_is_empty():
    s = generate_scenario("sparse", SQUARE_100, ScenarioParams(count=0), seed=1)
    assert s.targets == ()


def test_clustered_targets_lie_within_spread_of_a_center():
    s = generate_scenario("clustered", DEFAULT_AREA, ScenarioParams(clusters=2, per_cluster=4, spread=5.0), seed=42)
    assert len(s.targets) == 8
    assert len(s.centers) == 2
    for t in s.targets:
        assert min(math.dist(t.position, c) for c in s.centers) <= 5.0 + 1e-9


def test_sparse_pairwise_spacing():
    s = generate_scenario("sparse", SQUARE_100, ScenarioParams(count=5, spacing=20.0), seed=7)
    pts = [t.position for t in s.targets]
    assert len(pts) == 5
    for i in range(5):
        for j in range(i + 1, 5):
            assert math.dist(pts[i], pts[j]) >= 20.0


def test_defaults_give_expected_counts():
    assert len(generate_scenario("clustered", seed=3).targets) == 8
    assert len(generate_scenario("abundant", seed=3).targets) == 45
    assert len(generate_scenario("sparse", seed=3).targets) == 5


def test_infeasible_spacing_is_rejected_with_diagnostic():
    with pytest.raises(ScenarioError, match="spacing"):
        generate_scenario("sparse", Rect(0, 0, 10, 10), ScenarioParams(count=20, spacing=9.0), seed=0)


@pytest.mark.parametrize("params", [
    ScenarioParams(clusters=0, per_cluster=4, spread=5),
    ScenarioParams(clusters=2, per_cluster=0, spread=5),
    ScenarioParams(clusters=2, per_cluster=4, spread=0),
])
def test_invalid_cluster_params(params):
    with pytest.raises(ScenarioError):
        generate_scenario("clustered", DEFAULT_AREA, params, seed=0)


def test_custom_kind_cannot_be_generated():
    with pytest.raises(ScenarioError):
        generate_scenario(ScenarioKind.CUSTOM, seed=0)


def test_degenerate_rect_rejected():
    with pytest.raises(ScenarioError):
        Rect(0, 0, 0, 10)


def test_target_outside_area_rejected():
    with pytest.raises(ScenarioError):
        Scenario(SQUARE_100, (Target(0, 150.0, 5.0),))


def test_duplicate_ids_rejected():
    with pytest.raises(ScenarioError):
        Scenario(SQUARE_100, (Target(0, 1, 1), Target(0, 2, 2)))


def test_region_queries():
    empty = Scenario(SQUARE_100, ())
    assert targets_in_region(empty, Rect(0, 0, 10, 10)) == []
    s = generate_scenario("abundant", seed=5)
    assert targets_in_region(s, s.area) == sorted(s.targets, key=lambda t: t.id)


def test_region_covering_one_cluster():
    s = generate_scenario("clustered", DEFAULT_AREA, ScenarioParams(clusters=2, per_cluster=4, spread=5.0), seed=42)
    cx, cy = s.centers[0]
    region = Rect(cx - 5, cy - 5, cx + 5, cy + 5)
    hits = targets_in_region(s, region)
    assert len(hits) == 4
    assert hits == brute_force_region(s, region)


def test_region_boundary_is_inclusive():
    s = Scenario(SQUARE_100, (Target(0, 10.0, 10.0),))
    assert targets_in_region(s, Rect(0, 0, 10, 10)) == [s.targets[0]]


def test_scenario_file_round_trip(tmp_path):
    s = generate_scenario("clustered", seed=11)
    path = tmp_path / "s.scn"
    s.save(path)
    loaded = Scenario.load(path)
    assert loaded == s
    assert loaded.dumps() == s.dumps()
    doc = json.loads(path.read_text())
    assert set(doc) == {"kind", "seed", "area", "targets"}


def test_malformed_scenario_document():
    with pytest.raises(ScenarioError):
        Scenario.from_dict({"targets": []})


kinds = st.sampled_from(["clustered", "abundant", "sparse"])
seeds = st.integers(min_value=0, max_value=2**64 - 1)


@given(kinds, seeds)
def test_generation_is_deterministic(kind, seed):
    a = generate_scenario(kind, seed=seed)
    b = generate_scenario(kind, seed=seed)
    assert a.dumps() == b.dumps()


@given(kinds, st.integers(min_value=0, max_value=999))
def test_containment(kind, seed):
    s = generate_scenario(kind, seed=seed)
    assert all(s.area.contains(t.x, t.y) for t in s.targets)


@given(kinds, seeds)
def test_serialisation_round_trip(kind, seed):
    s = generate_scenario(kind, seed=seed)
    assert Scenario.loads(s.dumps()) == s


@given(
    kinds,
    st.integers(min_value=0, max_value=10_000),
    st.floats(min_value=-20, max_value=220),
    st.floats(min_value=-20, max_value=220),
    st.floats(min_value=0.1, max_value=150),
    st.floats(min_value=0.1, max_value=150),
)
def test_region_matches_brute_force(kind, seed, x, y, w, h):
    s = generate_scenario(kind, seed=seed)
    region = Rect(x, y, x + w, y + h)
    assert targets_in_region(s, region) == brute_force_region(s, region)


@given(st.integers(min_value=0, max_value=10_000))
def test_clustered_spatial_law(seed):
    p = ScenarioParams(clusters=3, per_cluster=3, spread=8.0)
    s = generate_scenario("clustered", DEFAULT_AREA, p, seed=seed)
    for t in s.targets:
        assert min(math.dist(t.position, c) for c in s.centers) <= p.spread + 1e-9
    for cx, cy in s.centers:
        # centres keep a margin of one spread radius from the border
        assert p.spread <= cx <= DEFAULT_AREA.x_max - p.spread
        assert p.spread <= cy <= DEFAULT_AREA.y_max - p.spread


@pytest.mark.parametrize("kind", ["clustered", "abundant", "sparse"])
def test_containment_over_a_thousand_seeds(kind):
    for seed in range(1000):
        s = generate_scenario(kind, seed=seed)
        assert all(s.area.contains(t.x, t.y) for t in s.targets)
