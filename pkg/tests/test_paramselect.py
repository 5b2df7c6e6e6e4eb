import numpy as np
import pytest

from diffnormals import (
    PRESETS,
    ClassSample,
    ClassStats,
    DoNParams,
    ParamGrid,
    PointCloud,
    class_response_stats,
    select_params,
)
from diffnormals.errors import EmptyClassError, UnknownClassError
from diffnormals.paramselect import StatRow, aggregate
from diffnormals.synthetic import plane, pole_box_scene

P = DoNParams(0.1, 0.4)
Q = DoNParams(0.4, 2.0)


def stats_from(medians):
    rows = [StatRow(c, p, m, m, 0.0, 10) for (c, p), m in medians.items()]
    return ClassStats(rows)


def test_margin_rule_and_midpoint():
    stats = stats_from({("A", P): 0.8, ("B", P): 0.1, ("A", Q): 0.5, ("B", Q): 0.4})
    params, t = select_params(stats, "A")
    assert params == P
    assert t == pytest.approx(0.45)


def test_single_class_takes_max_median():
    stats = stats_from({("A", P): 0.3, ("A", Q): 0.6})
    params, t = select_params(stats, "A")
    assert params == Q
    assert t == pytest.approx(0.3)


def test_margin_tie_prefers_larger_median_then_smaller_r2():
    stats = stats_from({("A", P): 0.5, ("B", P): 0.25, ("A", Q): 0.75, ("B", Q): 0.5})
    assert select_params(stats, "A")[0] == Q
    R = DoNParams(0.1, 1.0)
    stats = stats_from({("A", P): 0.5, ("A", R): 0.5})
    assert select_params(stats, "A")[0] == P


def test_unknown_objective():
    with pytest.raises(UnknownClassError):
        select_params(stats_from({("A", P): 0.1}), "B")


def test_no_valid_response():
    stats = ClassStats([StatRow("A", P, None, None, None, 0)])
    with pytest.raises(EmptyClassError):
        select_params(stats, "A")


def test_empty_class():
    with pytest.raises(EmptyClassError):
        ClassSample("x", [])
    with pytest.raises(EmptyClassError):
        ClassSample("x", [PointCloud(np.empty((0, 3)))])


def test_aggregate_constant_field():
    mean, median, var, count = aggregate(np.full(50, 0.37))
    assert mean == pytest.approx(0.37) and median == pytest.approx(0.37)
    assert var == pytest.approx(0.0, abs=1e-15)
    assert count == 50


def test_aggregate_ignores_invalid():
    assert aggregate(np.array([np.nan, 0.2, 0.4]))[3] == 2
    assert aggregate(np.array([np.nan]))[:3] == (None, None, None)


def test_plane_class_is_quiet(rng):
    clouds = [PointCloud(plane(0, 4, 0, 4, z, 0.05, rng)) for z in (0.0, 1.0)]
    grid = ParamGrid.product([0.1, 0.2], [0.4, 1.0])
    stats = class_response_stats([ClassSample("plane", clouds)], grid)
    for p in grid.pairs:
        row = stats["plane", p]
        assert row.mean < 0.01 and row.median < 0.01
    params, t = select_params(stats, "plane")
    assert t < 0.01


def test_grid_parsing():
    g = ParamGrid.parse("0.1,0.2x0.4,1")
    assert g.pairs == (DoNParams(0.1, 0.4), DoNParams(0.1, 1), DoNParams(0.2, 0.4), DoNParams(0.2, 1))
    assert ParamGrid.parse("0.1:0.4, 0.4:2").pairs == (P, Q)
    assert ParamGrid.product([0.4], [0.4, 2]).pairs == (Q,)
    for bad in ("", "0.1x", "a:b", "0.4:0.1", "1,2"):
        with pytest.raises(ValueError):
            ParamGrid.parse(bad)


def test_stats_csv_header_and_rows():
    stats = stats_from({("A", P): 0.5})
    lines = stats.to_csv().splitlines()
    assert lines[0] == "class,r1,r2,mean,median,variance,valid_count"
    assert lines[1].startswith("A,0.1,0.4,0.5,0.5,0,10")


def test_presets():
    assert PRESETS["pedestrian"] == DoNParams(0.1, 0.4)
    assert PRESETS["car"] == DoNParams(0.4, 2.0)


@pytest.fixture(scope="module")
def pole_box_stats():
    scene = pole_box_scene()
    samples = [ClassSample(name, [scene.cloud.select(scene.members(label))])
               for label, name in scene.names.items()]
    grid = ParamGrid.product([0.1, 0.2, 0.4], [0.4, 1, 2])
    return class_response_stats(samples, grid, scene.cloud)


def test_pole_prefers_smaller_radii_than_box(pole_box_stats):
    pole, _ = select_params(pole_box_stats, "pole")
    box, _ = select_params(pole_box_stats, "box")
    assert pole.r1 <= box.r1 and pole.r2 < box.r2


def test_pole_objective(pole_box_stats):
    params, t = select_params(pole_box_stats, "pole")
    assert params.r2 <= 1.0
    assert pole_box_stats.median("pole", params) > pole_box_stats.median("box", params)
    assert pole_box_stats.median("box", params) < t < pole_box_stats.median("pole", params)


def test_context_membership_must_match(rng):
    scene = PointCloud(rng.uniform(0, 1, (200, 3)))
    stranger = PointCloud([[5.0, 5.0, 5.0]])
    with pytest.raises(ValueError):
        class_response_stats([ClassSample("x", [stranger])], ParamGrid((P,)), scene)


def test_context_and_standalone_agree_for_whole_scene(rng):
    cloud = PointCloud(rng.uniform(0, 2, (1500, 3)))
    grid = ParamGrid((DoNParams(0.3, 0.6),))
    a = class_response_stats([ClassSample("all", [cloud])], grid)
    b = class_response_stats([ClassSample("all", [cloud])], grid, cloud)
    assert a.rows == b.rows
