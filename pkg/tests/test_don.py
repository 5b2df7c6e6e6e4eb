import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diffnormals import (
    DoNField,
    DoNParams,
    PointCloud,
    UnitNormal,
    compute_don_field,
    don_pair,
    filter_by_component,
    filter_by_magnitude,
)
from diffnormals.don import don_vectors
from diffnormals.errors import InvalidParamsError, InvalidThresholdError
from diffnormals.synthetic import corrugated_strip, plane

coord = st.floats(-1.0, 1.0, allow_nan=False)
vec3 = st.tuples(coord, coord, coord).filter(lambda v: math.hypot(*v) > 1e-3)


def unit(v):
    v = np.asarray(v, float)
    v = v / np.linalg.norm(v)
    return UnitNormal(*v.tolist(), True)


def test_identical_normals():
    d = don_pair(unit((0, 0, 1)), unit((0, 0, 1)))
    np.testing.assert_array_equal(d, [0, 0, 0])


def test_orthogonal_normals():
    d = don_pair(unit((1, 0, 0)), unit((0, 1, 0)))
    np.testing.assert_allclose(d, [0.5, -0.5, 0])
    assert math.isclose(np.linalg.norm(d), math.sqrt(2) / 2)


def test_antipodal_normals_flip():
    np.testing.assert_array_equal(don_pair(unit((0, 0, 1)), unit((0, 0, -1))), [0, 0, 0])


def test_invalid_input_gives_none():
    assert don_pair(UnitNormal.invalid(), unit((0, 0, 1))) is None
    assert don_pair(unit((0, 0, 1)), UnitNormal.invalid()) is None


@settings(max_examples=300, deadline=None)
@given(vec3, vec3)
def test_magnitude_closed_form(a, b):
    n1, n2 = unit(a), unit(b)
    mag = float(np.linalg.norm(don_pair(n1, n2)))
    # same angle as arccos(|n1.n2|), but atan2 stays accurate for near-parallel pairs
    theta = math.atan2(np.linalg.norm(np.cross(n1.vector, n2.vector)), abs(float(n1.vector @ n2.vector)))
    assert abs(mag - math.sin(theta / 2)) < 1e-9
    assert 0.0 <= mag <= math.sqrt(2) / 2 + 1e-9


@settings(max_examples=300, deadline=None)
@given(vec3, vec3, st.booleans(), st.booleans())
def test_sign_of_inputs_is_irrelevant(a, b, f1, f2):
    n1, n2 = unit(a), unit(b)
    m1 = unit(-n1.vector if f1 else n1.vector)
    m2 = unit(-n2.vector if f2 else n2.vector)
    assert abs(np.linalg.norm(don_pair(n1, n2)) - np.linalg.norm(don_pair(m1, m2))) < 1e-12


def test_vectorised_matches_pairwise(rng):
    a = rng.normal(size=(200, 3))
    b = rng.normal(size=(200, 3))
    a /= np.linalg.norm(a, axis=1)[:, None]
    b /= np.linalg.norm(b, axis=1)[:, None]
    rows = don_vectors(a, b)
    for i in range(200):
        np.testing.assert_allclose(rows[i], don_pair(unit(a[i]), unit(b[i])), atol=1e-15)


def test_params_validation():
    with pytest.raises(InvalidParamsError):
        DoNParams(1.0, 0.5)
    with pytest.raises(InvalidParamsError):
        DoNParams(0.0, 1.0)
    with pytest.raises(InvalidParamsError):
        DoNParams(1.0, 1.0)
    assert DoNParams.from_small(0.2) == DoNParams(0.2, 2.0)


def dense_plane(rng):
    return PointCloud(plane(0, 6, 0, 6, 0.0, 0.05, rng))


def test_plane_has_no_response(rng, backend):
    field = compute_don_field(dense_plane(rng), DoNParams(0.1, 1.0), backend=backend)
    assert field.valid.any()
    assert np.nanmax(field.magnitudes) < 0.01
    assert filter_by_magnitude(field, 0.25).size == 0


def test_corrugation_stands_out(rng):
    ground = plane(-4, 4, -4, 4, 0.0, 0.05, rng, holes=[(-3, 3, -0.25, 0.25)])
    strip = corrugated_strip(-3, 3, -0.25, 0.25, 0.25, 1.0, 0.05, rng)
    field = compute_don_field(PointCloud(np.vstack([ground, strip])), DoNParams(0.2, 2.0))
    mags = field.magnitudes
    gap = np.nanmedian(mags[len(ground):]) - np.nanmedian(mags[: len(ground)])
    assert gap >= 0.2


def random_field(rng, n=500, invalid_frac=0.1):
    vec = rng.normal(size=(n, 3)) * 0.3
    valid = rng.uniform(size=n) > invalid_frac
    vec[~valid] = 0.0
    return DoNField(vec, valid, DoNParams(0.1, 1.0))


def test_magnitude_filter_matches_scan(rng):
    field = random_field(rng)
    got = filter_by_magnitude(field, 0.25)
    expected = [i for i in range(len(field))
                if field.valid[i] and math.sqrt(sum(v * v for v in field.vectors[i])) >= 0.25]
    assert got.tolist() == expected


def test_zero_threshold_keeps_all_valid(rng):
    field = random_field(rng)
    assert filter_by_magnitude(field, 0.0).tolist() == np.flatnonzero(field.valid).tolist()


@pytest.mark.parametrize("t", [-0.1, 1.1, float("nan")])
def test_threshold_out_of_range(rng, t):
    with pytest.raises(InvalidThresholdError):
        filter_by_magnitude(random_field(rng), t)


def test_component_filter_on_zero_field():
    field = DoNField(np.zeros((10, 3)), np.array([True] * 8 + [False] * 2), DoNParams(0.1, 1.0))
    assert filter_by_component(field, "z", 0.1).size == 0
    assert filter_by_component(field, "z", -0.1).tolist() == list(range(8))


@pytest.mark.parametrize("axis,k", [("x", 0), ("y", 1), ("z", 2)])
def test_component_filter_matches_scan(rng, axis, k):
    field = random_field(rng)
    t = 0.1
    expected = [i for i in range(len(field)) if field.valid[i] and field.vectors[i][k] >= t]
    assert filter_by_component(field, axis, t).tolist() == expected


def test_component_filter_bad_axis(rng):
    with pytest.raises(ValueError):
        filter_by_component(random_field(rng), "w", 0.0)


def test_attributes_use_sentinel(rng):
    field = random_field(rng)
    attrs = field.attributes()
    assert set(attrs) == {"don_x", "don_y", "don_z", "don_mag"}
    assert np.all(attrs["don_mag"][~field.valid] == -1.0)
    assert np.all(attrs["don_mag"][field.valid] >= 0.0)
    assert np.all(np.isnan(field.magnitudes[~field.valid]))
