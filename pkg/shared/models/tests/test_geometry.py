# test_geometry.py
#
# Discretization parameters, angle sets and grid coordinates.
#
# Run:
#   pytest shared/models/tests/test_geometry.py -q

from __future__ import annotations

import math

import numpy as np
import pytest

from shared.models.geometry import (
    Explicit,
    FullEquispaced,
    GeometryError,
    Image,
    ImageGrid,
    Limited,
    Sinogram,
    SinogramGrid,
    make_params,
    width_sum_ok,
)


def test_full_equispaced_small():
    params = make_params(4, 4, FullEquispaced(2))
    assert params.delta_x == 0.5
    assert params.delta_s == 0.5
    assert params.angles == (0.0, math.pi / 2)
    assert params.angular_widths == (math.pi / 2, math.pi / 2)
    assert params.is_equispaced


def test_full_equispaced_large():
    params = make_params(4096, 4096, FullEquispaced(1800))
    assert params.delta_x == params.delta_s == 2 / 4096
    assert params.delta_phi == pytest.approx(math.pi / 1800, rel=1e-15)
    assert params.n_phi == 1800
    assert width_sum_ok(params)


def test_explicit_uses_literal_cells():
    params = make_params(2, 2, Explicit([0.1, 0.2, 3.0]))
    w = params.angular_widths
    assert w[0] == pytest.approx(0.15, abs=1e-15)
    assert w[1] == pytest.approx(1.45, abs=1e-15)
    assert w[2] == pytest.approx(math.pi - 1.6, abs=1e-15)
    assert width_sum_ok(params)
    assert not params.is_equispaced


def test_single_explicit_angle_covers_full_range():
    params = make_params(8, 8, Explicit([1.0]))
    assert params.angular_widths == (math.pi,)


def test_limited_angles_sit_at_cell_midpoints():
    params = make_params(8, 8, Limited(0.0, math.pi / 2, 4))
    step = math.pi / 8
    assert list(params.angles) == pytest.approx([step * (q + 0.5) for q in range(4)], abs=1e-15)
    assert list(params.angular_widths) == pytest.approx([step] * 4, abs=1e-15)
    assert sum(params.angular_widths) == pytest.approx(math.pi / 2, abs=1e-12)
    assert not width_sum_ok(params)


@pytest.mark.parametrize("angle_set", [
    FullEquispaced(0),
    Explicit([]),
    Explicit([0.5, 0.5]),
    Explicit([0.6, 0.2]),
    Explicit([-0.1, 0.3]),
    Explicit([0.3, math.pi]),
    Explicit([0.3, float("nan")]),
    Limited(1.0, 1.0, 3),
    Limited(0.0, 4.0, 3),
    Limited(0.0, 1.0, 0),
])
def test_invalid_angle_sets(angle_set):
    with pytest.raises(GeometryError):
        make_params(4, 4, angle_set)


@pytest.mark.parametrize("n_x, n_s", [(0, 4), (4, 0), (-2, 4), (2.5, 4)])
def test_invalid_pixel_counts(n_x, n_s):
    with pytest.raises(GeometryError):
        make_params(n_x, n_s, FullEquispaced(3))


@pytest.mark.parametrize("n_x, i, j, expected", [
    (2, 0, 0, (-0.5, -0.5)),
    (2, 1, 1, (0.5, 0.5)),
    (4, 3, 0, (0.75, -0.75)),
])
def test_pixel_center(n_x, i, j, expected):
    grid = ImageGrid(make_params(n_x, n_x, FullEquispaced(1)))
    assert grid.pixel_center(i, j) == expected


@pytest.mark.parametrize("n_s, p, expected", [(2, 0, -0.5), (2, 1, 0.5), (4, 3, 0.75)])
def test_detector_center(n_s, p, expected):
    grid = SinogramGrid(make_params(2, n_s, FullEquispaced(1)))
    assert grid.detector_center(p) == expected


def test_out_of_range_indices():
    params = make_params(4, 3, FullEquispaced(2))
    with pytest.raises(GeometryError):
        ImageGrid(params).pixel_center(4, 0)
    with pytest.raises(GeometryError):
        ImageGrid(params).pixel_center(0, -1)
    with pytest.raises(GeometryError):
        SinogramGrid(params).detector_center(3)


def test_centers_are_affine_and_interior():
    grid = ImageGrid(make_params(10, 10, FullEquispaced(1)))
    c = grid.coordinates()
    np.testing.assert_allclose(np.diff(c), grid.delta_x, rtol=1e-14)
    X, Y = grid.centers()
    assert X[7, 2] == c[7] and Y[7, 2] == c[2]
    assert np.all(np.abs(X) < 1.0) and np.all(np.abs(Y) < 1.0)


def test_direction_and_perpendicular():
    grid = SinogramGrid(make_params(2, 2, Explicit([0.0, math.pi / 3])))
    assert grid.direction(0) == (1.0, 0.0)
    c, s = grid.direction(1)
    pc, ps = grid.perpendicular(1)
    assert c * pc + s * ps == pytest.approx(0.0, abs=1e-16)


def test_coefficient_arrays_are_row_major():
    params = make_params(3, 5, FullEquispaced(2))
    image = Image.from_array(ImageGrid(params), np.arange(9.0).reshape(3, 3))
    assert image.values[1 * 3 + 2] == image.as_array()[1, 2] == 5.0
    sino = Sinogram.from_array(SinogramGrid(params), np.arange(10.0).reshape(2, 5))
    assert sino.values[1 * 5 + 3] == sino.as_array()[1, 3] == 8.0


def test_coefficient_arrays_check_their_size():
    params = make_params(3, 5, FullEquispaced(2))
    with pytest.raises(GeometryError):
        Image(ImageGrid(params), np.zeros(8))
    with pytest.raises(GeometryError):
        Sinogram(SinogramGrid(params), np.zeros(9))


@pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
def test_coefficient_arrays_must_be_finite(bad):
    params = make_params(3, 5, FullEquispaced(2))
    values = np.zeros(9)
    values[4] = bad
    with pytest.raises(GeometryError, match="non-finite"):
        Image(ImageGrid(params), values)
    with pytest.raises(GeometryError, match="non-finite"):
        Sinogram.from_array(SinogramGrid(params), np.full((2, 5), bad))

