# test_operators_hard.py
#
# Exhaustive small-grid sweep:
# - every n_x, n_s in 1..16 with random n_phi in 1..8, both weight kinds
# - matrix-free forward/backward vs the dense matrices
# - matrix-free vs the brute-force loops
#
# Slow (a few hundred dense assemblies); run with:
#   pytest services/projection/tests/test_operators_hard.py -q --runslow

from __future__ import annotations

import math

import numpy as np
import pytest

from shared.models.geometry import Explicit, FullEquispaced, Image, ImageGrid, Sinogram, SinogramGrid, make_params
from services.projection.operators import assemble_dense, back_project, forward_project
from services.projection.oracle import brute_force_backward, brute_force_forward
from services.projection.weights import WeightKind

pytestmark = pytest.mark.slow

KINDS = (WeightKind.RAY_DRIVEN, WeightKind.PIXEL_DRIVEN)


def _configs():
    rng = np.random.default_rng(1616)
    for n_x in range(1, 17):
        for n_s in range(1, 17):
            yield n_x, n_s, int(rng.integers(1, 9))


@pytest.mark.parametrize("kind", KINDS)
def test_all_small_grids_match_dense(kind):
    rng = np.random.default_rng(4242)
    failures = []
    for n_x, n_s, n_phi in _configs():
        params = make_params(n_x, n_s, FullEquispaced(n_phi))
        img_grid, sino_grid = ImageGrid(params), SinogramGrid(params)
        pair = assemble_dense(params, kind)
        f = rng.standard_normal(n_x * n_x)
        g = rng.standard_normal(n_phi * n_s)
        fwd = forward_project(Image(img_grid, f), sino_grid, kind).values
        bwd = back_project(Sinogram(sino_grid, g), img_grid, kind).values
        ok_f = np.all(np.abs(fwd - pair.a_matrix @ f) <= 1e-14 * (np.abs(pair.a_matrix) @ np.abs(f)) + 1e-300)
        ok_b = np.all(np.abs(bwd - pair.b_matrix @ g) <= 1e-14 * (np.abs(pair.b_matrix) @ np.abs(g)) + 1e-300)
        if not (ok_f and ok_b):
            failures.append((n_x, n_s, n_phi, bool(ok_f), bool(ok_b)))
    assert not failures, f"{kind.value} mismatches: {failures}"


@pytest.mark.parametrize("kind", KINDS)
def test_random_explicit_angles_match_brute_force(kind):
    rng = np.random.default_rng(808)
    for _ in range(40):
        n_x, n_s = int(rng.integers(1, 49)), int(rng.integers(1, 49))
        angles = np.unique(rng.uniform(0.0, math.pi, int(rng.integers(1, 7))))
        params = make_params(n_x, n_s, Explicit(angles))
        img_grid, sino_grid = ImageGrid(params), SinogramGrid(params)
        f = Image(img_grid, rng.standard_normal(n_x * n_x))
        g = Sinogram(sino_grid, rng.standard_normal(params.n_phi * n_s))
        np.testing.assert_array_equal(forward_project(f, sino_grid, kind).values,
                                      brute_force_forward(f, sino_grid, kind).values)
        np.testing.assert_array_equal(back_project(g, img_grid, kind).values,
                                      brute_force_backward(g, img_grid, kind).values)
