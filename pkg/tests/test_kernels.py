"""Compiled and pure-numpy kernel backends must be interchangeable."""

import numpy as np
import pytest

from shrimpmorph import _kernels
from shrimpmorph._kernels import numpy_backend


def backends():
    out = [("numpy", numpy_backend)]
    if _kernels.BACKEND == "cython":
        from shrimpmorph._kernels import _fast

        out.append(("cython", _fast))
    return out


@pytest.fixture(params=backends(), ids=lambda p: p[0])
def backend(request):
    return request.param[1]


def test_selected_backend_is_exposed():
    assert _kernels.BACKEND in ("cython", "numpy")
    assert callable(_kernels.render_gaussians)
    assert callable(_kernels.decode_peaks)


def test_render_peak_value_and_location(backend):
    centers = np.array([[10.0, 6.0], [3.25, 14.75]])
    maps = np.asarray(backend.render_gaussians(centers, 2.0, 20, 24))
    assert maps.shape == (20, 24, 2)
    # peak cell is the rounded center and carries a value close to 1
    assert maps[6, 10, 0] == maps[:, :, 0].max()
    assert maps[6, 10, 0] == pytest.approx(1.0)
    iy, ix = np.unravel_index(np.argmax(maps[:, :, 1]), (20, 24))
    assert (ix, iy) == (3, 15)


def test_render_matches_formula(backend):
    """Every cell equals exp(-((x-cx)^2+(y-cy)^2)/(2 sigma^2))."""
    centers = np.array([[5.5, 7.25]])
    sigma = 1.5
    maps = np.asarray(backend.render_gaussians(centers, sigma, 12, 16))
    ys, xs = np.mgrid[0:12, 0:16]
    expected = np.exp(-((xs - 5.5) ** 2 + (ys - 7.25) ** 2) / (2 * sigma**2))
    np.testing.assert_allclose(maps[:, :, 0], expected, atol=1e-12)


def test_decode_exact_on_gaussian(backend):
    rng = np.random.default_rng(11)
    centers = np.stack(
        [rng.uniform(3, 28, size=15), rng.uniform(3, 20, size=15)], axis=1
    )
    maps = np.asarray(backend.render_gaussians(centers, 2.0, 24, 32))
    decoded = np.asarray(backend.decode_peaks(maps))
    # log-parabolic refinement recovers Gaussian centers to float precision
    np.testing.assert_allclose(decoded, centers, atol=1e-9)


def test_decode_tie_break_is_row_major(backend):
    maps = np.zeros((6, 6, 1))
    maps[2, 3, 0] = 1.0
    maps[4, 1, 0] = 1.0  # same value later in row-major order
    decoded = np.asarray(backend.decode_peaks(maps))
    x, y = decoded[0]
    # ties go to the first row-major argmax; sub-cell shift stays within 0.5
    assert abs(y - 2) <= 0.5 and abs(x - 3) <= 0.5


def test_decode_corner_peak_shifts_inward(backend):
    # at a corner the missing neighbors lose the comparison, so the quarter
    # shift points toward the interior on both axes
    maps = np.zeros((5, 7, 1))
    maps[0, 0, 0] = 1.0
    decoded = np.asarray(backend.decode_peaks(maps))
    assert tuple(decoded[0]) == (0.25, 0.25)
    # a flat field decodes to the row-major first cell, again shifted inward
    flat = np.full((5, 7, 1), 0.5)
    fx, fy = np.asarray(backend.decode_peaks(flat))[0]
    assert (fx, fy) == (0.25, 0.25)


def test_decode_quarter_shift_fallback(backend):
    # non-positive neighbor: log-parabola unusable, falls back to +-0.25
    maps = np.zeros((5, 7, 1))
    maps[2, 3, 0] = 1.0
    maps[2, 4, 0] = 0.5
    decoded = np.asarray(backend.decode_peaks(maps))
    x, y = decoded[0]
    assert x == pytest.approx(3.25)
    assert y == pytest.approx(2.0)


def test_backends_agree_bitwise_enough():
    if _kernels.BACKEND != "cython":
        pytest.skip("compiled backend unavailable")
    from shrimpmorph._kernels import _fast

    rng = np.random.default_rng(7)
    centers = np.stack([rng.uniform(0, 31, 23), rng.uniform(0, 23, 23)], axis=1)
    a = np.asarray(_fast.render_gaussians(centers, 2.0, 24, 32))
    b = numpy_backend.render_gaussians(centers, 2.0, 24, 32)
    np.testing.assert_allclose(a, b, atol=1e-13)
    da = np.asarray(_fast.decode_peaks(a))
    db = numpy_backend.decode_peaks(b)
    np.testing.assert_allclose(da, db, atol=1e-10)


def test_force_numpy_env(tmp_path):
    import subprocess
    import sys

    code = "import shrimpmorph._kernels as k; print(k.BACKEND)"
    out = subprocess.run(
        [sys.executable, "-c", code],
        capture_output=True,
        text=True,
        env={"PATH": "/usr/bin:/bin", "SHRIMPMORPH_FORCE_NUMPY": "1"},
        cwd=tmp_path,
    )
    assert out.stdout.strip() == "numpy"
