"""Tests for contour extraction and portable map images.

The marching-squares oracle is geometric: on a signed-distance field of
a disc, every extracted segment endpoint must sit within one grid cell
of the true circle, and the endpoints must sweep the full circle with no
large angular gaps.
"""

import numpy as np
import pytest

from reachtube.grid import Domain, ValueGrid
from reachtube.render import (
    heatmap_bytes,
    marching_squares,
    write_pgm,
    write_ppm_overlay,
)


def disc_grid(n=33, radius=1.0, half=2.0):
    domain = Domain([-half, -half], [half, half])
    grid = ValueGrid(domain, np.zeros((n, n)))
    mx, my = grid.meshes()
    return ValueGrid(domain, np.hypot(mx, my) - radius)


class TestMarchingSquares:
    def test_disc_contour_matches_circle(self):
        grid = disc_grid(n=33, radius=1.0)
        segments = marching_squares(grid, 0.0)
        assert len(segments) > 20
        h = max(grid.spacing(0), grid.spacing(1))
        points = np.array([p for seg in segments for p in seg])
        radial_error = np.abs(np.hypot(points[:, 0], points[:, 1]) - 1.0)
        assert radial_error.max() < h

    def test_disc_contour_covers_all_angles(self):
        grid = disc_grid(n=33, radius=1.0)
        points = np.array([p for seg in marching_squares(grid) for p in seg])
        angles = np.sort(np.arctan2(points[:, 1], points[:, 0]))
        gaps = np.diff(np.concatenate([angles, [angles[0] + 2 * np.pi]]))
        assert gaps.max() < 0.5

    def test_nonzero_level_shifts_radius(self):
        # level sets of a signed distance field are concentric circles
        grid = disc_grid(n=33, radius=1.0)
        points = np.array([p for seg in marching_squares(grid, 0.4) for p in seg])
        radial_error = np.abs(np.hypot(points[:, 0], points[:, 1]) - 1.4)
        assert radial_error.max() < max(grid.spacing(0), grid.spacing(1))

    def test_linear_field_gives_exact_vertical_line(self):
        n = 9
        domain = Domain([-1.0, -1.0], [1.0, 1.0])
        grid = ValueGrid(domain, np.zeros((n, n)))
        mx, _ = grid.meshes()
        grid = ValueGrid(domain, np.broadcast_to(mx, (n, n)) - 0.1)
        segments = marching_squares(grid, 0.0)
        # one segment per cell row, all on the line x1 = 0.1
        assert len(segments) == n - 1
        for (x1a, _), (x1b, _) in segments:
            assert x1a == pytest.approx(0.1, abs=1e-12)
            assert x1b == pytest.approx(0.1, abs=1e-12)

    def test_constant_field_has_no_segments(self):
        domain = Domain([0.0, 0.0], [1.0, 1.0])
        grid = ValueGrid(domain, np.ones((5, 5)))
        assert marching_squares(grid, 0.0) == []

    def test_saddle_cells_yield_two_segments(self):
        domain = Domain([0.0, 0.0], [1.0, 1.0])
        for sign in (1.0, -1.0):
            values = sign * np.array([[-1.0, 1.0], [1.0, -1.0]])
            segments = marching_squares(ValueGrid(domain, values), 0.0)
            assert len(segments) == 2
            # equal-magnitude corners put every crossing at an edge midpoint
            for seg in segments:
                for x1, x2 in seg:
                    assert {x1, x2} & {0.5}

    def test_endpoints_lie_on_cell_edges(self):
        grid = disc_grid(n=17, radius=1.2)
        x1 = grid.axis_coordinates(0)
        x2 = grid.axis_coordinates(1)
        for seg in marching_squares(grid):
            for px, py in seg:
                on_x1_line = np.isclose(x1, px, atol=1e-12).any()
                on_x2_line = np.isclose(x2, py, atol=1e-12).any()
                assert on_x1_line or on_x2_line

    def test_requires_2d(self):
        domain = Domain([0.0], [1.0])
        grid = ValueGrid(domain, np.zeros(5))
        with pytest.raises(ValueError, match="2D"):
            marching_squares(grid)


class TestHeatmap:
    def test_orientation_rows_descend_in_x2(self):
        # field equal to the x2 coordinate: brightest row is the top one
        domain = Domain([0.0, 0.0], [1.0, 1.0])
        grid = ValueGrid(domain, np.zeros((4, 6)))
        _, my = grid.meshes()
        img = heatmap_bytes(np.broadcast_to(my, (4, 6)))
        assert img.shape == (6, 4)
        assert np.all(img[0] == 255)
        assert np.all(img[-1] == 0)

    def test_orientation_columns_advance_in_x1(self):
        domain = Domain([0.0, 0.0], [1.0, 1.0])
        grid = ValueGrid(domain, np.zeros((4, 6)))
        mx, _ = grid.meshes()
        img = heatmap_bytes(np.broadcast_to(mx, (4, 6)))
        assert np.all(img[:, 0] == 0)
        assert np.all(img[:, -1] == 255)

    def test_constant_field_maps_to_mid_gray(self):
        img = heatmap_bytes(np.full((3, 3), 4.2))
        assert np.all(img == 127)

    def test_explicit_range_clips(self):
        img = heatmap_bytes(np.array([[-5.0, 0.0, 5.0]]).T, lo=-1.0, hi=1.0)
        assert img.ravel().tolist() == [0, 127, 255]

    def test_rejects_non_2d(self):
        with pytest.raises(ValueError, match="2D"):
            heatmap_bytes(np.zeros(4))


class TestImageFiles:
    def test_pgm_header_and_payload(self, tmp_path):
        path = tmp_path / "field.pgm"
        values = np.arange(40, dtype=float).reshape(8, 5)
        write_pgm(path, values)
        blob = path.read_bytes()
        assert blob.startswith(b"P5\n8 5\n255\n")
        payload = blob[len(b"P5\n8 5\n255\n"):]
        assert len(payload) == 40
        expected = heatmap_bytes(values)
        assert payload == expected.tobytes()

    def test_ppm_overlay_marks_contour_in_red(self, tmp_path):
        grid = disc_grid(n=33, radius=1.0)
        path = tmp_path / "tube.ppm"
        write_ppm_overlay(path, grid, 0.0)
        blob = path.read_bytes()
        header = b"P6\n33 33\n255\n"
        assert blob.startswith(header)
        img = np.frombuffer(blob[len(header):], dtype=np.uint8).reshape(33, 33, 3)
        red = (img[:, :, 0] == 255) & (img[:, :, 1] == 0) & (img[:, :, 2] == 0)
        assert red.sum() > 20
        # red pixels only appear near the true circle
        rows, cols = np.nonzero(red)
        x1 = grid.axis_coordinates(0)[cols]
        x2 = grid.axis_coordinates(1)[32 - rows]
        h = max(grid.spacing(0), grid.spacing(1))
        assert np.abs(np.hypot(x1, x2) - 1.0).max() < 2 * h

    def test_overlay_without_crossing_is_pure_grayscale(self, tmp_path):
        domain = Domain([0.0, 0.0], [1.0, 1.0])
        grid = ValueGrid(domain, np.ones((6, 6)) + np.arange(36.0).reshape(6, 6))
        path = tmp_path / "flat.ppm"
        write_ppm_overlay(path, grid, 0.0)
        blob = path.read_bytes()
        img = np.frombuffer(blob[len(b"P6\n6 6\n255\n"):], dtype=np.uint8)
        img = img.reshape(6, 6, 3)
        assert np.array_equal(img[:, :, 0], img[:, :, 1])
        assert np.array_equal(img[:, :, 0], img[:, :, 2])
        assert np.array_equal(img[:, :, 0], heatmap_bytes(grid.values))
