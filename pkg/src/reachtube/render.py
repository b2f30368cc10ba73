"""Figure-style output: marching-squares contours and portable map images.

Images are oriented like a plot of the state plane: columns advance with
the first grid axis (x1, rightward) and rows advance against the second
axis (x2, upward).  Heatmaps are 8-bit portable graymaps (P5); contour
overlays are portable pixmaps (P6) with the zero level set drawn in red.
"""

from __future__ import annotations

import numpy as np

from .grid import ValueGrid

__all__ = ["marching_squares", "heatmap_bytes", "write_pgm", "write_ppm_overlay"]

# segment endpoints per marching-squares case, as pairs of cell edges
# (0 = bottom, 1 = right, 2 = top, 3 = left); cases 5 and 10 are resolved
# with the cell-center average at lookup time
_CASE_EDGES = {
    0: [],
    1: [(3, 0)],
    2: [(0, 1)],
    3: [(3, 1)],
    4: [(1, 2)],
    5: None,
    6: [(0, 2)],
    7: [(3, 2)],
    8: [(2, 3)],
    9: [(0, 2)],
    10: None,
    11: [(1, 2)],
    12: [(1, 3)],
    13: [(0, 1)],
    14: [(3, 0)],
    15: [],
}


def _edge_point(edge, i, j, corners, x1, x2, level):
    """State-space crossing point on one edge of cell (i, j)."""
    a, b, c, d = corners  # (i,j), (i+1,j), (i+1,j+1), (i,j+1)
    if edge == 0:  # bottom: (i,j) -> (i+1,j), along axis 0
        t = (level - a) / (b - a)
        return (x1[i] + t * (x1[i + 1] - x1[i]), x2[j])
    if edge == 1:  # right: (i+1,j) -> (i+1,j+1), along axis 1
        t = (level - b) / (c - b)
        return (x1[i + 1], x2[j] + t * (x2[j + 1] - x2[j]))
    if edge == 2:  # top: (i,j+1) -> (i+1,j+1), along axis 0
        t = (level - d) / (c - d)
        return (x1[i] + t * (x1[i + 1] - x1[i]), x2[j + 1])
    # left: (i,j) -> (i,j+1), along axis 1
    t = (level - a) / (d - a)
    return (x1[i], x2[j] + t * (x2[j + 1] - x2[j]))


def marching_squares(grid: ValueGrid, level: float = 0.0) -> list:
    """Extract the level set of a 2D field as state-space line segments.

    Returns a list of ((x1a, x2a), (x1b, x2b)) pairs.  Saddle cells use
    the cell-center average to pick between the two consistent pairings.
    """
    if grid.ndim != 2:
        raise ValueError("marching_squares expects a 2D grid")
    v = grid.values
    x1 = grid.axis_coordinates(0)
    x2 = grid.axis_coordinates(1)
    segments = []
    n1, n2 = v.shape
    for i in range(n1 - 1):
        for j in range(n2 - 1):
            corners = (v[i, j], v[i + 1, j], v[i + 1, j + 1], v[i, j + 1])
            a, b, c, d = corners
            case = (
                (1 if a < level else 0)
                | (2 if b < level else 0)
                | (4 if c < level else 0)
                | (8 if d < level else 0)
            )
            pairs = _CASE_EDGES[case]
            if pairs is None:
                center_inside = (a + b + c + d) / 4.0 < level
                if case == 5:
                    pairs = [(3, 2), (0, 1)] if center_inside else [(3, 0), (1, 2)]
                else:  # case 10
                    pairs = [(3, 0), (1, 2)] if center_inside else [(3, 2), (0, 1)]
            for e1, e2 in pairs:
                segments.append((
                    _edge_point(e1, i, j, corners, x1, x2, level),
                    _edge_point(e2, i, j, corners, x1, x2, level),
                ))
    return segments


def heatmap_bytes(values: np.ndarray, lo: float | None = None,
                  hi: float | None = None) -> np.ndarray:
    """Map a 2D field to a uint8 image array in plot orientation."""
    values = np.asarray(values, dtype=float)
    if values.ndim != 2:
        raise ValueError("heatmap expects a 2D field")
    lo = float(values.min()) if lo is None else lo
    hi = float(values.max()) if hi is None else hi
    if hi - lo < 1e-300:
        scaled = np.full_like(values, 127.0)
    else:
        scaled = np.clip((values - lo) / (hi - lo), 0.0, 1.0) * 255.0
    # rows run against axis 1 (top of image = largest x2), columns along axis 0
    return scaled.T[::-1].astype(np.uint8)


def write_pgm(path, values: np.ndarray, lo: float | None = None,
              hi: float | None = None) -> None:
    """Binary P5 graymap of a 2D field."""
    img = heatmap_bytes(values, lo, hi)
    rows, cols = img.shape
    with open(path, "wb") as handle:
        handle.write(f"P5\n{cols} {rows}\n255\n".encode("ascii"))
        handle.write(img.tobytes())


def _mark_segments(img_rgb, segments, grid: ValueGrid) -> None:
    """Paint contour segments in red onto an RGB image array in place."""
    rows, cols = img_rgb.shape[:2]
    lo1, lo2 = grid.domain.lo
    hi1, hi2 = grid.domain.hi
    span1 = hi1 - lo1 or 1.0
    span2 = hi2 - lo2 or 1.0
    for (p1x, p1y), (p2x, p2y) in segments:
        # segments live inside one cell, so a handful of samples covers them
        for t in np.linspace(0.0, 1.0, 8):
            x = p1x + t * (p2x - p1x)
            y = p1y + t * (p2y - p1y)
            col = int(round((x - lo1) / span1 * (cols - 1)))
            row = rows - 1 - int(round((y - lo2) / span2 * (rows - 1)))
            if 0 <= row < rows and 0 <= col < cols:
                img_rgb[row, col] = (255, 0, 0)


def write_ppm_overlay(path, grid: ValueGrid, level: float = 0.0,
                      lo: float | None = None, hi: float | None = None) -> None:
    """Binary P6 pixmap: grayscale heatmap with the level set drawn in red."""
    gray = heatmap_bytes(grid.values, lo, hi)
    img = np.repeat(gray[:, :, None], 3, axis=2)
    _mark_segments(img, marching_squares(grid, level), grid)
    rows, cols = img.shape[:2]
    with open(path, "wb") as handle:
        handle.write(f"P6\n{cols} {rows}\n255\n".encode("ascii"))
        handle.write(img.tobytes())
