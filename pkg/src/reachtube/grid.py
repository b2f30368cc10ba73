"""Uniform-grid scalar fields over box domains.

A :class:`ValueGrid` stores one scalar per node of a uniformly sampled box
domain.  Non-periodic axes include both endpoints (spacing ``(hi-lo)/(n-1)``);
periodic axes cover ``[lo, hi)`` with no duplicated seam node (spacing
``(hi-lo)/n``), which matches FFT conventions.  Values are stored row-major
with axis 0 slowest.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

__all__ = ["Domain", "ValueGrid"]


@dataclass(frozen=True)
class Domain:
    """Axis-aligned box domain with per-axis periodicity flags."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    periodic: tuple[bool, ...]

    def __init__(self, lo, hi, periodic=None):
        lo = tuple(float(v) for v in np.atleast_1d(lo))
        hi = tuple(float(v) for v in np.atleast_1d(hi))
        if len(lo) != len(hi) or len(lo) < 1:
            raise ValueError(f"lo/hi must be equal-length, non-empty: {lo} vs {hi}")
        if periodic is None:
            periodic = (False,) * len(lo)
        periodic = tuple(bool(p) for p in np.atleast_1d(periodic))
        if len(periodic) != len(lo):
            raise ValueError("periodic flags must match the number of axes")
        for i, (a, b) in enumerate(zip(lo, hi)):
            if not a < b:
                raise ValueError(f"axis {i}: lo must be < hi, got [{a}, {b}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "periodic", periodic)

    @property
    def ndim(self) -> int:
        return len(self.lo)

    def extent(self, axis: int) -> float:
        return self.hi[axis] - self.lo[axis]

    def diagonal(self) -> float:
        return float(np.sqrt(sum(self.extent(i) ** 2 for i in range(self.ndim))))


class ValueGrid:
    """Scalar field sampled on a uniform grid over a :class:`Domain`.

    Parameters
    ----------
    domain:
        Box domain the samples cover.
    values:
        Array of shape ``shape`` (one scalar per node), row-major, axis 0
        slowest.  Copied defensively unless ``copy=False``.
    """

    def __init__(self, domain: Domain, values: np.ndarray, copy: bool = True):
        values = np.array(values, dtype=float, copy=copy)
        if values.ndim != domain.ndim:
            raise ValueError(
                f"values ndim {values.ndim} does not match domain ndim {domain.ndim}"
            )
        for axis, n in enumerate(values.shape):
            min_n = 1 if domain.periodic[axis] else 2
            if n < min_n:
                raise ValueError(f"axis {axis}: need at least {min_n} samples, got {n}")
        if not np.all(np.isfinite(values)):
            raise ValueError("grid values must be finite")
        self.domain = domain
        self.values = values

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def ndim(self) -> int:
        return self.domain.ndim

    def spacing(self, axis: int) -> float:
        n = self.shape[axis]
        if self.domain.periodic[axis]:
            return self.domain.extent(axis) / n
        return self.domain.extent(axis) / (n - 1)

    def spacings(self) -> tuple[float, ...]:
        return tuple(self.spacing(i) for i in range(self.ndim))

    # -- node coordinates ---------------------------------------------------

    def axis_coordinates(self, axis: int) -> np.ndarray:
        """Node locations along one axis (periodic axes never reach hi)."""
        n = self.shape[axis]
        lo = self.domain.lo[axis]
        return lo + self.spacing(axis) * np.arange(n)

    def coordinates(self, index) -> tuple[float, ...]:
        """State-space location of the node at a per-axis integer index."""
        index = tuple(np.atleast_1d(index).astype(int))
        if len(index) != self.ndim:
            raise IndexError(f"index must have {self.ndim} entries, got {len(index)}")
        out = []
        for axis, i in enumerate(index):
            if not 0 <= i < self.shape[axis]:
                raise IndexError(
                    f"axis {axis}: index {i} out of range [0, {self.shape[axis]})"
                )
            out.append(self.domain.lo[axis] + i * self.spacing(axis))
        return tuple(out)

    def meshes(self) -> tuple[np.ndarray, ...]:
        """Per-axis coordinate arrays broadcastable to the grid shape."""
        out = []
        for axis in range(self.ndim):
            c = self.axis_coordinates(axis)
            shp = [1] * self.ndim
            shp[axis] = self.shape[axis]
            out.append(c.reshape(shp))
        return tuple(out)

    # -- linear index round-trip --------------------------------------------

    def linear_index(self, index) -> int:
        return int(np.ravel_multi_index(tuple(index), self.shape))

    def multi_index(self, linear: int) -> tuple[int, ...]:
        return tuple(int(i) for i in np.unravel_index(linear, self.shape))

    # -- interpolation ------------------------------------------------------

    def interpolate(self, points, clamp: bool = False):
        """Multilinear interpolation at one point or an (N, ndim) batch.

        Periodic axes wrap across the seam.  On non-periodic axes, points
        outside the extent raise ``ValueError`` unless ``clamp`` is set, in
        which case they are clamped to the boundary with a warning.
        """
        pts = np.asarray(points, dtype=float)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        if pts.shape[1] != self.ndim:
            raise ValueError(f"points must have {self.ndim} columns")

        # Fractional node coordinates per axis, plus the flooring split.
        base = np.empty(pts.shape, dtype=int)
        frac = np.empty(pts.shape, dtype=float)
        for axis in range(self.ndim):
            dx = self.spacing(axis)
            u = (pts[:, axis] - self.domain.lo[axis]) / dx
            n = self.shape[axis]
            if self.domain.periodic[axis]:
                u = np.mod(u, n)
            else:
                tol = 1e-9 * max(1.0, n - 1)
                low, high = -tol, (n - 1) + tol
                bad = (u < low) | (u > high)
                if np.any(bad):
                    if not clamp:
                        raise ValueError(
                            f"point outside non-periodic axis {axis} extent "
                            f"[{self.domain.lo[axis]}, {self.domain.hi[axis]}]"
                        )
                    warnings.warn(
                        f"clamping {int(bad.sum())} point(s) to axis {axis} boundary",
                        stacklevel=2,
                    )
                u = np.clip(u, 0.0, n - 1)
            b = np.floor(u).astype(int)
            # Keep the upper cell valid on non-periodic axes (u == n-1).
            if not self.domain.periodic[axis]:
                b = np.minimum(b, n - 2)
            frac[:, axis] = u - b
            base[:, axis] = b

        flat = self.values.ravel()
        out = np.zeros(pts.shape[0], dtype=float)
        for corner in range(1 << self.ndim):
            w = np.ones(pts.shape[0], dtype=float)
            idx = []
            for axis in range(self.ndim):
                hi_side = (corner >> axis) & 1
                node = base[:, axis] + hi_side
                if self.domain.periodic[axis]:
                    node = np.mod(node, self.shape[axis])
                idx.append(node)
                w *= frac[:, axis] if hi_side else (1.0 - frac[:, axis])
            out += w * flat[np.ravel_multi_index(tuple(idx), self.shape)]
        return float(out[0]) if single else out

    # -- slicing / resampling -----------------------------------------------

    def slice(self, fixed) -> "ValueGrid":
        """Extract the sub-grid with the given ``(axis, index)`` pairs fixed.

        The returned grid covers the remaining axes; values are copied.
        """
        fixed = list(fixed)
        axes = [a for a, _ in fixed]
        if len(set(axes)) != len(axes):
            raise ValueError("fixed axes must be distinct")
        if len(axes) >= self.ndim:
            raise ValueError("cannot fix every axis; read the node value instead")
        indexer: list = [slice(None)] * self.ndim
        for axis, i in fixed:
            if not 0 <= axis < self.ndim:
                raise IndexError(f"axis {axis} out of range")
            if not 0 <= i < self.shape[axis]:
                raise IndexError(f"index {i} out of range on axis {axis}")
            indexer[axis] = i
        keep = [a for a in range(self.ndim) if a not in axes]
        sub = Domain(
            [self.domain.lo[a] for a in keep],
            [self.domain.hi[a] for a in keep],
            [self.domain.periodic[a] for a in keep],
        )
        return ValueGrid(sub, self.values[tuple(indexer)].copy(), copy=False)

    def resample(self, new_shape) -> "ValueGrid":
        """Multilinear resampling onto a new uniform shape over the same domain."""
        new_shape = tuple(int(n) for n in np.atleast_1d(new_shape))
        if len(new_shape) != self.ndim:
            raise ValueError(f"new_shape must have {self.ndim} entries")
        for axis, n in enumerate(new_shape):
            min_n = 1 if self.domain.periodic[axis] else 2
            if n < min_n:
                raise ValueError(f"axis {axis}: need at least {min_n} samples")
        target = ValueGrid(self.domain, np.zeros(new_shape), copy=False)
        axes = [target.axis_coordinates(a) for a in range(self.ndim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.column_stack([m.ravel() for m in mesh])
        vals = self.interpolate(pts).reshape(new_shape)
        return ValueGrid(self.domain, vals, copy=False)

    # -- misc ---------------------------------------------------------------

    def copy(self) -> "ValueGrid":
        return ValueGrid(self.domain, self.values.copy(), copy=False)

    def __repr__(self) -> str:
        return (
            f"ValueGrid(shape={self.shape}, lo={self.domain.lo}, "
            f"hi={self.domain.hi}, periodic={self.domain.periodic})"
        )


def sample_function(domain: Domain, shape, fn) -> ValueGrid:
    """Build a grid by evaluating ``fn(points)`` on all nodes.

    ``fn`` receives an ``(N, ndim)`` array and must return ``N`` scalars.
    """
    shape = tuple(int(n) for n in np.atleast_1d(shape))
    g = ValueGrid(domain, np.zeros(shape), copy=False)
    axes = [g.axis_coordinates(a) for a in range(domain.ndim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.column_stack([m.ravel() for m in mesh])
    return ValueGrid(domain, np.asarray(fn(pts), dtype=float).reshape(shape), copy=False)
