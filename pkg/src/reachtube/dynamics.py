"""System models: flow fields, optimal Hamiltonians, dissipation bounds.

Each spec describes a two-player game where the control maximizes the value
(tries to keep the state away from the unsafe set) and the disturbance
minimizes it.  Inputs enter affinely in every system, so the max-min
Hamiltonian max_u min_d p.f(x,u,d) splits termwise into closed-form
absolute values.  Dissipation bounds are global per-axis maxima of |f_i|
used by the Lax-Friedrichs scheme.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Domain

__all__ = [
    "Air3DSpec",
    "Dubins4DSpec",
    "TranslationSpec",
    "Scalar1DSpec",
    "flow",
    "hamiltonian",
    "dissipation_bounds",
    "rollout_min_l",
]


def _check_box(name: str, values, bounds):
    values = np.atleast_1d(np.asarray(values, dtype=float))
    if len(values) != len(bounds):
        raise ValueError(f"{name} must have {len(bounds)} components")
    for i, (v, (lo, hi)) in enumerate(zip(values, bounds)):
        if not lo - 1e-12 <= v <= hi + 1e-12:
            raise ValueError(f"{name}[{i}] = {v} outside [{lo}, {hi}]")
    return values


@dataclass(frozen=True)
class Air3DSpec:
    """Planar pursuit in relative coordinates (x1, x2, relative heading x3).

    Vehicle a (control, turn rate bounded by u_max_a) avoids capture by
    vehicle b (disturbance, bound u_max_b); both move at constant speed.
    x3 is periodic on [0, 2pi).  ``capture`` describes the unsafe set: a
    capture radius, or an (evader_shape, pursuer_shape) pair for shaped
    capture sets.
    """

    v_a: float = 5.0
    v_b: float = 5.0
    u_max_a: float = 1.0
    u_max_b: float = 1.0
    capture: object = 5.0

    ndim = 3
    periodic = (False, False, True)
    state_names = ("x1", "x2", "x3")

    def __post_init__(self):
        if self.v_a < 0 or self.v_b < 0 or self.u_max_a < 0 or self.u_max_b < 0:
            raise ValueError("speeds and turn-rate bounds must be >= 0")

    def default_domain(self) -> Domain:
        return Domain([-6.0, -10.0, 0.0], [20.0, 10.0, 2.0 * np.pi], self.periodic)

    @property
    def control_bounds(self):
        return ((-self.u_max_a, self.u_max_a),)

    @property
    def disturbance_bounds(self):
        return ((-self.u_max_b, self.u_max_b),)

    def flow(self, x, u, d) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        (ua,) = _check_box("u", u, self.control_bounds)
        (ub,) = _check_box("d", d, self.disturbance_bounds)
        return np.array(
            [
                -self.v_a + self.v_b * np.cos(x[2]) + ua * x[1],
                self.v_b * np.sin(x[2]) - ua * x[0],
                ub - ua,
            ]
        )

    def hamiltonian(self, xs, ps):
        x1, x2, x3 = xs
        p1, p2, p3 = ps
        return (
            p1 * (-self.v_a + self.v_b * np.cos(x3))
            + p2 * self.v_b * np.sin(x3)
            + self.u_max_a * np.abs(p1 * x2 - p2 * x1 - p3)
            - self.u_max_b * np.abs(p3)
        )

    def dissipation_bounds(self, domain: Domain):
        m1 = max(abs(domain.lo[0]), abs(domain.hi[0]))
        m2 = max(abs(domain.lo[1]), abs(domain.hi[1]))
        return (
            self.v_a + self.v_b + self.u_max_a * m2,
            self.v_b + self.u_max_a * m1,
            self.u_max_a + self.u_max_b,
        )


@dataclass(frozen=True)
class Dubins4DSpec:
    """Car with acceleration and curvature control, position disturbance.

    State (x1, x2, v, theta), theta periodic: x1' = v cos(theta) + d1,
    x2' = v sin(theta) + d2, v' = u1, theta' = v u2.  The control avoids
    the obstacle; the disturbance pushes the position.
    """

    u1_max: float = 1.0
    u2_max: float = 1.0
    d1_max: float = 0.3
    d2_max: float = 0.3
    v_range: tuple[float, float] = (0.0, 3.0)

    ndim = 4
    periodic = (False, False, False, True)
    state_names = ("x1", "x2", "v", "theta")

    def __post_init__(self):
        if min(self.u1_max, self.u2_max, self.d1_max, self.d2_max) < 0:
            raise ValueError("input bounds must be >= 0")
        if not 0.0 <= self.v_range[0] < self.v_range[1]:
            raise ValueError("need 0 <= v_lo < v_hi")

    def default_domain(self) -> Domain:
        return Domain(
            [-5.0, -5.0, self.v_range[0], 0.0],
            [5.0, 5.0, self.v_range[1], 2.0 * np.pi],
            self.periodic,
        )

    @property
    def control_bounds(self):
        return ((-self.u1_max, self.u1_max), (-self.u2_max, self.u2_max))

    @property
    def disturbance_bounds(self):
        return ((-self.d1_max, self.d1_max), (-self.d2_max, self.d2_max))

    def flow(self, x, u, d) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        u1, u2 = _check_box("u", u, self.control_bounds)
        d1, d2 = _check_box("d", d, self.disturbance_bounds)
        return np.array(
            [
                x[2] * np.cos(x[3]) + d1,
                x[2] * np.sin(x[3]) + d2,
                u1,
                x[2] * u2,
            ]
        )

    def hamiltonian(self, xs, ps):
        _, _, v, th = xs
        p1, p2, p3, p4 = ps
        return (
            p1 * v * np.cos(th)
            + p2 * v * np.sin(th)
            + self.u1_max * np.abs(p3)
            + self.u2_max * np.abs(v * p4)
            - self.d1_max * np.abs(p1)
            - self.d2_max * np.abs(p2)
        )

    def dissipation_bounds(self, domain: Domain):
        v_hi = max(abs(domain.lo[2]), abs(domain.hi[2]))
        return (
            v_hi + self.d1_max,
            v_hi + self.d2_max,
            self.u1_max,
            self.u2_max * v_hi,
        )


@dataclass(frozen=True)
class TranslationSpec:
    """Input-free constant drift x' = c; the analytic verification system."""

    c: tuple[float, ...] = (1.0, 0.0)

    def __post_init__(self):
        c = tuple(float(v) for v in np.atleast_1d(self.c))
        if not all(np.isfinite(c)):
            raise ValueError("drift components must be finite")
        object.__setattr__(self, "c", c)

    @property
    def ndim(self) -> int:
        return len(self.c)

    @property
    def periodic(self):
        return (False,) * self.ndim

    @property
    def state_names(self):
        return tuple(f"x{i + 1}" for i in range(self.ndim))

    def default_domain(self) -> Domain:
        return Domain([-2.0] * self.ndim, [2.0] * self.ndim, self.periodic)

    control_bounds = ()
    disturbance_bounds = ()

    def flow(self, x, u=None, d=None) -> np.ndarray:
        if u is not None:
            _check_box("u", u, self.control_bounds)
        if d is not None:
            _check_box("d", d, self.disturbance_bounds)
        return np.array(self.c, dtype=float)

    def hamiltonian(self, xs, ps):
        total = self.c[0] * ps[0]
        for ci, pi in zip(self.c[1:], ps[1:]):
            total = total + ci * pi
        return total

    def dissipation_bounds(self, domain: Domain):
        return tuple(abs(ci) for ci in self.c)


@dataclass(frozen=True)
class Scalar1DSpec:
    """1D tug of war x' = u + d with |u| <= u_max, |d| <= d_max.

    The two analytic regimes: with d_max = 0 the control holds the value at
    its initial level (avoid case); with u_max = 0 the disturbance drags
    every state into the unsafe set (capture case).
    """

    u_max: float = 1.0
    d_max: float = 0.0

    ndim = 1
    periodic = (False,)
    state_names = ("x",)

    def __post_init__(self):
        if self.u_max < 0 or self.d_max < 0:
            raise ValueError("input bounds must be >= 0")

    def default_domain(self) -> Domain:
        return Domain([-4.0], [4.0], self.periodic)

    @property
    def control_bounds(self):
        return ((-self.u_max, self.u_max),)

    @property
    def disturbance_bounds(self):
        return ((-self.d_max, self.d_max),)

    def flow(self, x, u, d) -> np.ndarray:
        (uv,) = _check_box("u", u, self.control_bounds)
        (dv,) = _check_box("d", d, self.disturbance_bounds)
        return np.array([uv + dv])

    def hamiltonian(self, xs, ps):
        return (self.u_max - self.d_max) * np.abs(ps[0])

    def dissipation_bounds(self, domain: Domain):
        return (self.u_max + self.d_max,)


# -- module-level operation wrappers ---------------------------------------

def flow(spec, x, u=None, d=None) -> np.ndarray:
    """State derivative f(x, u, d); raises if u or d leave their boxes."""
    return spec.flow(x, u, d)


def hamiltonian(spec, xs, ps):
    """Optimal Hamiltonian max_u min_d p.f; broadcastable over arrays.

    ``xs`` and ``ps`` are per-axis sequences (scalars or mutually
    broadcastable arrays).
    """
    if len(xs) != spec.ndim or len(ps) != spec.ndim:
        raise ValueError(f"expected {spec.ndim} state and costate components")
    return spec.hamiltonian(tuple(xs), tuple(ps))


def dissipation_bounds(spec, domain: Domain):
    """Per-axis global bounds on |dH/dp_i| = max |f_i| over domain and inputs."""
    if domain.ndim != spec.ndim:
        raise ValueError(f"domain ndim {domain.ndim} != spec ndim {spec.ndim}")
    return spec.dissipation_bounds(domain)


def rollout_min_l(spec: TranslationSpec, scene, x0, horizon: float, dt: float) -> float:
    """Minimum of l along the exact translation trajectory x(t) = x0 + c t.

    ``scene`` is anything with an ``sdf`` method over 2D points (or 1D via
    padding).  Serves as the brute-force oracle for the converged value.
    """
    if not isinstance(spec, TranslationSpec):
        raise TypeError("rollout oracle is defined for TranslationSpec only")
    if dt <= 0 or horizon < 0:
        raise ValueError("need dt > 0 and horizon >= 0")
    x0 = np.asarray(x0, dtype=float)
    c = np.asarray(spec.c, dtype=float)
    times = np.arange(0.0, horizon + 0.5 * dt, dt)
    pts = x0[None, :] + times[:, None] * c[None, :]
    return float(np.min(scene.sdf(pts)))
