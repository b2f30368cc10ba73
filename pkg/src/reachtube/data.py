"""Experiment generators, dataset assembly, and the binary dataset format.

Six experiment families produce (input, target) pairs for operator
training.  Each sample's target is a 2D slice of a converged value
function computed by the grid solver (never hand-made); the input stacks
the matching slice of the initial value function with coordinate
channels and one constant channel per hyperparameter, so the channel
count is always ``3 + len(h)``.

Reproducibility: every sample derives a private integer seed from
``(spec.seed, split, index)`` through a seed sequence, with split 0 for
train and 1 for test, so the two splits draw from disjoint streams and
any sample can be regenerated from its stored ``(experiment_id, seed,
h)`` triple at any resolution (`regenerate_instance`).

Slice conventions (desk scale): the planar car state is
(x1, x2, v, theta) on a (resolution, resolution, 9, 12) grid; samples
slice v at its mid node 1.5 and theta at 0, except the velocity
experiment which draws the v node per sample.  The pursuit system state
is (x1, x2, relative heading) on (resolution, resolution, 16) and slices
the heading at pi.
"""

from __future__ import annotations

import hashlib
import logging
import struct
from dataclasses import dataclass, field

import numpy as np

from .dynamics import Air3DSpec, Dubins4DSpec
from .geometry import (
    Disc,
    Scene,
    VelocityRadiusLaw,
    gen_indoor_scene,
    minkowski_difference_hull,
    polyline_sdf,
    random_smooth_shape,
    rasterize_l,
    velocity_radius,
)
from .grid import Domain, ValueGrid
from .hji import SolveResult, SolverConfig, solve

__all__ = [
    "EXPERIMENT_IDS",
    "EXPERIMENT_NAMES",
    "Provenance",
    "Sample",
    "ExperimentSpec",
    "Instance",
    "GeneratedData",
    "GENERATOR_KINDS",
    "DatasetError",
    "build_instance",
    "regenerate_instance",
    "solve_instance",
    "derive_seed",
    "build_input",
    "generate",
    "stack_samples",
    "sample_domain",
    "solver_config_hash",
    "write_dataset",
    "read_dataset",
]

logger = logging.getLogger("reachtube.data")

EXPERIMENT_IDS = {
    "air3d": 0,
    "single_obstacle": 1,
    "two_obstacles": 2,
    "indoor": 3,
    "velocity": 4,
    "parametric": 5,
    # single-instance artifacts from the drift-field smoke solver; not a
    # generator family and not regenerable from a seed alone
    "translation": 6,
}
EXPERIMENT_NAMES = {v: k for k, v in EXPERIMENT_IDS.items()}
GENERATOR_KINDS = tuple(k for k in EXPERIMENT_IDS if k != "translation")

# non-spatial grid axes for the planar car (v nodes, theta nodes) and the
# pursuit system (relative-heading nodes); odd v count puts 1.5 on a node
V_SHAPE = 9
THETA_SHAPE = 12
X3_SHAPE = 16

# scene parameter ranges, in state units of the default domains
AIR3D_SHAPE_RADII = (1.0, 2.5)
SINGLE_SHAPE_RADII = (0.8, 2.0)
SINGLE_CENTER_BOX = 2.5
TWO_SHAPE_RADII = (0.6, 1.4)
TWO_SEPARATION = (1.5, 3.5)
VELOCITY_RANGES = {
    "r0": (0.3, 0.8),
    "a": (0.1, 0.4),
    "b_exponential": (0.2, 0.5),
    "b_logarithmic": (0.5, 2.0),
    "center_box": 2.0,
}
PARAMETRIC_RANGE = (0.5, 2.0)
PARAMETRIC_GRID = 10


# --- core types -------------------------------------------------------------


@dataclass(frozen=True)
class Provenance:
    experiment_id: int
    seed: int
    config_hash: str = ""


@dataclass
class Sample:
    """One operator training pair plus the metadata to regenerate it."""

    input: np.ndarray  # (n1, n2, 3 + len(h)) float32
    target: np.ndarray  # (n1, n2, 1) float32
    h: tuple
    bounds: tuple  # (lo1, hi1, lo2, hi2) of the 2D slice domain
    provenance: Provenance

    def __post_init__(self):
        self.input = np.asarray(self.input, dtype=np.float32)
        self.target = np.asarray(self.target, dtype=np.float32)
        self.h = tuple(float(np.float32(v)) for v in self.h)
        self.bounds = tuple(float(np.float32(v)) for v in self.bounds)
        if self.input.ndim != 3 or self.target.ndim != 3 or self.target.shape[2] != 1:
            raise ValueError("input must be (n1, n2, C), target (n1, n2, 1)")
        if self.input.shape[:2] != self.target.shape[:2]:
            raise ValueError("input and target grids differ")
        if self.input.shape[2] != 3 + len(self.h):
            raise ValueError(
                f"channel count {self.input.shape[2]} != 3 + len(h) = {3 + len(self.h)}"
            )
        if len(self.bounds) != 4:
            raise ValueError("bounds must be (lo1, hi1, lo2, hi2)")


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str
    n_train: int = 60
    n_test: int = 20
    resolution: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.kind not in GENERATOR_KINDS:
            raise ValueError(f"no generator for experiment kind {self.kind!r}")
        if self.n_train < 1 or self.n_test < 1:
            raise ValueError("need n_train, n_test >= 1")
        if self.resolution < 16:
            raise ValueError("need resolution >= 16")


@dataclass
class Instance:
    """Everything needed to solve one experiment configuration."""

    kind: str
    seed: int
    dynamics: object
    domain: Domain
    l: np.ndarray  # initial values on the full-dimensional grid
    fixed: tuple  # (axis, index) pairs selecting the emitted 2D slice
    h: tuple
    scene: Scene | None = None
    parts: tuple = ()  # two_obstacles: the two single-obstacle scenes


@dataclass
class GeneratedData:
    train: list
    test: list
    audits: list = field(default_factory=list)  # per-solve convergence records


class DatasetError(ValueError):
    """Malformed dataset bytes; message names the byte offset."""


# --- seeding and hashing ----------------------------------------------------


def derive_seed(base_seed: int, split: int, index: int) -> int:
    """Collision-resistant per-sample seed; split 0 = train, 1 = test."""
    state = np.random.SeedSequence([int(base_seed), int(split), int(index)])
    return int(state.generate_state(1, np.uint64)[0])


def solver_config_hash(config: SolverConfig) -> str:
    blob = struct.pack(
        "<dddI",
        config.cfl,
        config.convergence_tol,
        config.max_horizon,
        config.check_interval,
    )
    return hashlib.sha256(blob).hexdigest()[:16]


# --- instance builders ------------------------------------------------------


def _dubins_l_from_2d(l2d: np.ndarray, v_shape: int, theta_shape: int) -> np.ndarray:
    return np.broadcast_to(
        l2d[:, :, None, None], l2d.shape + (v_shape, theta_shape)
    ).copy()


def _spatial_points(domain: Domain, resolution: int):
    g = ValueGrid(domain, np.zeros((resolution, resolution)), copy=False)
    mx, my = np.meshgrid(g.axis_coordinates(0), g.axis_coordinates(1), indexing="ij")
    return np.column_stack([mx.ravel(), my.ravel()])


def build_instance(
    kind: str,
    seed: int,
    resolution: int,
    *,
    hyper: dict | None = None,
    v_shape: int = V_SHAPE,
    theta_shape: int = THETA_SHAPE,
    x3_shape: int = X3_SHAPE,
) -> Instance:
    """Deterministically build one experiment instance from its seed.

    All random draws come from a generator seeded with ``seed`` in a fixed
    order, so the same seed reproduces the same scene at any resolution.
    ``hyper`` supplies the control-bound pair for the parametric family,
    which lives on a designed grid rather than in the random stream.
    """
    if kind not in GENERATOR_KINDS:
        raise ValueError(f"no generator for experiment kind {kind!r}")
    rng = np.random.default_rng(int(seed))

    if kind == "air3d":
        shape_a = random_smooth_shape(rng, r_min=AIR3D_SHAPE_RADII[0], r_max=AIR3D_SHAPE_RADII[1])
        shape_b = random_smooth_shape(rng, r_min=AIR3D_SHAPE_RADII[0], r_max=AIR3D_SHAPE_RADII[1])
        dyn = Air3DSpec(capture=(shape_a, shape_b))
        domain = dyn.default_domain()
        pts = _spatial_points(Domain(domain.lo[:2], domain.hi[:2]), resolution)
        l = np.empty((resolution, resolution, x3_shape))
        for k in range(x3_shape):
            x3 = 2.0 * np.pi * k / x3_shape
            hull = minkowski_difference_hull(shape_a, shape_b, x3)
            l[:, :, k] = polyline_sdf(hull, pts).reshape(resolution, resolution)
        slice_index = x3_shape // 2  # relative heading pi
        x3_value = 2.0 * np.pi * slice_index / x3_shape
        return Instance(
            kind, seed, dyn, domain, l, ((2, slice_index),), (x3_value,), scene=None
        )

    # planar car families share the grid and slice conventions
    dyn = Dubins4DSpec()
    v_mid_index = v_shape // 2
    fixed = ((2, v_mid_index), (3, 0))

    def v_of(index):
        lo, hi = dyn.v_range
        return lo + (hi - lo) * index / (v_shape - 1)

    spatial = Domain(dyn.default_domain().lo[:2], dyn.default_domain().hi[:2])

    if kind == "single_obstacle":
        center = rng.uniform(-SINGLE_CENTER_BOX, SINGLE_CENTER_BOX, size=2)
        scene = Scene((random_smooth_shape(
            rng, r_min=SINGLE_SHAPE_RADII[0], r_max=SINGLE_SHAPE_RADII[1], center=center
        ),))
        l2d = rasterize_l(scene, spatial, (resolution, resolution)).values
        l = _dubins_l_from_2d(l2d, v_shape, theta_shape)
        return Instance(kind, seed, dyn, dyn.default_domain(), l, fixed,
                        (v_of(v_mid_index), 0.0), scene=scene)

    if kind == "two_obstacles":
        separation = rng.uniform(*TWO_SEPARATION)
        angle = rng.uniform(0.0, 2.0 * np.pi)
        offset = 0.5 * separation * np.array([np.cos(angle), np.sin(angle)])
        blob_a = random_smooth_shape(rng, r_min=TWO_SHAPE_RADII[0],
                                     r_max=TWO_SHAPE_RADII[1], center=offset)
        blob_b = random_smooth_shape(rng, r_min=TWO_SHAPE_RADII[0],
                                     r_max=TWO_SHAPE_RADII[1], center=-offset)
        scene = Scene((blob_a, blob_b))
        l2d = rasterize_l(scene, spatial, (resolution, resolution)).values
        l = _dubins_l_from_2d(l2d, v_shape, theta_shape)
        return Instance(kind, seed, dyn, dyn.default_domain(), l, fixed,
                        (v_of(v_mid_index), 0.0), scene=scene,
                        parts=(Scene((blob_a,)), Scene((blob_b,))))

    if kind == "indoor":
        scene = gen_indoor_scene(seed)
        l2d = rasterize_l(scene, spatial, (resolution, resolution)).values
        l = _dubins_l_from_2d(l2d, v_shape, theta_shape)
        return Instance(kind, seed, dyn, dyn.default_domain(), l, fixed,
                        (v_of(v_mid_index), 0.0), scene=scene)

    if kind == "velocity":
        law_kind = "exponential" if rng.uniform() < 0.5 else "logarithmic"
        r0 = rng.uniform(*VELOCITY_RANGES["r0"])
        a = rng.uniform(*VELOCITY_RANGES["a"])
        b = rng.uniform(*VELOCITY_RANGES[f"b_{law_kind}"])
        law = VelocityRadiusLaw(law_kind, r0, a, b)
        box = VELOCITY_RANGES["center_box"]
        center = rng.uniform(-box, box, size=2)
        v_index = int(rng.integers(0, v_shape))
        pts = _spatial_points(spatial, resolution)
        dist2d = np.hypot(pts[:, 0] - center[0], pts[:, 1] - center[1])
        dist2d = dist2d.reshape(resolution, resolution)
        v_nodes = np.array([v_of(k) for k in range(v_shape)])
        radii = velocity_radius(law, v_nodes)
        l = (dist2d[:, :, None] - radii[None, None, :])[:, :, :, None]
        l = np.broadcast_to(l, (resolution, resolution, v_shape, theta_shape)).copy()
        scene = Scene((Disc(tuple(center), float(radii[v_index])),))
        return Instance(kind, seed, dyn, dyn.default_domain(), l,
                        ((2, v_index), (3, 0)), (v_of(v_index), 0.0), scene=scene)

    # parametric: control bounds come from the caller-designed grid
    if hyper is None or "u1_max" not in hyper or "u2_max" not in hyper:
        raise ValueError("parametric instances need hyper={'u1_max', 'u2_max'}")
    dyn = Dubins4DSpec(u1_max=float(hyper["u1_max"]), u2_max=float(hyper["u2_max"]))
    center = rng.uniform(-SINGLE_CENTER_BOX, SINGLE_CENTER_BOX, size=2)
    scene = Scene((random_smooth_shape(
        rng, r_min=SINGLE_SHAPE_RADII[0], r_max=SINGLE_SHAPE_RADII[1], center=center
    ),))
    l2d = rasterize_l(scene, spatial, (resolution, resolution)).values
    l = _dubins_l_from_2d(l2d, v_shape, theta_shape)
    return Instance(kind, seed, dyn, dyn.default_domain(), l, fixed,
                    (v_of(v_mid_index), 0.0, dyn.u1_max, dyn.u2_max), scene=scene)


def regenerate_instance(experiment_id: int, seed: int, resolution: int, h) -> Instance:
    """Rebuild the instance behind a stored sample at any resolution."""
    kind = EXPERIMENT_NAMES[int(experiment_id)]
    hyper = None
    if kind == "parametric":
        if len(h) != 4:
            raise ValueError("parametric samples carry h = (v, theta, u1_max, u2_max)")
        hyper = {"u1_max": h[2], "u2_max": h[3]}
    return build_instance(kind, seed, resolution, hyper=hyper)


# --- solving and assembly ---------------------------------------------------


def solve_instance(instance: Instance, config: SolverConfig = SolverConfig()):
    """Solve one instance; returns (input slice, target slice, solve result)."""
    l_grid = ValueGrid(instance.domain, instance.l)
    result = solve(l_grid, instance.dynamics, config)
    a2d = l_grid.slice(instance.fixed)
    t2d = result.v_inf.slice(instance.fixed)
    return a2d, t2d, result


def build_input(a2d: np.ndarray, domain: Domain, h) -> np.ndarray:
    """Stack [value, x1, x2] + one constant channel per h entry, float32."""
    a2d = np.asarray(a2d)
    g = ValueGrid(domain, np.zeros(a2d.shape), copy=False)
    mx, my = np.meshgrid(g.axis_coordinates(0), g.axis_coordinates(1), indexing="ij")
    channels = [a2d, mx, my] + [np.full(a2d.shape, float(v)) for v in h]
    return np.stack(channels, axis=-1).astype(np.float32)


def _make_sample(instance: Instance, a2d: ValueGrid, t2d: ValueGrid,
                 config_hash: str) -> Sample:
    domain = a2d.domain
    bounds = (domain.lo[0], domain.hi[0], domain.lo[1], domain.hi[1])
    return Sample(
        input=build_input(a2d.values, domain, instance.h),
        target=t2d.values[:, :, None].astype(np.float32),
        h=instance.h,
        bounds=bounds,
        provenance=Provenance(EXPERIMENT_IDS[instance.kind], instance.seed, config_hash),
    )


def _parametric_hyper(split: int, position: int) -> dict:
    lo, hi = PARAMETRIC_RANGE
    if split == 0:
        i, j = divmod(position % (PARAMETRIC_GRID**2), PARAMETRIC_GRID)
        return {
            "u1_max": lo + (hi - lo) * i / (PARAMETRIC_GRID - 1),
            "u2_max": lo + (hi - lo) * j / (PARAMETRIC_GRID - 1),
        }
    # test points interleave the training marks along the diagonal
    t = lo + (hi - lo) * (position % 20 + 0.5) / 20.0
    return {"u1_max": t, "u2_max": t}


def _generate_split(spec: ExperimentSpec, split: int, count: int,
                    config: SolverConfig, config_hash: str, audits: list) -> list:
    samples: list = []
    index = 0
    attempts_allowed = 3 * count + 10
    while len(samples) < count:
        if index >= attempts_allowed:
            raise RuntimeError(
                f"{spec.kind} generator: only {len(samples)}/{count} solves "
                f"converged after {index} attempts"
            )
        seed = derive_seed(spec.seed, split, index)
        index += 1
        hyper = (
            _parametric_hyper(split, len(samples)) if spec.kind == "parametric" else None
        )
        instance = build_instance(spec.kind, seed, spec.resolution, hyper=hyper)
        a2d, t2d, result = solve_instance(instance, config)
        audits.append({
            "kind": spec.kind,
            "split": split,
            "seed": seed,
            "iterations": result.iterations,
            "converged": result.converged,
            "horizon": result.horizon,
            "max_step_increase": result.max_step_increase,
            "final_below_initial": bool(
                np.all(result.v_inf.values <= instance.l + 1e-9)
            ),
        })
        if not result.converged:
            logger.warning(
                "%s sample seed=%d excluded: no convergence within horizon %.3g",
                spec.kind, seed, config.max_horizon,
            )
            continue
        samples.append(_make_sample(instance, a2d, t2d, config_hash))
    return samples


def generate(spec: ExperimentSpec, config: SolverConfig = SolverConfig()) -> GeneratedData:
    """Generate the train and test splits for one experiment family."""
    config_hash = solver_config_hash(config)
    audits: list = []
    train = _generate_split(spec, 0, spec.n_train, config, config_hash, audits)
    test = _generate_split(spec, 1, spec.n_test, config, config_hash, audits)
    return GeneratedData(train, test, audits)


def stack_samples(samples) -> tuple:
    """Stack a homogeneous sample list into (inputs, targets) float32 arrays."""
    if len(samples) == 0:
        raise ValueError("no samples to stack")
    shape = samples[0].input.shape
    for s in samples:
        if s.input.shape != shape:
            raise ValueError("samples have inconsistent shapes or channel counts")
    x = np.stack([s.input for s in samples])
    y = np.stack([s.target for s in samples])
    return x, y


def sample_domain(sample: Sample) -> Domain:
    lo1, hi1, lo2, hi2 = sample.bounds
    return Domain([lo1, lo2], [hi1, hi2])


# --- binary dataset format --------------------------------------------------

MAGIC = b"HJRD"
VERSION = 1


def write_dataset(path, samples) -> None:
    """Serialize samples; little-endian throughout, input stored channel-major."""
    parts = [MAGIC, struct.pack("<II", VERSION, len(samples))]
    for sample in samples:
        n1, n2, c_in = sample.input.shape
        parts.append(struct.pack("<I", 2))
        parts.append(struct.pack("<II", n1, n2))
        parts.append(struct.pack("<II", c_in, sample.target.shape[2]))
        parts.append(struct.pack("<4f", *sample.bounds))
        parts.append(struct.pack("<I", len(sample.h)))
        if sample.h:
            parts.append(struct.pack(f"<{len(sample.h)}f", *sample.h))
        parts.append(struct.pack("<B", sample.provenance.experiment_id))
        parts.append(struct.pack("<Q", sample.provenance.seed))
        parts.append(np.ascontiguousarray(
            sample.input.transpose(2, 0, 1), dtype="<f4").tobytes())
        parts.append(np.ascontiguousarray(
            sample.target.transpose(2, 0, 1), dtype="<f4").tobytes())
    with open(path, "wb") as handle:
        handle.write(b"".join(parts))


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.offset = 0

    def take(self, count: int) -> bytes:
        if self.offset + count > len(self.blob):
            raise DatasetError(
                f"truncated dataset: needed {count} bytes at offset {self.offset}"
            )
        out = self.blob[self.offset:self.offset + count]
        self.offset += count
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def read_dataset(path) -> list:
    with open(path, "rb") as handle:
        blob = handle.read()
    reader = _Reader(blob)
    if reader.take(4) != MAGIC:
        raise DatasetError("bad magic at offset 0; not a dataset file")
    version, count = reader.unpack("<II")
    if version != VERSION:
        raise DatasetError(f"unsupported dataset version {version} at offset 4")
    samples = []
    for i in range(count):
        (ndim,) = reader.unpack("<I")
        if ndim != 2:
            raise DatasetError(
                f"sample {i}: unsupported grid rank {ndim} at offset {reader.offset - 4}"
            )
        n1, n2 = reader.unpack("<II")
        c_in, c_out = reader.unpack("<II")
        bounds = reader.unpack("<4f")
        (h_len,) = reader.unpack("<I")
        h = reader.unpack(f"<{h_len}f") if h_len else ()
        (experiment_id,) = reader.unpack("<B")
        (seed,) = reader.unpack("<Q")
        if experiment_id not in EXPERIMENT_NAMES:
            raise DatasetError(
                f"sample {i}: unknown experiment id {experiment_id}"
            )
        if c_in != 3 + h_len:
            raise DatasetError(
                f"sample {i}: channel count {c_in} inconsistent with h length {h_len}"
            )
        n_input = n1 * n2 * c_in
        input_payload = np.frombuffer(reader.take(4 * n_input), dtype="<f4")
        n_target = n1 * n2 * c_out
        target_payload = np.frombuffer(reader.take(4 * n_target), dtype="<f4")
        samples.append(Sample(
            input=input_payload.reshape(c_in, n1, n2).transpose(1, 2, 0).copy(),
            target=target_payload.reshape(c_out, n1, n2).transpose(1, 2, 0).copy(),
            h=h,
            bounds=bounds,
            provenance=Provenance(experiment_id, seed),
        ))
    if reader.offset != len(blob):
        raise DatasetError(
            f"{len(blob) - reader.offset} trailing bytes after sample {count - 1} "
            f"at offset {reader.offset}"
        )
    return samples
