"""Command-line orchestration: solve, gen, train, eval, infer, render.

Exit codes: 0 success, 1 usage error, 2 data error (missing or
inconsistent files), 3 numerical failure.  Every command is
deterministic given ``--seed``.  ``--threads`` caps worker counts; this
implementation runs sequentially, which trivially satisfies any cap.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass

import numpy as np

from .data import (
    EXPERIMENT_IDS,
    GENERATOR_KINDS,
    DatasetError,
    ExperimentSpec,
    Provenance,
    Sample,
    build_input,
    build_instance,
    generate,
    read_dataset,
    regenerate_instance,
    sample_domain,
    solve_instance,
    solver_config_hash,
    stack_samples,
    write_dataset,
)
from .dynamics import TranslationSpec
from .geometry import rasterize_l, scene_from_json
from .grid import Domain, ValueGrid
from .hji import SolverConfig, SolverError, solve
from .nn.checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .nn.models import FNOConfig, OperatorModel, TNOConfig
from .nn.training import TrainingError, rel_l2, train
from .render import write_pgm, write_ppm_overlay

__all__ = ["main", "Report", "build_report", "format_report", "parse_report"]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

TRANSLATION_ID = EXPERIMENT_IDS["translation"]


# --- report -----------------------------------------------------------------


@dataclass
class Report:
    """Evaluation metrics over one dataset.

    Rates are fractions of grid nodes pooled over all samples:
    ``sign_mismatch_rate`` counts nodes where prediction and truth
    disagree in sign; ``false_safe_rate`` counts nodes predicted safe
    (> 0) that the truth marks unsafe (<= 0).  ``solve_seconds`` is NaN
    when no ground-truth solves were run during evaluation.
    """

    per_sample_rel_l2: tuple
    mean_rel_l2: float
    max_rel_l2: float
    sign_mismatch_rate: float
    false_safe_rate: float
    inference_seconds: float
    solve_seconds: float

    def __post_init__(self):
        self.per_sample_rel_l2 = tuple(float(v) for v in self.per_sample_rel_l2)
        if not self.per_sample_rel_l2:
            raise ValueError("report needs at least one sample")
        if abs(self.mean_rel_l2 - np.mean(self.per_sample_rel_l2)) > 1e-9:
            raise ValueError("mean inconsistent with per-sample list")
        if abs(self.max_rel_l2 - max(self.per_sample_rel_l2)) > 1e-9:
            raise ValueError("max inconsistent with per-sample list")
        for name in ("sign_mismatch_rate", "false_safe_rate"):
            rate = getattr(self, name)
            if not 0.0 <= rate <= 1.0:
                raise ValueError(f"{name} outside [0, 1]")


def build_report(predictions, truths, inference_seconds=float("nan"),
                 solve_seconds=float("nan")) -> Report:
    if len(predictions) != len(truths) or not predictions:
        raise ValueError("need matching non-empty prediction/truth lists")
    per = [rel_l2(p, t) for p, t in zip(predictions, truths)]
    pred_all = np.concatenate([np.asarray(p).ravel() for p in predictions])
    true_all = np.concatenate([np.asarray(t).ravel() for t in truths])
    mismatch = float(np.mean(np.sign(pred_all) != np.sign(true_all)))
    false_safe = float(np.mean((pred_all > 0.0) & (true_all <= 0.0)))
    return Report(
        per_sample_rel_l2=tuple(per),
        mean_rel_l2=float(np.mean(per)),
        max_rel_l2=float(max(per)),
        sign_mismatch_rate=mismatch,
        false_safe_rate=false_safe,
        inference_seconds=float(inference_seconds),
        solve_seconds=float(solve_seconds),
    )


_REPORT_KEYS = (
    "mean_rel_l2",
    "max_rel_l2",
    "sign_mismatch_rate",
    "false_safe_rate",
    "inference_seconds",
    "solve_seconds",
)


def format_report(report: Report) -> str:
    """Stable key-ordered text schema; floats survive a round trip exactly."""
    lines = ["reachtube-report v1", f"samples: {len(report.per_sample_rel_l2)}"]
    for key in _REPORT_KEYS:
        lines.append(f"{key}: {getattr(report, key):.17g}")
    lines.append(
        "per_sample_rel_l2: " + " ".join(f"{v:.17g}" for v in report.per_sample_rel_l2)
    )
    return "\n".join(lines) + "\n"


def parse_report(text: str) -> Report:
    lines = text.strip().splitlines()
    if not lines or lines[0] != "reachtube-report v1":
        raise ValueError("not a reachtube report")
    if len(lines) != 3 + len(_REPORT_KEYS):
        raise ValueError("report has wrong line count")
    count = int(lines[1].split(":", 1)[1])
    values = {}
    for offset, key in enumerate(_REPORT_KEYS):
        name, _, raw = lines[2 + offset].partition(":")
        if name != key:
            raise ValueError(f"expected key {key!r}, found {name!r}")
        values[key] = float(raw)
    name, _, raw = lines[-1].partition(":")
    if name != "per_sample_rel_l2":
        raise ValueError("missing per-sample list")
    per = tuple(float(v) for v in raw.split())
    if len(per) != count:
        raise ValueError("per-sample count mismatch")
    return Report(per_sample_rel_l2=per, **values)


# --- shared helpers ---------------------------------------------------------


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # route argparse failures to exit code 1
        raise _UsageError(message)


def _solver_config(args) -> SolverConfig:
    return SolverConfig(
        cfl=args.cfl,
        convergence_tol=args.tolerance,
        max_horizon=args.max_horizon,
        check_interval=args.check_interval,
    )


def _add_solver_flags(parser):
    parser.add_argument("--cfl", type=float, default=0.8)
    parser.add_argument("--tolerance", type=float, default=1e-3)
    parser.add_argument("--max-horizon", type=float, default=120.0)
    parser.add_argument("--check-interval", type=int, default=10)


def _target_grid(sample: Sample) -> ValueGrid:
    return ValueGrid(sample_domain(sample), sample.target[:, :, 0].astype(float))


def _model_for_dataset(args, c_in: int) -> OperatorModel:
    if args.arch == "fno":
        config = FNOConfig(in_channels=c_in, out_channels=1, width=args.width,
                           modes1=args.modes, modes2=args.modes, n_blocks=args.blocks)
    else:
        config = TNOConfig(in_channels=c_in, out_channels=1, width=args.width,
                           n_blocks=args.blocks, mlp_hidden=args.mlp_hidden)
    return OperatorModel.build(args.arch, config, seed=args.seed, dtype=np.float32)


def _check_compatible(model: OperatorModel, c_in: int) -> None:
    if model.config.in_channels != c_in:
        raise DatasetError(
            f"checkpoint expects {model.config.in_channels} input channels, "
            f"dataset has {c_in}"
        )


# --- commands ---------------------------------------------------------------


def cmd_solve(args) -> int:
    config = _solver_config(args)
    if args.experiment == "translation":
        if args.scene_json is None:
            raise _UsageError("translation solves need --scene-json")
        with open(args.scene_json) as handle:
            scene = scene_from_json(handle.read())
        half = args.half_width
        domain = Domain([-half, -half], [half, half])
        l_grid = rasterize_l(scene, domain, (args.resolution, args.resolution))
        spec = TranslationSpec((args.cx, args.cy))
        result = solve(l_grid, spec, config)
        sample = Sample(
            input=build_input(l_grid.values, domain, ()),
            target=result.v_inf.values[:, :, None].astype(np.float32),
            h=(),
            bounds=(-half, half, -half, half),
            provenance=Provenance(TRANSLATION_ID, args.seed,
                                  solver_config_hash(config)),
        )
    else:
        hyper = None
        if args.experiment == "parametric":
            if args.u1_max is None or args.u2_max is None:
                raise _UsageError("parametric solves need --u1-max and --u2-max")
            hyper = {"u1_max": args.u1_max, "u2_max": args.u2_max}
        instance = build_instance(args.experiment, args.sample_seed,
                                  args.resolution, hyper=hyper)
        a2d, t2d, result = solve_instance(instance, config)
        domain = a2d.domain
        sample = Sample(
            input=build_input(a2d.values, domain, instance.h),
            target=t2d.values[:, :, None].astype(np.float32),
            h=instance.h,
            bounds=(domain.lo[0], domain.hi[0], domain.lo[1], domain.hi[1]),
            provenance=Provenance(EXPERIMENT_IDS[args.experiment],
                                  instance.seed, solver_config_hash(config)),
        )
    if args.output is not None:
        write_dataset(args.output, [sample])
    print(
        f"solve: experiment={args.experiment} resolution={args.resolution} "
        f"iterations={result.iterations} converged={str(result.converged).lower()} "
        f"horizon={result.horizon:.6g} wall_seconds={result.wall_time:.3f} "
        f"value_min={float(sample.target.min()):.6g} "
        f"value_max={float(sample.target.max()):.6g}"
    )
    if not result.converged:
        print(
            "warning: horizon reached before convergence; value field is the "
            "finite-horizon tube", file=sys.stderr,
        )
    return EXIT_OK


def cmd_gen(args) -> int:
    spec = ExperimentSpec(
        kind=args.experiment,
        n_train=args.train,
        n_test=args.test,
        resolution=args.resolution,
        seed=args.seed,
    )
    config = _solver_config(args)
    data = generate(spec, config)
    train_path = f"{args.output_prefix}_train.hjrd"
    test_path = f"{args.output_prefix}_test.hjrd"
    write_dataset(train_path, data.train)
    write_dataset(test_path, data.test)
    worst = max(rec["max_step_increase"] for rec in data.audits)
    print(
        f"gen: wrote {train_path} ({len(data.train)} samples) and "
        f"{test_path} ({len(data.test)} samples)"
    )
    print(
        f"gen: solves={len(data.audits)} "
        f"all_converged={str(all(r['converged'] for r in data.audits)).lower()} "
        f"max_step_increase={worst:.3g}"
    )
    return EXIT_OK


def cmd_train(args) -> int:
    train_samples = read_dataset(args.train_data)
    x_train, y_train = stack_samples(train_samples)
    x_test = y_test = None
    if args.test_data is not None:
        x_test, y_test = stack_samples(read_dataset(args.test_data))
        if x_test.shape[3] != x_train.shape[3]:
            raise DatasetError(
                f"train file has {x_train.shape[3]} channels, "
                f"test file has {x_test.shape[3]}"
            )
    model = _model_for_dataset(args, x_train.shape[3])
    history = train(
        model, x_train, y_train,
        epochs=args.epochs, batch_size=args.batch_size, lr=args.lr,
        seed=args.seed, x_test=x_test, y_test=y_test,
        log_path=args.log, verbose=not args.quiet,
    )
    save_checkpoint(model, args.checkpoint)
    final = history[-1]
    test_part = (
        f" test_rel_l2={final['test_rel_l2']:.6g}" if "test_rel_l2" in final else ""
    )
    print(
        f"train: arch={args.arch} params={model.param_count} epochs={len(history)} "
        f"final_mse={final['train_mse']:.6g} "
        f"train_rel_l2={final['train_rel_l2']:.6g}{test_part}"
    )
    print(f"train: checkpoint written to {args.checkpoint}")
    return EXIT_OK


def _predict_timed(model, samples):
    predictions = []
    elapsed = []
    for sample in samples:
        start = time.perf_counter()
        out = model.predict(sample.input.astype(np.float32))
        elapsed.append(time.perf_counter() - start)
        predictions.append(out[:, :, 0])
    return predictions, elapsed


def cmd_eval(args) -> int:
    model = load_checkpoint(args.checkpoint)
    samples = read_dataset(args.data)
    _check_compatible(model, samples[0].input.shape[2])
    solve_seconds = float("nan")
    if args.resolution_scale != 1:
        config = _solver_config(args)
        subset = samples[: args.max_samples] if args.max_samples else samples
        predictions, truths = [], []
        solve_times = []
        base = subset[0].input.shape[0]
        fine = base * args.resolution_scale
        for sample in subset:
            instance = regenerate_instance(
                sample.provenance.experiment_id, sample.provenance.seed,
                fine, sample.h,
            )
            a2d, t2d, result = solve_instance(instance, config)
            solve_times.append(result.wall_time)
            fine_input = build_input(a2d.values, a2d.domain, sample.h)
            predictions.append(model.predict(fine_input)[:, :, 0])
            truths.append(t2d.values)
        solve_seconds = float(np.mean(solve_times))
        inference = float("nan")
    else:
        predictions, elapsed = _predict_timed(model, samples)
        truths = [sample.target[:, :, 0] for sample in samples]
        inference = float(np.mean(elapsed))
    report = build_report(predictions, truths, inference, solve_seconds)
    text = format_report(report)
    with open(args.report, "w") as handle:
        handle.write(text)
    print(text, end="")
    return EXIT_OK


def cmd_infer(args) -> int:
    model = load_checkpoint(args.checkpoint)
    samples = read_dataset(args.data)
    _check_compatible(model, samples[0].input.shape[2])
    predictions, elapsed = _predict_timed(model, samples)
    if args.output is not None:
        out_samples = [
            Sample(
                input=s.input,
                target=np.asarray(p, dtype=np.float32)[:, :, None],
                h=s.h, bounds=s.bounds, provenance=s.provenance,
            )
            for s, p in zip(samples, predictions)
        ]
        write_dataset(args.output, out_samples)
        print(f"infer: predictions written to {args.output}")
    print(
        f"infer: samples={len(samples)} mean_seconds={np.mean(elapsed):.6f} "
        f"min_seconds={min(elapsed):.6f} max_seconds={max(elapsed):.6f}"
    )
    return EXIT_OK


def cmd_render(args) -> int:
    samples = read_dataset(args.data)
    if not 0 <= args.index < len(samples):
        raise DatasetError(f"sample index {args.index} outside 0..{len(samples) - 1}")
    sample = samples[args.index]
    truth = _target_grid(sample)
    lo, hi = float(truth.values.min()), float(truth.values.max())
    write_pgm(f"{args.output_prefix}_truth.pgm", truth.values, lo, hi)
    write_ppm_overlay(f"{args.output_prefix}_truth_contour.ppm", truth, 0.0, lo, hi)
    written = [f"{args.output_prefix}_truth.pgm", f"{args.output_prefix}_truth_contour.ppm"]
    if args.checkpoint is not None:
        model = load_checkpoint(args.checkpoint)
        _check_compatible(model, sample.input.shape[2])
        pred = ValueGrid(
            sample_domain(sample),
            model.predict(sample.input.astype(np.float32))[:, :, 0].astype(float),
        )
        write_pgm(f"{args.output_prefix}_pred.pgm", pred.values, lo, hi)
        write_ppm_overlay(f"{args.output_prefix}_pred_contour.ppm", pred, 0.0, lo, hi)
        written += [f"{args.output_prefix}_pred.pgm", f"{args.output_prefix}_pred_contour.ppm"]
    print("render: wrote " + " ".join(written))
    return EXIT_OK


# --- parser -----------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(
        prog="reachtube",
        description="Backward reachable tubes on grids and neural operator surrogates.",
    )
    parser.add_argument("--seed", type=int, default=0, help="global RNG seed")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker cap (this build runs sequentially)")
    sub = parser.add_subparsers(dest="command", required=True)

    experiments = list(EXPERIMENT_IDS)

    p = sub.add_parser("solve", help="solve one instance and write it as a dataset")
    p.add_argument("--experiment", choices=experiments, required=True)
    p.add_argument("--sample-seed", type=int, default=0,
                   help="per-instance seed for generator-backed experiments")
    p.add_argument("--scene-json", default=None, help="scene file (translation only)")
    p.add_argument("--cx", type=float, default=1.0, help="drift x (translation)")
    p.add_argument("--cy", type=float, default=0.0, help="drift y (translation)")
    p.add_argument("--half-width", type=float, default=5.0,
                   help="square domain half width (translation)")
    p.add_argument("--u1-max", type=float, default=None, help="parametric bound")
    p.add_argument("--u2-max", type=float, default=None, help="parametric bound")
    p.add_argument("--resolution", type=int, default=32)
    p.add_argument("--output", default=None, help="dataset file for the solved slice")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("gen", help="generate train/test datasets for an experiment")
    p.add_argument("--experiment", choices=list(GENERATOR_KINDS), required=True)
    p.add_argument("--train", type=int, default=60)
    p.add_argument("--test", type=int, default=20)
    p.add_argument("--resolution", type=int, default=32)
    p.add_argument("--output-prefix", required=True)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train an operator model on a dataset")
    p.add_argument("--train-data", required=True)
    p.add_argument("--test-data", default=None)
    p.add_argument("--arch", choices=("fno", "tno"), default="fno")
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--batch-size", type=int, default=10)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--width", type=int, default=32)
    p.add_argument("--modes", type=int, default=12, help="per-axis modes (fno)")
    p.add_argument("--blocks", type=int, default=4)
    p.add_argument("--mlp-hidden", type=int, default=128, help="block MLP width (tno)")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--log", default=None, help="per-epoch CSV log path")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint against a dataset")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--resolution-scale", type=int, default=1,
                   help="evaluate against freshly solved k-times-finer ground truth")
    p.add_argument("--max-samples", type=int, default=0,
                   help="cap samples in resolution-scale mode (0 = all)")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("infer", help="run inference and report per-sample wall time")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--output", default=None, help="write predictions as a dataset")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("render", help="write heatmap and zero-level-set images")
    p.add_argument("--data", required=True)
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--checkpoint", default=None,
                   help="also render the model prediction side by side")
    p.add_argument("--output-prefix", required=True)
    p.set_defaults(func=cmd_render)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, DatasetError, CheckpointError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (SolverError, TrainingError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except RuntimeError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
