"""Train a small Fourier neural operator on solver-generated data.

The learning task maps the initial value field (plus coordinate and
context channels) to the converged infinite-horizon field.  At this
scale the run takes about a minute on one CPU core; the point is to
watch the relative error fall and to see the checkpoint round-trip
bit-exactly.
"""

import pathlib
import tempfile

import numpy as np

from reachtube.data import ExperimentSpec, generate, stack_samples
from reachtube.hji import SolverConfig
from reachtube.nn.checkpoint import load_checkpoint, save_checkpoint
from reachtube.nn.models import FNOConfig, OperatorModel
from reachtube.nn.training import train


def main():
    spec = ExperimentSpec(kind="single_obstacle", n_train=12, n_test=4,
                          resolution=16, seed=11)
    data = generate(spec, SolverConfig())
    x_train, y_train = stack_samples(data.train)
    x_test, y_test = stack_samples(data.test)
    print(f"dataset: {x_train.shape[0]} train / {x_test.shape[0]} test "
          f"samples at {x_train.shape[1]}x{x_train.shape[2]}, "
          f"{x_train.shape[3]} input channels")

    config = FNOConfig(in_channels=x_train.shape[3], width=16, modes1=6,
                       modes2=6, n_blocks=2)
    model = OperatorModel.build("fno", config, seed=0)
    print(f"model: width 16, 2 blocks, {model.param_count} parameters")

    history = train(model, x_train, y_train, epochs=20, batch_size=4,
                    lr=2e-3, seed=0, x_test=x_test, y_test=y_test)
    for record in history[::4] + [history[-1]]:
        print(f"  epoch {record['epoch']:2d}: "
              f"train rel {record['train_rel_l2']:.3f}  "
              f"test rel {record['test_rel_l2']:.3f}")

    path = pathlib.Path(tempfile.mkdtemp()) / "demo.hjrm"
    save_checkpoint(model, path)
    clone = load_checkpoint(path)
    same = all(
        np.array_equal(model.params[k].data, clone.params[k].data)
        for k in model.params
    )
    print(f"checkpoint round trip bit-exact: {same}")


if __name__ == "__main__":
    main()
