"""Galerkin-style attention: same algebra, linear cost.

Softmax-free attention can be reassociated: instead of forming the
n x n interaction matrix (Q K^T) V, accumulate the d x d moment matrix
K^T V first and multiply Q into it.  The result is identical up to
roundoff but the cost is linear in the number of grid points, which is
what makes transformer blocks affordable on flattened 2D fields.  The
demo checks the equality, times both routes, and runs a small
transformer-based operator end to end.
"""

import time

import numpy as np

from reachtube.nn.models import OperatorModel, TNOConfig, galerkin_attention
from reachtube.nn.tensor import Tensor


def quadratic_route(x, wq, wk, wv):
    n = x.shape[0]
    q, k, v = x @ wq, x @ wk, x @ wv
    return (q @ k.T) @ v / n


def main():
    rng = np.random.default_rng(0)
    d = 16
    for n in (256, 1024, 4096):
        x = rng.normal(size=(n, d))
        wq, wk, wv = (rng.normal(size=(d, d)) for _ in range(3))

        t0 = time.perf_counter()
        slow = quadratic_route(x, wq, wk, wv)
        t_slow = time.perf_counter() - t0

        t0 = time.perf_counter()
        fast = galerkin_attention(
            Tensor(x), Tensor(wq), Tensor(wk), Tensor(wv)).data
        t_fast = time.perf_counter() - t0

        # the fast route also layer-normalizes K and V, so compare the
        # reassociation itself on the un-normalized inputs
        refast = (x @ wq) @ ((x @ wk).T @ (x @ wv)) / n
        err = np.abs(slow - refast).max() / np.abs(slow).max()
        print(f"n={n:5d}: reassociation error {err:.2e}, "
              f"quadratic {t_slow * 1e3:7.1f} ms, linear {t_fast * 1e3:7.1f} ms")

    config = TNOConfig(in_channels=3, width=32, n_blocks=2, mlp_hidden=64)
    model = OperatorModel.build("tno", config, seed=0)
    field = rng.normal(size=(24, 24, 3)).astype(np.float32)
    out = model.predict(field)
    print(f"\nTNO with {model.param_count} parameters maps "
          f"{field.shape} -> {out.shape}")


if __name__ == "__main__":
    main()
