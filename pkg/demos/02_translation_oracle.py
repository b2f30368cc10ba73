"""Cross-check the grid solver against a trajectory oracle.

Pure translation x' = c has closed-form trajectories, so the converged
value at a point is just the minimum of l along a straight ray.  The
rollout oracle integrates that ray directly, giving an independent
answer the PDE solver must match to within discretization error.
Doubling the resolution should roughly halve the disagreement.
"""

import numpy as np

from reachtube.dynamics import TranslationSpec, rollout_min_l
from reachtube.geometry import Disc, Scene, rasterize_l
from reachtube.grid import Domain
from reachtube.hji import SolverConfig, solve


def oracle_field(l, scene, spec, dt):
    horizon = l.domain.extent(0) / abs(spec.c[0])
    out = np.empty(l.shape)
    for i in range(l.shape[0]):
        for j in range(l.shape[1]):
            out[i, j] = rollout_min_l(spec, scene, l.coordinates((i, j)),
                                      horizon, dt)
    return out


def main():
    domain = Domain([-2.0, -2.0], [2.0, 2.0])
    scene = Scene((Disc((0.0, 0.0), 0.8),))
    spec = TranslationSpec((1.0, 0.0))
    config = SolverConfig()
    for n in (32, 64):
        l = rasterize_l(scene, domain, (n, n))
        result = solve(l, spec, config)
        dx = l.spacing(0)
        dt = config.cfl * dx
        oracle = oracle_field(l, scene, spec, dt)
        err = np.abs(result.v_inf.values - oracle).max()
        bound = 2.0 * (dx + dt)
        print(f"{n:3d}x{n:<3d} grid: max |solver - oracle| = {err:.4f} "
              f"(bound {bound:.4f}, {result.iterations} steps)")
    print()
    print("Both runs must sit inside the bound, and the finer grid")
    print("should be the more accurate one.")


if __name__ == "__main__":
    main()
