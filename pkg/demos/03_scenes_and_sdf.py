"""Build obstacle scenes and rasterize them to signed fields.

A scene is an ordered fold of primitives: union adds material,
subtract carves it away.  Rasterizing produces the initial data l for
the solver (negative inside obstacles).  The demo writes three images
into demos/output/: a heatmap of the field, the same heatmap with the
zero contour drawn in red, and a randomly generated indoor floor plan.
"""

import pathlib

import numpy as np

from reachtube.geometry import (
    Box,
    Disc,
    Scene,
    gen_indoor_scene,
    random_smooth_shape,
    rasterize_l,
    scene_to_json,
)
from reachtube.grid import Domain
from reachtube.render import write_pgm, write_ppm_overlay

OUT = pathlib.Path(__file__).resolve().parent / "output"
OUT.mkdir(exist_ok=True)


def main():
    rng = np.random.default_rng(7)
    scene = Scene(
        primitives=(
            Disc((-1.2, 0.8), 1.0),
            Box((1.0, -0.8), (1.4, 1.0)),
            random_smooth_shape(rng, r_min=0.5, r_max=0.9, center=(1.2, 1.6)),
            Disc((-1.2, 0.8), 0.45),
        ),
        modes=("union", "union", "union", "subtract"),
    )
    domain = Domain([-3.0, -3.0], [3.0, 3.0])
    l = rasterize_l(scene, domain, (96, 96))
    inside = float(np.mean(l.values <= 0.0))
    print(f"composite scene: {inside:.1%} of the domain is obstacle")
    write_pgm(OUT / "scene_heatmap.pgm", l.values)
    write_ppm_overlay(OUT / "scene_contour.ppm", l, 0.0)
    print("wrote scene_heatmap.pgm and scene_contour.ppm")

    indoor = gen_indoor_scene(seed=12)
    li = rasterize_l(indoor, Domain([-5.0, -5.0], [5.0, 5.0]), (96, 96))
    write_ppm_overlay(OUT / "indoor_contour.ppm", li, 0.0)
    print("wrote indoor_contour.ppm (walls plus random furniture)")

    text = scene_to_json(scene)
    print(f"scene serializes to {len(text)} bytes of JSON and round-trips:")
    print(text[:76] + "...")


if __name__ == "__main__":
    main()
