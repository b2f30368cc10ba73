"""The whole toolkit through the command-line interface.

Everything the library does is reachable from the `reachtube` command:
generate a dataset, train an operator, evaluate it, time inference, and
render images.  This demo drives the same entry point in process inside
a temporary directory, so it leaves nothing behind but its printout.
"""

import pathlib
import tempfile

from reachtube.cli import main as cli


def run(argv):
    print(f"$ reachtube {' '.join(argv)}")
    code = cli(argv)
    if code != 0:
        raise SystemExit(f"command failed with exit code {code}")
    print()


def main():
    root = pathlib.Path(tempfile.mkdtemp(prefix="reachtube_demo_"))
    prefix = str(root / "single")
    ckpt = str(root / "model.hjrm")

    run(["--seed", "3", "gen", "--experiment", "single_obstacle",
         "--train", "8", "--test", "3", "--resolution", "16",
         "--output-prefix", prefix])
    run(["train", "--arch", "fno", "--train-data", f"{prefix}_train.hjrd",
         "--test-data", f"{prefix}_test.hjrd", "--epochs", "15",
         "--batch-size", "4", "--lr", "0.002", "--width", "16",
         "--modes", "6", "--blocks", "2", "--checkpoint", ckpt, "--quiet"])
    run(["eval", "--checkpoint", ckpt, "--data", f"{prefix}_test.hjrd",
         "--report", str(root / "report.txt")])
    run(["infer", "--checkpoint", ckpt, "--data", f"{prefix}_test.hjrd",
         "--output", str(root / "predictions.hjrd")])
    run(["render", "--data", f"{prefix}_test.hjrd", "--index", "0",
         "--checkpoint", ckpt, "--output-prefix", str(root / "img")])

    print("artifacts left in", root)
    for path in sorted(root.iterdir()):
        print(f"  {path.name:28s} {path.stat().st_size:>10,d} bytes")


if __name__ == "__main__":
    main()
