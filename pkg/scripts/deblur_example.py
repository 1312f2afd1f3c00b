"""Blur one cartoon image, estimate the kernel, deblur, and save everything as PGM.

    python3 scripts/deblur_example.py --seed 3 --out results/example
"""

import argparse
from pathlib import Path

import numpy as np

from shakedeblur.bench import align_image, align_kernels, blur_instance, cartoon_image, random_shake, sse
from shakedeblur.imgio import write_kernel_pgm, write_pgm
from shakedeblur.nonblind import deconvolve_irls
from shakedeblur.pyramid import build_ladder, run_pyramid
from shakedeblur.solver import SolverConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--size", type=int, default=128)
    ap.add_argument("--kernel-size", type=int, default=13)
    ap.add_argument("--noise", type=float, default=0.005)
    ap.add_argument("--out", default="results/example")
    a = ap.parse_args()

    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    x_true = cartoon_image(a.size, a.seed)
    y, k_true = blur_instance(x_true, random_shake(a.kernel_size, a.noise, a.seed))
    k = run_pyramid(y, SolverConfig(), build_ladder(a.kernel_size))
    x = np.clip(deconvolve_irls(y, k), 0, 1)
    shift, _, score = align_kernels(k, k_true)

    write_pgm(x_true, out / "sharp.pgm")
    write_pgm(y, out / "blurry.pgm")
    write_pgm(x, out / "deblurred.pgm")
    write_kernel_pgm(k_true, out / "k_true.pgm")
    write_kernel_pgm(k, out / "k_est.pgm")
    print(f"kernel ncc={score:.4f} shift={shift}")
    print(f"sse blurry={sse(y, x_true):.2f} deblurred={sse(align_image(x, shift), x_true):.2f}")


if __name__ == "__main__":
    main()
