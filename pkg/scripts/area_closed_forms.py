"""Spherical area of n z over the unit disk against n^2/(1+n^2), plus the degree-area identity."""
import argparse
import time
from dataclasses import dataclass

import numpy as np

from sphlab.funcmodel import RationalFunc, random_rational
from sphlab.quadrature import Disk, spherical_area


@dataclass
class Config:
    ns: tuple = (1, 2, 3, 5, 10, 100, 10_000)
    n_random: int = 25
    max_degree: int = 4
    big_radius: float = 1e3
    tol: float = 1e-8
    seed: int = 0


def main(cfg: Config) -> None:
    print(f"{'n':>8} {'area':>20} {'exact':>20} {'|err|':>10} {'cells':>7} {'sec':>7}")
    for n in cfg.ns:
        t = time.perf_counter()
        res = spherical_area(RationalFunc([0, n]), Disk(0, 1), cfg.tol)
        exact = n * n / (1 + n * n)
        print(f"{n:8d} {res.value:20.15f} {exact:20.15f} {abs(res.value - exact):10.2e} {res.cells:7d} {time.perf_counter() - t:7.3f}")

    rng = np.random.default_rng(cfg.seed)
    print(f"\ndegree-area identity over Disk(0, {cfg.big_radius:g})")
    print(f"{'deg':>4} {'area':>20} {'deficit':>10}")
    for _ in range(cfg.n_random):
        f = random_rational(rng, cfg.max_degree)
        v = spherical_area(f, Disk(0, cfg.big_radius), cfg.tol).value
        print(f"{f.degree:4d} {v:20.15f} {f.degree - v:10.2e}")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-random", type=int, default=25)
    a = p.parse_args()
    main(Config(n_random=a.n_random, seed=a.seed))
