"""Grid infimum of f^# on the unit disk for random rationals, and bound checks for a*z."""
import argparse
import math
from dataclasses import dataclass

import numpy as np

from sphlab.bounds import min_spherical_derivative, verify_bound
from sphlab.funcmodel import RationalFunc, random_rational


@dataclass
class Config:
    n_random: int = 100
    max_degree: int = 4
    seed: int = 0


def main(cfg: Config) -> None:
    rng = np.random.default_rng(cfg.seed)
    mins = np.array([min_spherical_derivative(random_rational(rng, cfg.max_degree)) for _ in range(cfg.n_random)])
    print(f"inf f^# over {cfg.n_random} random rationals: max {mins.max():.4f}, median {np.median(mins):.4f}")

    print(f"\n{'C':>6} {'a':>8} {'dufresnoy max ratio':>20}")
    for C in (0.1, 0.3, 0.5, 0.7, 0.9):
        a = math.sqrt(C / (1 - C))
        rep = verify_bound(RationalFunc([0, a]), "dufresnoy", C)
        print(f"{C:6.2f} {a:8.4f} {rep.max_ratio:20.12f}")

    print(f"\n{'c':>6} {'steinmetz ratio':>16} {'fkr ratio':>10}")
    for c in (0.1, 0.2, 0.3, 0.4, 0.45, 0.5):
        s = verify_bound(RationalFunc([0, 1]), "steinmetz", c).max_ratio
        k = verify_bound(RationalFunc([0, 1]), "fkr", c).max_ratio
        print(f"{c:6.2f} {s:16.6f} {k:10.6f}")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-random", type=int, default=100)
    a = p.parse_args()
    main(Config(n_random=a.n_random, seed=a.seed))
