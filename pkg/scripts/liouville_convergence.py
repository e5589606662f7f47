"""Residual order of log f^# and Newton-solver error against closed-form oracles."""
import argparse
import math
import time
from dataclasses import dataclass

import numpy as np

from sphlab.funcmodel import FormulaFunc, RationalFunc
from sphlab.liouville import Grid2D, liouville_residual, log_sharp, solve_liouville

ORACLES = {
    "z": RationalFunc([0, 1]),
    "exp": FormulaFunc(np.exp, np.exp, recip=lambda z: (np.exp(-z), -np.exp(-z)), label="exp"),
}


@dataclass
class Config:
    oracle: str = "z"
    half_width: float = 0.5
    levels: tuple = (4, 5, 6, 7, 8)


def main(cfg: Config) -> None:
    f = ORACLES[cfg.oracle]
    print(f"{'h':>10} {'max|res|':>12} {'order':>7} {'max|u-u*|':>12} {'K':>8} {'newton':>6} {'sec':>6}")
    prev = None
    for k in cfg.levels:
        n = int(round(2 * cfg.half_width * 2**k)) + 1
        w = cfg.half_width
        G = Grid2D(-w, w, -w, w, n, n)
        res = float(np.abs(liouville_residual(f, G)).max())
        order = math.log2(prev / res) if prev else float("nan")
        prev = res
        t = time.perf_counter()
        exact = log_sharp(f, G)
        sol = solve_liouville(4.0, exact, G)
        err = float(np.abs(sol.u - exact).max())
        print(
            f"{G.h:10.3e} {res:12.4e} {order:7.3f} {err:12.4e} {err / G.h**2:8.4f} "
            f"{sol.newton_iters:6d} {time.perf_counter() - t:6.2f}"
        )


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--oracle", choices=sorted(ORACLES), default="z")
    p.add_argument("--half-width", type=float, default=0.5)
    a = p.parse_args()
    main(Config(a.oracle, a.half_width))
