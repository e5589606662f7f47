"""Irregular points and concentrated masses of n(2z^m - 1) for a range of m."""
import argparse
import json
from dataclasses import dataclass

import numpy as np

from sphlab.cli import dumps
from sphlab.concentration import mass_profile
from sphlab.funcmodel import builtin_family
from sphlab.quadrature import Disk


@dataclass
class Config:
    degrees: tuple = (1, 2, 3, 4, 5)
    schedule: tuple = (1, 2, 4, 8, 16, 32, 64, 128)
    resolution: int = 128
    radius: float = 1.0
    out: str = ""


def main(cfg: Config) -> None:
    D = Disk(0, cfg.radius)
    results = {}
    for m in cfg.degrees:
        F = builtin_family("nP", cfg.schedule, m=m)
        prof = mass_profile(F, D, cfg.resolution)
        roots = 2 ** (-1 / m) * np.exp(2j * np.pi * np.arange(m) / m)
        err = max(min(abs(p.location - r) for p in prof.S) for r in roots)
        masses = [a for a, _ in prof.alpha.values()]
        print(
            f"m={m}: |S|={len(prof.S)} (bound {int(prof.order_bound)}), max root error {err:.1e}, "
            f"masses {np.round(masses, 4).tolist()}, residual {prof.residual_area:.2e}"
        )
        results[m] = prof.to_json()
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(dumps(results) + "\n")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--degrees", default="1,2,3,4,5")
    p.add_argument("--resolution", type=int, default=128)
    p.add_argument("--out", default="")
    a = p.parse_args()
    main(Config(degrees=tuple(int(t) for t in a.degrees.split(",")), resolution=a.resolution, out=a.out))
