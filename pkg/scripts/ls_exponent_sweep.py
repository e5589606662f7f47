"""(1/pi) int_D (f_n^#)^s for e^{inz} across s, to see which exponents stay bounded in n.

For s = 1 the values stay below 1; at s = 2 they grow linearly in n. Exponents
in between are explored empirically only.
"""
import argparse
from dataclasses import dataclass

import numpy as np

from sphlab.funcmodel import builtin_family
from sphlab.quadrature import Disk, ls_integral


@dataclass
class Config:
    exponents: tuple = (0.5, 1.0, 1.25, 1.5, 1.75, 2.0)
    ns: tuple = (1, 2, 4, 8, 16, 32, 64)
    tol: float = 1e-7


def main(cfg: Config) -> None:
    F = builtin_family("exp_inz", cfg.ns)
    print("s \\ n " + " ".join(f"{n:>10d}" for n in cfg.ns) + "   log-log slope")
    for s in cfg.exponents:
        vals = [ls_integral(F[n], Disk(0, 1), s, cfg.tol).value for n in cfg.ns]
        slope = np.polyfit(np.log(cfg.ns[-3:]), np.log(vals[-3:]), 1)[0]
        print(f"{s:5.2f} " + " ".join(f"{v:10.5f}" for v in vals) + f"   {slope:6.3f}")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--exponents", default="0.5,1,1.25,1.5,1.75,2")
    a = p.parse_args()
    main(Config(exponents=tuple(float(t) for t in a.exponents.split(","))))
