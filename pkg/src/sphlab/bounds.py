"""Schwarz-type bounds for the spherical derivative on the unit disk.

Closed forms:

* Poincare density (curvature -4): ``1 / (1 - |z|^2)``
* small-area bound, ``0 < C < 1``: ``sqrt(C / (1 - C)) / (1 - |z|^2)``
* lower-bounded families ``f^# >= c`` (``0 < c <= 1/2``):
  ``1 / (c (1 - |z|^2)^2)`` and the sharper
  ``(1 + sqrt(1 - 4 c^2 (1 - |z|^2)^2)) / (2 c (1 - |z|^2)^2)``;
  at the origin the latter, ``(1 + sqrt(1 - 4 c^2)) / (2 c)``, is attained.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Tuple

import numpy as np

from .errors import HypothesisViolatedError, OutsideDiskError, ParameterRangeError
from .funcmodel import MeroFunc
from .quadrature import Disk, spherical_area

# Known improvement of the boundary-asymptotic constant for f^# >= c families;
# exposed for reference only, no finite-z bound accompanies it.
ASYMPTOTIC_CONSTANT = (3.0 - math.sqrt(5.0)) / 2.0

RATIO_SLACK = 1e-6
HYPOTHESIS_SLACK = 1e-3
N_RADII = 64
N_ANGLES = 128
EDGE = 1e-3


def _check_disk(z) -> float:
    r2 = abs(complex(z)) ** 2
    if r2 >= 1.0:
        raise OutsideDiskError(f"|z| = {math.sqrt(r2):.6g} is not inside the unit disk")
    return r2


def _check_c(c: float):
    if not (0 < c <= 0.5):
        raise ParameterRangeError(f"c = {c} outside (0, 1/2]; families with f^# >= c > 1/2 on the disk are empty")


def poincare_density_disk(z) -> float:
    return 1.0 / (1.0 - _check_disk(z))


def dufresnoy_yamashita_bound(C: float, z) -> float:
    if not (0 < C < 1):
        raise ParameterRangeError(f"C = {C} outside (0, 1): no uniform bound once bubbles are possible")
    return math.sqrt(C / (1.0 - C)) * poincare_density_disk(z)


def steinmetz_bound(c: float, z) -> float:
    _check_c(c)
    t = 1.0 - _check_disk(z)
    return 1.0 / (c * t * t)


def fkr_bound(c: float, z) -> float:
    _check_c(c)
    t = 1.0 - _check_disk(z)
    x = 2.0 * c * t * t
    return (1.0 + math.sqrt(max(1.0 - x * x, 0.0))) / x


def extremal_sharp_at_zero(c: float) -> float:
    _check_c(c)
    return (1.0 + math.sqrt(1.0 - 4.0 * c * c)) / (2.0 * c)


def sweep_grid(n_radii: int = N_RADII, n_angles: int = N_ANGLES, edge: float = EDGE) -> np.ndarray:
    """Radii ``1 - edge^(k/(n-1))`` (0 up to ``1 - edge``, clustering at the rim) times angles."""
    k = np.arange(n_radii)
    radii = 1.0 - edge ** (k / (n_radii - 1))
    ang = 2 * math.pi * np.arange(n_angles) / n_angles
    return radii[:, None] * np.exp(1j * ang)[None, :]


def min_spherical_derivative(f: MeroFunc, resolution: int = N_ANGLES) -> float:
    """Grid minimum of f^# over concentric rings out to radius 1 - 1e-3 (upper estimate of the infimum)."""
    z = sweep_grid(N_RADII, resolution)
    return float(np.min(f.sharp(z)))


@dataclass
class BoundReport:
    bound_name: str
    parameters: dict
    grid_violations: List[Tuple[complex, float, float]] = field(default_factory=list)
    max_ratio: float = 0.0

    @property
    def verified(self) -> bool:
        return self.max_ratio <= 1.0 + RATIO_SLACK

    def to_json(self) -> dict:
        return {
            "bound_name": self.bound_name,
            "parameters": self.parameters,
            "grid_violations": [[[z.real, z.imag], s, b] for z, s, b in self.grid_violations],
            "max_ratio": self.max_ratio,
            "verified": self.verified,
        }


def _vectorised(bound: str, param: float) -> Callable[[np.ndarray], np.ndarray]:
    if bound == "dufresnoy":
        k = math.sqrt(param / (1.0 - param))
        return lambda z: k / (1.0 - np.abs(z) ** 2)
    if bound == "steinmetz":
        return lambda z: 1.0 / (param * (1.0 - np.abs(z) ** 2) ** 2)
    if bound == "fkr":

        def fkr(z):
            t = (1.0 - np.abs(z) ** 2) ** 2
            x = 2.0 * param * t
            return (1.0 + np.sqrt(np.maximum(1.0 - x * x, 0.0))) / x

        return fkr
    raise ValueError(f"unknown bound {bound!r}; expected dufresnoy, steinmetz or fkr")


def verify_bound(f: MeroFunc, bound: str, param: float, resolution: int = N_ANGLES) -> BoundReport:
    """Check ``f^# <= bound`` on the sweep grid after verifying the bound's hypothesis for f."""
    if bound == "dufresnoy":
        if not (0 < param < 1):
            raise ParameterRangeError(f"C = {param} outside (0, 1)")
        area = spherical_area(f, Disk(0, 1), 1e-8).value
        if area > param + HYPOTHESIS_SLACK:
            raise HypothesisViolatedError(f"spherical area {area:.6g} exceeds C = {param}")
    elif bound in ("steinmetz", "fkr"):
        _check_c(param)
        lo = min_spherical_derivative(f, resolution)
        if lo < param - HYPOTHESIS_SLACK:
            raise HypothesisViolatedError(f"min f^# = {lo:.6g} is below c = {param}")
    bfun = _vectorised(bound, param)
    z = sweep_grid(N_RADII, resolution).ravel()
    sh = f.sharp(z)
    bz = bfun(z)
    ratio = sh / bz
    bad = ratio > 1.0 + RATIO_SLACK
    viol = [(complex(a), float(s), float(b)) for a, s, b in zip(z[bad], sh[bad], bz[bad])]
    key = "C" if bound == "dufresnoy" else "c"
    return BoundReport(bound, {key: param, "resolution": resolution}, viol, float(ratio.max()))
