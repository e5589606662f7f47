"""Riemann-sphere geometry.

The chordal metric is normalised to diameter 1, so the whole sphere has area
pi and ``sigma(z, w) = |z - w| / (sqrt(1 + |z|^2) sqrt(1 + |w|^2))``.

Two representations are used. :class:`SpherePoint` is the explicit scalar
type with a dedicated infinity. Vectorised helpers work on complex numpy
arrays in which any non-finite entry stands for the point at infinity.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

INF = complex(np.inf, 0.0)


@dataclass(frozen=True)
class SpherePoint:
    """A point of the extended complex plane; ``value is None`` means infinity."""

    value: Optional[complex] = None

    def __post_init__(self):
        if self.value is not None:
            v = complex(self.value)
            if not (math.isfinite(v.real) and math.isfinite(v.imag)):
                raise ValueError("finite SpherePoint needs finite components; use SpherePoint.infinity()")
            object.__setattr__(self, "value", v)

    @classmethod
    def finite(cls, z) -> "SpherePoint":
        return cls(complex(z))

    @classmethod
    def infinity(cls) -> "SpherePoint":
        return cls(None)

    @classmethod
    def from_complex(cls, z) -> "SpherePoint":
        """Array-convention conversion: non-finite input becomes infinity."""
        z = complex(z)
        if math.isfinite(z.real) and math.isfinite(z.imag):
            return cls(z)
        return cls(None)

    @property
    def is_infinity(self) -> bool:
        return self.value is None

    def to_complex(self) -> complex:
        return INF if self.value is None else self.value

    def to_json(self):
        if self.value is None:
            return "inf"
        return [self.value.real, self.value.imag]

    def __repr__(self):
        return "SpherePoint(inf)" if self.value is None else f"SpherePoint({self.value!r})"


PointLike = Union[SpherePoint, complex, float, int]


def _as_complex(p: PointLike) -> complex:
    if isinstance(p, SpherePoint):
        return p.to_complex()
    return complex(p)


def is_infinite(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    return ~np.isfinite(z)


def chordal(z, w) -> np.ndarray:
    """Vectorised chordal distance between complex arrays (non-finite = infinity)."""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    z, w = np.broadcast_arrays(z, w)
    zi = ~np.isfinite(z)
    wi = ~np.isfinite(w)
    zf = np.where(zi, 0.0, z)
    wf = np.where(wi, 0.0, w)
    nz = np.sqrt(1.0 + np.abs(zf) ** 2)
    nw = np.sqrt(1.0 + np.abs(wf) ** 2)
    out = np.abs(zf - wf) / (nz * nw)
    out = np.where(zi & ~wi, 1.0 / nw, out)
    out = np.where(wi & ~zi, 1.0 / nz, out)
    out = np.where(zi & wi, 0.0, out)
    return np.minimum(out, 1.0)


def chordal_distance(a: PointLike, b: PointLike) -> float:
    """sigma(a, b) in [0, 1]."""
    a = _as_complex(a)
    b = _as_complex(b)
    return float(chordal(a, b))


@dataclass(frozen=True)
class RigidMotion:
    """Sphere rotation ``T(z) = phase * (z - a) / (1 + conj(a) z)``."""

    a: complex = 0j
    phase: complex = 1 + 0j

    def __post_init__(self):
        object.__setattr__(self, "a", complex(self.a))
        object.__setattr__(self, "phase", complex(self.phase))
        if abs(abs(self.phase) - 1.0) > 1e-12:
            raise ValueError(f"phase must be unimodular, got |phase|={abs(self.phase)}")

    @classmethod
    def from_angle(cls, a: complex, angle: float) -> "RigidMotion":
        return cls(a, cmath.exp(1j * angle))

    def inverse(self) -> "RigidMotion":
        return RigidMotion(-self.phase * self.a, self.phase.conjugate())

    def apply_array(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        inf = ~np.isfinite(z)
        zf = np.where(inf, 0.0, z)
        num = self.phase * (zf - self.a)
        den = 1.0 + self.a.conjugate() * zf
        with np.errstate(divide="ignore", invalid="ignore"):
            out = num / den
        out = np.where(den == 0, INF, out)
        if self.a == 0:
            at_inf = INF
        else:
            at_inf = self.phase / self.a.conjugate()
        return np.where(inf, at_inf, out)

    def __call__(self, p: PointLike) -> SpherePoint:
        return apply_motion(self, p)


def apply_motion(T: RigidMotion, p: PointLike) -> SpherePoint:
    if isinstance(p, SpherePoint) and p.is_infinity:
        if T.a == 0:
            return SpherePoint.infinity()
        return SpherePoint(T.phase / T.a.conjugate())
    z = _as_complex(p)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        return apply_motion(T, SpherePoint.infinity())
    den = 1.0 + T.a.conjugate() * z
    if den == 0:
        return SpherePoint.infinity()
    return SpherePoint(T.phase * (z - T.a) / den)


def stereographic_inverse(polar, azimuth) -> np.ndarray:
    """Sphere point at polar angle ``polar`` (0 = infinity) and ``azimuth`` as a complex number."""
    polar = np.asarray(polar, dtype=float)
    azimuth = np.asarray(azimuth, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = 1.0 / np.tan(polar / 2.0)
        out = r * np.exp(1j * azimuth)
    return np.where(polar == 0, INF, out)
