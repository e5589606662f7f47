"""Adaptive 2-D integration of powers of the spherical derivative.

The value returned by :func:`spherical_area` is ``(1/pi) * int_D (f^#)^2 dx dy``,
i.e. the spherical area of the image counted with multiplicity, in units of
the whole sphere. :func:`ls_integral` replaces the exponent 2 by ``s``.

Cells are rectangles in a parameter plane: Cartesian for rectangles, polar
(radius, angle) for disks and annuli, with the Jacobian folded into the
integrand. Each cell carries a 15-point and a 7-point tensor Gauss-Legendre
estimate; their difference is the cell error. The worst cells are split
first, in batches.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Sequence, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import BudgetExceededError, EvaluationDomainError
from .funcmodel import MeroFunc

DEFAULT_MAX_CELLS = 2**22
SPIKE_THRESHOLD = 1e3
FLOOR_FACTOR = 1e-7

_X15, _W15 = leggauss(15)
_X7, _W7 = leggauss(7)


# --------------------------------------------------------------------------- domains


@dataclass(frozen=True)
class Rectangle:
    x0: float
    x1: float
    y0: float
    y1: float

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ValueError("rectangle needs x0 < x1 and y0 < y1")

    @property
    def diam(self) -> float:
        return math.hypot(self.x1 - self.x0, self.y1 - self.y0)

    @property
    def bbox(self):
        return (self.x0, self.x1, self.y0, self.y1)

    def contains(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return (z.real > self.x0) & (z.real < self.x1) & (z.imag > self.y0) & (z.imag < self.y1)

    def boundary_distance(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        dx = np.minimum(np.abs(z.real - self.x0), np.abs(z.real - self.x1))
        dy = np.minimum(np.abs(z.imag - self.y0), np.abs(z.imag - self.y1))
        inside_x = (z.real >= self.x0) & (z.real <= self.x1)
        inside_y = (z.imag >= self.y0) & (z.imag <= self.y1)
        d_in = np.minimum(dx, dy)
        ox = np.maximum(np.maximum(self.x0 - z.real, z.real - self.x1), 0.0)
        oy = np.maximum(np.maximum(self.y0 - z.imag, z.imag - self.y1), 0.0)
        d_out = np.hypot(ox, oy)
        d_edge_x = np.where(inside_y, dx, np.inf)
        d_edge_y = np.where(inside_x, dy, np.inf)
        return np.where(inside_x & inside_y, d_in, np.minimum(d_out, np.minimum(d_edge_x, d_edge_y)))

    def to_spec(self) -> str:
        return f"rect:{self.x0!r},{self.x1!r},{self.y0!r},{self.y1!r}"


@dataclass(frozen=True)
class Disk:
    center: complex
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", complex(self.center))
        if not self.radius > 0:
            raise ValueError("disk radius must be positive")

    @property
    def diam(self) -> float:
        return 2.0 * self.radius

    @property
    def bbox(self):
        c, r = self.center, self.radius
        return (c.real - r, c.real + r, c.imag - r, c.imag + r)

    def contains(self, z) -> np.ndarray:
        return np.abs(np.asarray(z, dtype=complex) - self.center) < self.radius

    def boundary_distance(self, z) -> np.ndarray:
        return np.abs(np.abs(np.asarray(z, dtype=complex) - self.center) - self.radius)

    def to_spec(self) -> str:
        return f"disk:{self.center.real!r},{self.center.imag!r},{self.radius!r}"


@dataclass(frozen=True)
class Annulus:
    center: complex
    r_in: float
    r_out: float

    def __post_init__(self):
        object.__setattr__(self, "center", complex(self.center))
        if not (0 <= self.r_in < self.r_out):
            raise ValueError("annulus needs 0 <= r_in < r_out")

    @property
    def diam(self) -> float:
        return 2.0 * self.r_out

    @property
    def bbox(self):
        c, r = self.center, self.r_out
        return (c.real - r, c.real + r, c.imag - r, c.imag + r)

    def contains(self, z) -> np.ndarray:
        d = np.abs(np.asarray(z, dtype=complex) - self.center)
        return (d > self.r_in) & (d < self.r_out)

    def boundary_distance(self, z) -> np.ndarray:
        d = np.abs(np.asarray(z, dtype=complex) - self.center)
        return np.minimum(np.abs(d - self.r_in), np.abs(d - self.r_out))

    def to_spec(self) -> str:
        return f"annulus:{self.center.real!r},{self.center.imag!r},{self.r_in!r},{self.r_out!r}"


@dataclass(frozen=True)
class DiskMinusPoints:
    """Disk with small closed disks (point, hole_radius) removed."""

    center: complex
    radius: float
    excluded: Tuple[Tuple[complex, float], ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "center", complex(self.center))
        holes = tuple((complex(p), float(h)) for p, h in self.excluded)
        object.__setattr__(self, "excluded", holes)
        if not self.radius > 0:
            raise ValueError("disk radius must be positive")
        for p, h in holes:
            if h <= 0:
                raise ValueError("hole radii must be positive")
            if abs(p - self.center) + h >= self.radius:
                raise ValueError(f"hole at {p} (radius {h}) is not inside the disk")

    @property
    def diam(self) -> float:
        return 2.0 * self.radius

    @property
    def bbox(self):
        return Disk(self.center, self.radius).bbox

    def contains(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        inside = np.abs(z - self.center) < self.radius
        for p, h in self.excluded:
            inside &= np.abs(z - p) > h
        return inside

    def boundary_distance(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        d = np.abs(np.abs(z - self.center) - self.radius)
        for p, h in self.excluded:
            d = np.minimum(d, np.abs(np.abs(z - p) - h))
        return d

    def to_spec(self) -> str:
        holes = ";".join(f"{p.real!r},{p.imag!r},{h!r}" for p, h in self.excluded)
        return f"diskminus:{self.center.real!r},{self.center.imag!r},{self.radius!r}|{holes}"


Domain2D = (Rectangle, Disk, Annulus, DiskMinusPoints)


def parse_domain(text: str):
    """Parse ``disk:cx,cy,r``, ``rect:x0,x1,y0,y1``, ``annulus:cx,cy,rin,rout`` or
    ``diskminus:cx,cy,r|px,py,h;px,py,h``."""
    kind, _, rest = text.partition(":")
    try:
        if kind == "disk":
            cx, cy, r = (float(t) for t in rest.split(","))
            return Disk(complex(cx, cy), r)
        if kind == "rect":
            x0, x1, y0, y1 = (float(t) for t in rest.split(","))
            return Rectangle(x0, x1, y0, y1)
        if kind == "annulus":
            cx, cy, ri, ro = (float(t) for t in rest.split(","))
            return Annulus(complex(cx, cy), ri, ro)
        if kind == "diskminus":
            main, _, holes = rest.partition("|")
            cx, cy, r = (float(t) for t in main.split(","))
            exc = []
            for h in filter(None, holes.split(";")):
                px, py, hr = (float(t) for t in h.split(","))
                exc.append((complex(px, py), hr))
            return DiskMinusPoints(complex(cx, cy), r, tuple(exc))
    except ValueError as exc:
        raise ValueError(f"cannot parse domain {text!r}: {exc}") from exc
    raise ValueError(f"unknown domain kind {kind!r} in {text!r}")


# --------------------------------------------------------------------------- results


@dataclass
class QuadResult:
    value: float
    error_estimate: float
    cells: int
    converged: bool

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "error_estimate": self.error_estimate,
            "cells": self.cells,
            "converged": self.converged,
        }

    def __add__(self, other: "QuadResult") -> "QuadResult":
        return QuadResult(
            self.value + other.value,
            self.error_estimate + other.error_estimate,
            self.cells + other.cells,
            self.converged and other.converged,
        )


# --------------------------------------------------------------------------- engine


@dataclass
class _Mapping:
    """Parameter-plane rectangle(s) plus the map to the complex plane."""

    cells: List[Tuple[float, float, float, float]]
    to_z: Callable  # (u, v) -> z
    jacobian: Callable  # (u, v) -> |det|
    polar: bool


def _radial_breaks(r0: float, r1: float) -> List[float]:
    """Geometric breakpoints clustering toward r0 (mass sits near the centre)."""
    span = r1 - r0
    levels = 4 + max(0, math.ceil(math.log2(max(r1, 1.0))))
    breaks = [r0] + [r0 + span * 2.0**-k for k in range(levels, -1, -1)]
    return breaks


def _mapping(D) -> _Mapping:
    if isinstance(D, Rectangle):
        n0 = 4
        xs = np.linspace(D.x0, D.x1, n0 + 1)
        ys = np.linspace(D.y0, D.y1, n0 + 1)
        cells = [(xs[i], xs[i + 1], ys[j], ys[j + 1]) for j in range(n0) for i in range(n0)]
        return _Mapping(cells, lambda u, v: u + 1j * v, lambda u, v: np.ones_like(u), False)
    if isinstance(D, (Disk, Annulus)):
        c = D.center
        r0, r1 = (0.0, D.radius) if isinstance(D, Disk) else (D.r_in, D.r_out)
        rb = _radial_breaks(r0, r1)
        n_ang = 8
        th = np.linspace(0.0, 2 * math.pi, n_ang + 1)
        cells = [(rb[i], rb[i + 1], th[j], th[j + 1]) for j in range(n_ang) for i in range(len(rb) - 1)]
        return _Mapping(cells, lambda u, v: c + u * np.exp(1j * v), lambda u, v: u, True)
    raise TypeError(f"unsupported domain {D!r}")


class _Integrator:
    def __init__(self, f: MeroFunc, s: float, mapping: _Mapping, floor: float, workers: int = 1):
        self.f = f
        self.s = s
        self.m = mapping
        self.floor = floor
        self.workers = max(1, int(workers))

    def _eval_chunk(self, boxes: np.ndarray):
        u0, u1, v0, v1 = boxes.T
        um, uh = 0.5 * (u0 + u1), 0.5 * (u1 - u0)
        vm, vh = 0.5 * (v0 + v1), 0.5 * (v1 - v0)

        def rule(x, w):
            uu = um[:, None, None] + uh[:, None, None] * x[None, :, None]
            vv = vm[:, None, None] + vh[:, None, None] * x[None, None, :]
            sh = self.f.sharp(self.m.to_z(uu, vv))
            g = sh**self.s * self.m.jacobian(uu, vv)
            val = np.einsum("kij,i,j->k", g, w, w) * uh * vh / math.pi
            return val, sh

        i15, sh15 = rule(_X15, _W15)
        i7, _ = rule(_X7, _W7)
        shmax = sh15.reshape(len(boxes), -1).max(axis=1)
        zc = self.m.to_z(um, vm)
        mid = self.f.sharp(zc) ** self.s * self.m.jacobian(um, vm) * 4 * uh * vh / math.pi
        return i15, np.abs(i15 - i7), shmax, mid

    def evaluate(self, boxes: np.ndarray):
        if self.workers == 1 or len(boxes) < 64:
            return self._eval_chunk(boxes)
        chunks = np.array_split(boxes, self.workers)
        with ThreadPoolExecutor(self.workers) as pool:
            parts = list(pool.map(self._eval_chunk, chunks))
        return tuple(np.concatenate([p[i] for p in parts]) for i in range(4))

    def size(self, boxes: np.ndarray) -> np.ndarray:
        du = boxes[:, 1] - boxes[:, 0]
        dv = boxes[:, 3] - boxes[:, 2]
        if self.m.polar:
            return np.maximum(du, boxes[:, 1] * dv)
        return np.maximum(du, dv)


def _split(boxes: np.ndarray) -> np.ndarray:
    u0, u1, v0, v1 = boxes.T
    um = 0.5 * (u0 + u1)
    vm = 0.5 * (v0 + v1)
    kids = np.stack(
        [
            np.stack([u0, um, v0, vm], 1),
            np.stack([um, u1, v0, vm], 1),
            np.stack([u0, um, vm, v1], 1),
            np.stack([um, u1, vm, v1], 1),
        ],
        1,
    )
    return kids.reshape(-1, 4)


def _adaptive(
    f: MeroFunc,
    s: float,
    D,
    tol: float,
    max_cells: int = DEFAULT_MAX_CELLS,
    spike_threshold: float = SPIKE_THRESHOLD,
    workers: int = 1,
) -> QuadResult:
    mapping = _mapping(D)
    floor = FLOOR_FACTOR * D.diam
    eng = _Integrator(f, s, mapping, floor, workers)

    boxes = np.array(mapping.cells, dtype=float)
    val, err, shmax, mid = eng.evaluate(boxes)
    frozen = np.zeros(len(boxes), dtype=bool)
    # retired cells (split parents are dropped; frozen floor cells stay)
    while True:
        total_err = math.fsum(err)
        size = eng.size(boxes)
        splittable = (~frozen) & (size > floor)
        # spike forcing: resolve the local bubble scale 1/f^#
        forced = splittable & (shmax > spike_threshold) & (size * shmax > 1.0)
        if total_err <= tol and not forced.any():
            return QuadResult(math.fsum(val), total_err, len(boxes), True)
        candidates = np.flatnonzero((~frozen) & (err > 0))
        at_floor = candidates[~splittable[candidates]]
        if at_floor.size:
            frozen[at_floor] = True
            err[at_floor] = np.maximum(err[at_floor], np.abs(mid[at_floor] - val[at_floor]))
            val[at_floor] = mid[at_floor]
            continue
        order = candidates[np.argsort(-err[candidates], kind="stable")]
        k = max(1, min(256, math.ceil(0.1 * len(order))))
        pick = set(order[:k].tolist()) | set(np.flatnonzero(forced).tolist())
        if not pick:
            return QuadResult(math.fsum(val), total_err, len(boxes), total_err <= tol)
        pick = np.array(sorted(pick))
        if len(boxes) + 3 * len(pick) > max_cells:
            partial = QuadResult(math.fsum(val), total_err, len(boxes), False)
            raise BudgetExceededError(f"cell budget {max_cells} exhausted (error {total_err:.3g} > tol {tol:.3g})", partial)
        keep = np.ones(len(boxes), dtype=bool)
        keep[pick] = False
        kids = _split(boxes[pick])
        kv, ke, ks, km = eng.evaluate(kids)
        boxes = np.concatenate([boxes[keep], kids])
        val = np.concatenate([val[keep], kv])
        err = np.concatenate([err[keep], ke])
        shmax = np.concatenate([shmax[keep], ks])
        mid = np.concatenate([mid[keep], km])
        frozen = np.concatenate([frozen[keep], np.zeros(len(kids), dtype=bool)])


def _holes_evaluable(f: MeroFunc, D: DiskMinusPoints):
    for s in getattr(f, "singularities", ()):
        for p, h in D.excluded:
            if abs(s - p) <= h:
                raise EvaluationDomainError(
                    f"singularity {s} lies in hole around {p}; hole subtraction needs f evaluable there"
                )


def ls_integral(f: MeroFunc, D, s: float, tol: float = 1e-8, **kw) -> QuadResult:
    """``(1/pi) int_D (f^#)^s dx dy`` by adaptive tensor Gauss-Legendre quadrature."""
    if not s > 0:
        raise ValueError("exponent s must be positive")
    if not tol > 0:
        raise ValueError("tolerance must be positive")
    if isinstance(D, DiskMinusPoints):
        _holes_evaluable(f, D)
        share = tol / (1 + len(D.excluded))
        outer = _adaptive(f, s, Disk(D.center, D.radius), share, **kw)
        res = outer
        for p, h in D.excluded:
            hole = _adaptive(f, s, Disk(p, h), share, **kw)
            res = QuadResult(
                res.value - hole.value,
                res.error_estimate + hole.error_estimate,
                res.cells + hole.cells,
                res.converged and hole.converged,
            )
        res.value = max(res.value, 0.0)
        return res
    return _adaptive(f, s, D, tol, **kw)


def spherical_area(f: MeroFunc, D, tol: float = 1e-8, **kw) -> QuadResult:
    """Spherical area of f(D) with multiplicity, divided by pi."""
    return ls_integral(f, D, 2.0, tol, **kw)


def annulus_area_series(f: MeroFunc, z0: complex, R: float, levels: int, tol: float = 1e-9, **kw) -> List[float]:
    """Areas (over pi) of the dyadic annuli ``R/2^n < |z - z0| < R/2^(n-1)``, n = 1..levels."""
    if levels < 1:
        raise ValueError("levels must be >= 1")
    out = []
    for n in range(1, levels + 1):
        res = spherical_area(f, Annulus(z0, R / 2**n, R / 2 ** (n - 1)), tol / levels, **kw)
        out.append(res.value)
    return out
