"""Covering counts of rational functions and the low-multiplicity value set.

``covering_count`` solves ``p(z) - w q(z) = 0`` through companion-matrix
eigenvalues and counts roots inside a domain. Summing counts over an
equal-area sample of the sphere gives an area estimate that shares no code
path with the quadrature module.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import (
    AreaBoundViolatedError,
    BoundaryRootWarning,
    DegenerateSetError,
    DegenerateTargetError,
    InsufficientMeasureError,
    ResolutionTooLowError,
)
from .funcmodel import RationalFunc
from .quadrature import Disk, spherical_area
from .sphere import INF, SpherePoint, chordal, stereographic_inverse

BOUNDARY_TOL = 1e-9
CLUSTER_FACTOR = 1e-7
MAX_ORACLE_DEGREE = 6
AREA_SLACK = 1e-3


@dataclass
class SphereSampleSet:
    """Weighted sample of the sphere; ``points`` uses INF for infinity."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=complex).ravel()
        self.weights = np.asarray(self.weights, dtype=float).ravel()
        if self.points.shape != self.weights.shape:
            raise ValueError("points and weights differ in length")
        if np.any(self.weights <= 0):
            raise ValueError("sample weights must be positive")

    @property
    def total_weight(self) -> float:
        return math.fsum(self.weights)

    def __len__(self):
        return len(self.points)

    def subset(self, mask) -> "SphereSampleSet":
        return SphereSampleSet(self.points[mask], self.weights[mask])

    def as_pairs(self):
        return [(SpherePoint.from_complex(p), float(w)) for p, w in zip(self.points, self.weights)]

    def to_json(self) -> dict:
        pts = [None if not np.isfinite(p) else [p.real, p.imag] for p in self.points]
        return {"points": pts, "weights": self.weights.tolist(), "total_weight": self.total_weight}


def sphere_grid(resolution: int) -> SphereSampleSet:
    """Equal-area latitude bands with longitudes proportional to band circumference.

    Band k spans ``cos(polar)`` in an interval of length ``2/resolution``, so each
    band has area ``pi/resolution``; its cells share that area equally.
    """
    if resolution < 1:
        raise ValueError("resolution must be positive")
    n = resolution
    pts, wts = [], []
    for k in range(n):
        c_mid = 1.0 - (2 * k + 1) / n
        polar = math.acos(c_mid)
        n_lon = max(1, round(2 * n * math.sin(polar)))
        az = (np.arange(n_lon) + 0.5) * (2 * math.pi / n_lon)
        pts.append(stereographic_inverse(np.full(n_lon, polar), az))
        wts.append(np.full(n_lon, math.pi / n / n_lon))
    return SphereSampleSet(np.concatenate(pts), np.concatenate(wts))


# --------------------------------------------------------------------------- root counting


def _target_poly(f: RationalFunc, w: complex) -> np.ndarray:
    if not np.isfinite(w):
        r = f.den.copy()
        scale = np.max(np.abs(f.den))
    else:
        r = P.polysub(f.num, w * f.den)
        scale = max(np.max(np.abs(f.num)), abs(w) * np.max(np.abs(f.den)))
    r = np.asarray(r, dtype=complex)
    if np.max(np.abs(r)) <= 1e-13 * scale:
        raise DegenerateTargetError(f"p - w q vanishes identically for w={w}")
    k = len(r)
    while k > 1 and abs(r[k - 1]) <= 1e-13 * scale:
        k -= 1
    return r[:k]


def _newton_polish(coeffs: np.ndarray, roots: np.ndarray, steps: int = 2) -> np.ndarray:
    """Two Newton steps, accepting a step only if it lowers |r|."""
    d = P.polyder(coeffs)
    for _ in range(steps):
        v = P.polyval(roots, coeffs)
        dv = P.polyval(roots, d)
        with np.errstate(divide="ignore", invalid="ignore"):
            cand = roots - v / dv
        ok = np.isfinite(cand) & (np.abs(P.polyval(cand, coeffs)) < np.abs(v))
        roots = np.where(ok, cand, roots)
    return roots


def poly_roots(coeffs: np.ndarray) -> np.ndarray:
    """Roots of an ascending-coefficient polynomial (balanced companion eigenvalues)."""
    coeffs = np.asarray(coeffs, dtype=complex)
    deg = len(coeffs) - 1
    if deg < 1:
        return np.zeros(0, dtype=complex)
    monic = coeffs[:-1] / coeffs[-1]
    comp = np.zeros((deg, deg), dtype=complex)
    comp[1:, :-1] = np.eye(deg - 1)
    comp[:, -1] = -monic
    roots = np.linalg.eigvals(comp)  # LAPACK geev balances the matrix
    return _newton_polish(coeffs, roots)


def _count_distinct(roots: np.ndarray, tol: float) -> int:
    distinct = 0
    for i, z in enumerate(roots):
        if not np.any(np.abs(roots[:i] - z) < tol):
            distinct += 1
    return distinct


def covering_count(f: RationalFunc, w, D, warn: bool = True) -> Tuple[int, int]:
    """Number of solutions of ``f(z) = w`` strictly inside D: ``(with_multiplicity, distinct)``."""
    if isinstance(w, SpherePoint):
        w = w.to_complex()
    w = complex(w)
    r = _target_poly(f, w)
    roots = poly_roots(r)
    if roots.size == 0:
        return 0, 0
    near = D.boundary_distance(roots) <= BOUNDARY_TOL
    if warn and np.any(near):
        warnings.warn(f"root(s) {roots[near]} within {BOUNDARY_TOL} of the boundary", BoundaryRootWarning)
    inside = roots[D.contains(roots) & ~near]
    return int(inside.size), _count_distinct(inside, CLUSTER_FACTOR * D.diam)


def _batched_counts(f: RationalFunc, ws: np.ndarray, D) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorised covering counts for many finite targets sharing one degree."""
    L = max(len(f.num), len(f.den))
    p = np.zeros(L, dtype=complex)
    q = np.zeros(L, dtype=complex)
    p[: len(f.num)] = f.num
    q[: len(f.den)] = f.den
    with_mult = np.zeros(len(ws), dtype=int)
    distinct = np.zeros(len(ws), dtype=int)
    finite = np.isfinite(ws)
    coeffs = p[None, :] - ws[:, None] * q[None, :]
    coeffs[~finite] = q
    lead = np.abs(coeffs[:, -1])
    scale = np.maximum(np.max(np.abs(p)), np.where(finite, np.abs(np.where(finite, ws, 0)), 1.0) * np.max(np.abs(q)))
    regular = lead > 1e-8 * scale
    tol = CLUSTER_FACTOR * D.diam
    deg = L - 1
    idx = np.flatnonzero(regular)
    if deg >= 1 and idx.size:
        c = coeffs[idx]
        monic = c[:, :-1] / c[:, -1:]
        comp = np.zeros((idx.size, deg, deg), dtype=complex)
        if deg > 1:
            comp[:, 1:, :-1] = np.eye(deg - 1)
        comp[:, :, -1] = -monic
        roots = np.linalg.eigvals(comp)
        # Newton polish, row by row polynomial via Horner
        for _ in range(2):
            v = np.zeros_like(roots)
            dv = np.zeros_like(roots)
            for k in range(deg, -1, -1):
                dv = dv * roots + v
                v = v * roots + c[:, k : k + 1]
            with np.errstate(divide="ignore", invalid="ignore"):
                cand = roots - v / dv
            vc = np.zeros_like(roots)
            for k in range(deg, -1, -1):
                vc = vc * cand + c[:, k : k + 1]
            ok = np.isfinite(cand) & (np.abs(vc) < np.abs(v))
            roots = np.where(ok, cand, roots)
        inside = D.contains(roots) & (D.boundary_distance(roots) > BOUNDARY_TOL)
        with_mult[idx] = inside.sum(axis=1)
        # distinct: a root counts unless an earlier inside root lies within tol
        dist = np.abs(roots[:, :, None] - roots[:, None, :])
        earlier = np.tril(np.ones((deg, deg), dtype=bool), -1)[None]
        dup = np.any((dist < tol) & earlier & inside[:, None, :], axis=2)
        distinct[idx] = (inside & ~dup).sum(axis=1)
    for i in np.flatnonzero(~regular):
        try:
            with_mult[i], distinct[i] = covering_count(f, ws[i], D, warn=False)
        except DegenerateTargetError:
            with_mult[i] = distinct[i] = 0
    return with_mult, distinct


def covering_area_oracle(f: RationalFunc, D, sphere_grid_resolution: int = 64) -> float:
    """``(1/pi) sum_w n_f(w, D) weight(w)`` over an equal-area sphere grid."""
    if sphere_grid_resolution < 16:
        raise ResolutionTooLowError("sphere grid resolution must be >= 16")
    if f.degree > MAX_ORACLE_DEGREE:
        raise ValueError(f"covering oracle limited to degree <= {MAX_ORACLE_DEGREE}")
    grid = sphere_grid(sphere_grid_resolution)
    counts, _ = _batched_counts(f, grid.points, D)
    return math.fsum(counts * grid.weights) / math.pi


def argument_principle_count(f: RationalFunc, w: complex, D: Disk, nodes: int = 4096) -> float:
    """Zeros of ``p - w q`` in a disk via the contour integral of its logarithmic derivative."""
    r = P.polysub(f.num, w * f.den) if np.isfinite(w) else f.den
    dr = P.polyder(r)
    t = 2 * math.pi * np.arange(nodes) / nodes
    z = D.center + D.radius * np.exp(1j * t)
    dz = 1j * D.radius * np.exp(1j * t)
    integrand = P.polyval(z, dr) / P.polyval(z, r) * dz
    return float((integrand.mean() * 2 * math.pi / (2j * math.pi)).real)


# --------------------------------------------------------------------------- low multiplicity


def order_parameters(C: float) -> Tuple[int, float]:
    """``m = floor(C)`` and ``epsilon = pi (1 - C/(m+1))``."""
    if not C > 0:
        raise ValueError("C must be positive")
    m = math.floor(C)
    return m, math.pi * (1.0 - C / (m + 1))


@dataclass
class CoveringReport:
    m: int
    epsilon: float
    measure_low: float
    sampled_E: SphereSampleSet
    grid_error: float = 0.0
    area: float = 0.0
    C: float = 0.0

    def to_json(self) -> dict:
        return {
            "C": self.C,
            "m": self.m,
            "epsilon": self.epsilon,
            "measure_low": self.measure_low,
            "grid_error": self.grid_error,
            "area": self.area,
            "sampled_E_size": len(self.sampled_E),
        }


def low_multiplicity_report(f: RationalFunc, D, C: float, resolution: int = 64, tol: float = 1e-8) -> CoveringReport:
    """Measure of values assumed at most ``floor(C)`` times (ignoring multiplicity)."""
    if resolution < 16:
        raise ResolutionTooLowError("sphere grid resolution must be >= 16")
    area = spherical_area(f, D, tol).value
    if area > C + AREA_SLACK:
        raise AreaBoundViolatedError(f"spherical area {area:.6g} exceeds C = {C}")
    m, eps = order_parameters(C)
    grid = sphere_grid(resolution)
    with_mult, distinct = _batched_counts(f, grid.points, D)
    low = distinct <= m
    grid_area = math.fsum(with_mult * grid.weights) / math.pi
    E = grid.subset(low) if low.any() else SphereSampleSet(np.zeros(0, complex), np.zeros(0))
    return CoveringReport(
        m=m,
        epsilon=eps,
        measure_low=math.fsum(grid.weights[low]),
        sampled_E=E,
        grid_error=math.pi * abs(grid_area - area),
        area=area,
        C=C,
    )


@dataclass
class SeparatedTriple:
    a: SpherePoint
    b: SpherePoint
    c: SpherePoint
    achieved_delta: float
    target_delta: float
    indices: Tuple[int, int, int] = field(default=(0, 0, 0))


def three_separated_points(E: SphereSampleSet, alpha: float) -> SeparatedTriple:
    """Greedy max-min triple in E; reports the planar target ``sqrt(alpha/pi)/sqrt(2)`` alongside."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if len(E) == 0 or E.total_weight < alpha:
        raise InsufficientMeasureError(f"set weight {E.total_weight if len(E) else 0.0:.6g} < alpha = {alpha}")
    pts = E.points
    key = np.where(np.isfinite(pts), pts, INF)
    if len({(z.real, z.imag) if np.isfinite(z) else "inf" for z in key}) < 3:
        raise DegenerateSetError("need at least three distinct points")
    ia = 0
    ib = int(np.argmax(chordal(pts[ia], pts)))
    ic = int(np.argmax(np.minimum(chordal(pts[ia], pts), chordal(pts[ib], pts))))
    # polish: re-seed a against the pair (b, c)
    ia = int(np.argmax(np.minimum(chordal(pts[ib], pts), chordal(pts[ic], pts))))
    a, b, c = pts[ia], pts[ib], pts[ic]
    achieved = float(min(chordal(a, b), chordal(a, c), chordal(b, c)))
    return SeparatedTriple(
        SpherePoint.from_complex(a),
        SpherePoint.from_complex(b),
        SpherePoint.from_complex(c),
        achieved,
        math.sqrt(alpha / math.pi) / math.sqrt(2.0),
        (ia, ib, ic),
    )
