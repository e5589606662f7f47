"""Bubble detection and mass concentration for families of meromorphic functions.

A grid cell is flagged when the cell-wise maximum of ``f_n^#`` grows like
``n^k`` with ``k > 0.5`` along the family schedule. Flagged cells are
clustered; finite clusters become irregular points, while clusters that are
too long or too many are reported as a failure of quasi-normality.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage, optimize

from .errors import NotConcentratedError, NotQuasiNormalError, ResolutionTooLowError, ScheduleTooShortError
from .funcmodel import FamilySpec, MeroFunc
from .quadrature import Annulus, Disk, Rectangle, spherical_area
from .sphere import SpherePoint, chordal

logger = logging.getLogger(__name__)

GROWTH_THRESHOLD = 0.5
MAX_CLUSTER_DIAMETER = 10  # in base cells
SUBSAMPLES = 4
REFINE_FACTOR = 4
DEFAULT_EPS = (0.4, 0.2, 0.1)


# --------------------------------------------------------------------------- Marty field


@dataclass
class MartyField:
    """``f^#`` on the nodes of a regular grid over ``bbox``; NaN outside the domain."""

    values: np.ndarray
    bbox: Tuple[float, float, float, float]
    resolution: int

    @property
    def xs(self):
        return np.linspace(self.bbox[0], self.bbox[1], self.resolution)

    @property
    def ys(self):
        return np.linspace(self.bbox[2], self.bbox[3], self.resolution)

    def max(self) -> float:
        return float(np.nanmax(self.values))

    def argmax(self) -> complex:
        j, i = np.unravel_index(np.nanargmax(self.values), self.values.shape)
        return complex(self.xs[i], self.ys[j])


def marty_field(f: MeroFunc, D, resolution: int = 64) -> MartyField:
    if resolution < 8:
        raise ResolutionTooLowError("marty_field needs resolution >= 8")
    x0, x1, y0, y1 = D.bbox
    xs = np.linspace(x0, x1, resolution)
    ys = np.linspace(y0, y1, resolution)
    z = xs[None, :] + 1j * ys[:, None]
    inside = D.contains(z)
    vals = np.full(z.shape, np.nan)
    vals[inside] = f.sharp(z[inside])
    return MartyField(vals, (x0, x1, y0, y1), resolution)


def family_marty_field(F: FamilySpec, D, resolution: int = 64) -> MartyField:
    """Pointwise sup over the schedule of the single-member fields."""
    fields = [marty_field(f, D, resolution) for _, f in F.members()]
    stacked = np.stack([m.values for m in fields])
    # NaN (outside D) is shared by every member, so max over members keeps it
    return MartyField(np.max(stacked, axis=0), fields[0].bbox, resolution)


# --------------------------------------------------------------------------- growth exponents


def _growth_slope(log_n: np.ndarray, logs: np.ndarray) -> np.ndarray:
    """Least-squares slope of logs (..., N) against log_n (N,)."""
    x = log_n - log_n.mean()
    y = logs - logs.mean(axis=-1, keepdims=True)
    return (y @ x) / (x @ x)


@dataclass
class GrowthGrid:
    exponents: np.ndarray  # (ny, nx), NaN outside the domain
    cell_max: np.ndarray  # (N, ny, nx) local maxima per schedule member
    argmax: np.ndarray  # (N, ny, nx) complex location of each local max
    bbox: Tuple[float, float, float, float]
    nx: int
    ny: int

    @property
    def hx(self):
        return (self.bbox[1] - self.bbox[0]) / self.nx

    @property
    def hy(self):
        return (self.bbox[3] - self.bbox[2]) / self.ny

    def centers(self):
        xs = self.bbox[0] + (np.arange(self.nx) + 0.5) * self.hx
        ys = self.bbox[2] + (np.arange(self.ny) + 0.5) * self.hy
        return xs, ys

    @property
    def flagged(self) -> np.ndarray:
        with np.errstate(invalid="ignore"):
            return np.nan_to_num(self.exponents, nan=-np.inf) > GROWTH_THRESHOLD


def growth_grid(F: FamilySpec, D, bbox, nx: int, ny: int, subsamples: int = SUBSAMPLES) -> GrowthGrid:
    """Cell-wise ``max f_n^#`` over a ``subsamples^2`` lattice and its log-log growth slope."""
    x0, x1, y0, y1 = bbox
    k = subsamples
    xs = x0 + (np.arange(nx * k) + 0.5) * (x1 - x0) / (nx * k)
    ys = y0 + (np.arange(ny * k) + 0.5) * (y1 - y0) / (ny * k)
    z = xs[None, :] + 1j * ys[:, None]
    inside = D.contains(z)
    zin = z[inside]
    cell_in = inside.reshape(ny, k, nx, k).any(axis=(1, 3))
    maxes, locs = [], []
    for _, f in F.members():
        v = np.zeros(z.shape)
        v[inside] = f.sharp(zin)
        blocks = v.reshape(ny, k, nx, k).transpose(0, 2, 1, 3).reshape(ny, nx, k * k)
        arg = blocks.argmax(axis=2)
        zb = z.reshape(ny, k, nx, k).transpose(0, 2, 1, 3).reshape(ny, nx, k * k)
        maxes.append(np.take_along_axis(blocks, arg[..., None], 2)[..., 0])
        locs.append(np.take_along_axis(zb, arg[..., None], 2)[..., 0])
    cell_max = np.stack(maxes)
    log_n = np.log(np.array(F.indices, dtype=float))
    logs = np.log(np.maximum(cell_max, 1e-300)).transpose(1, 2, 0)
    expo = _growth_slope(log_n, logs)
    expo = np.where(cell_in, expo, np.nan)
    return GrowthGrid(expo, cell_max, np.stack(locs), tuple(bbox), nx, ny)


# --------------------------------------------------------------------------- irregular points


@dataclass
class IrregularPoint:
    location: complex
    marty_growth_exponent: float
    witness: List[Tuple[int, complex, float]] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "location": [self.location.real, self.location.imag],
            "marty_growth_exponent": self.marty_growth_exponent,
            "witness": [[n, [z.real, z.imag], v] for n, z, v in self.witness],
        }


def _local_max(f: MeroFunc, start: complex, radius: float) -> complex:
    """Maximise f^# near ``start`` (Nelder-Mead, clipped to a disk of ``radius``)."""

    def neg(xy):
        z = complex(xy[0], xy[1])
        if abs(z - start) > radius:
            return 0.0
        return -float(f.sharp(z))

    step = radius / 8
    simplex = [[start.real, start.imag], [start.real + step, start.imag], [start.real, start.imag + step]]
    res = optimize.minimize(
        neg,
        [start.real, start.imag],
        method="Nelder-Mead",
        options={"xatol": 1e-12, "fatol": 1e-14, "initial_simplex": simplex, "maxiter": 2000},
    )
    z = complex(res.x[0], res.x[1])
    return z if -res.fun >= float(f.sharp(start)) else start


def _cluster_labels(mask: np.ndarray):
    labels, count = ndimage.label(mask, structure=np.ones((3, 3), dtype=int))
    return labels, count


def _extent(idx: Tuple[np.ndarray, np.ndarray]) -> int:
    jj, ii = idx
    return int(max(jj.max() - jj.min() + 1, ii.max() - ii.min() + 1))


def detect_irregular_points(F: FamilySpec, D, resolution: int = 128, subsamples: int = SUBSAMPLES) -> List[IrregularPoint]:
    """Irregular points of the family on D.

    Raises :class:`NotQuasiNormalError` when the flagged set is not a finite
    collection of at most ``floor(F.area_bound)`` small clusters.
    """
    if len(F.indices) < 4:
        raise ScheduleTooShortError("bubble detection needs at least 4 schedule indices")
    if resolution < 8:
        raise ResolutionTooLowError("detection resolution must be >= 8")
    gg = growth_grid(F, D, D.bbox, resolution, resolution, subsamples)
    flagged = gg.flagged
    labels, count = _cluster_labels(flagged)
    payload = dict(flagged=flagged, exponents=gg.exponents, grid=gg.centers())
    clusters = [np.nonzero(labels == c) for c in range(1, count + 1)]
    max_clusters = math.floor(F.area_bound + 1e-12) if F.area_bound is not None else None

    refined: List[Tuple[GrowthGrid, Tuple[np.ndarray, np.ndarray]]] = []
    for idx in clusters:
        if _extent(idx) > MAX_CLUSTER_DIAMETER * REFINE_FACTOR:
            raise NotQuasiNormalError(
                f"cluster spans {_extent(idx)} cells: curve of non-normality", clusters=clusters, **payload
            )
        jj, ii = idx
        j0, j1 = max(jj.min() - 1, 0), min(jj.max() + 2, gg.ny)
        i0, i1 = max(ii.min() - 1, 0), min(ii.max() + 2, gg.nx)
        box = (
            gg.bbox[0] + i0 * gg.hx,
            gg.bbox[0] + i1 * gg.hx,
            gg.bbox[2] + j0 * gg.hy,
            gg.bbox[2] + j1 * gg.hy,
        )
        fine = growth_grid(F, D, box, (i1 - i0) * REFINE_FACTOR, (j1 - j0) * REFINE_FACTOR, subsamples)
        flabels, fcount = _cluster_labels(fine.flagged)
        for c in range(1, fcount + 1):
            fidx = np.nonzero(flabels == c)
            if _extent(fidx) / REFINE_FACTOR > MAX_CLUSTER_DIAMETER:
                raise NotQuasiNormalError(
                    f"refined cluster spans {_extent(fidx) / REFINE_FACTOR:.1f} cells: curve of non-normality",
                    clusters=clusters,
                    **payload,
                )
            refined.append((fine, fidx))

    # sub-clusters of neighbouring coarse clusters can describe the same point
    if max_clusters is not None and len(refined) > max_clusters:
        raise NotQuasiNormalError(
            f"{len(refined)} flagged clusters exceed the order bound {max_clusters}", clusters=clusters, **payload
        )

    members = F.members()
    n_last, f_last = members[-1]
    points: List[IrregularPoint] = []
    for fine, (jj, ii) in refined:
        vals = fine.cell_max[-1][jj, ii]
        best = int(np.argmax(vals))
        start = complex(fine.argmax[-1][jj[best], ii[best]])
        radius = 2.0 * math.hypot(gg.hx, gg.hy)
        loc = _local_max(f_last, start, radius)
        witness = []
        for n, f in members:
            zn = _local_max(f, loc, radius)
            witness.append((n, zn, float(f.sharp(zn))))
        log_n = np.log([w[0] for w in witness])
        logv = np.log(np.maximum([w[2] for w in witness], 1e-300))
        slope = float(_growth_slope(log_n, logv[None, :])[0])
        points.append(IrregularPoint(loc, slope, witness))
    points.sort(key=lambda p: (round(p.location.real, 9), round(p.location.imag, 9)))
    return points


# --------------------------------------------------------------------------- masses


def _richardson(n1: int, a1: float, n2: int, a2: float) -> float:
    """Extrapolate to n -> inf assuming an O(1/n^2) tail (bubble tails decay like 1/(n eps)^2)."""
    w1, w2 = float(n1) ** 2, float(n2) ** 2
    return (w2 * a2 - w1 * a1) / (w2 - w1)


def estimate_mass(
    F: FamilySpec,
    p: complex,
    eps_schedule: Sequence[float] = DEFAULT_EPS,
    D=None,
    tol: float = 1e-9,
) -> Tuple[float, float]:
    """Concentrated mass (in units of pi) at ``p``: returns ``(alpha, uncertainty)``."""
    eps = [float(e) for e in eps_schedule]
    if len(eps) < 3 or any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValueError("eps_schedule must be strictly decreasing with >= 3 entries")
    if len(F.indices) < 2:
        raise ValueError("need at least two schedule members")
    p = complex(p)
    margin = math.inf
    if D is not None:
        if not bool(D.contains(p)):
            raise ValueError(f"point {p} is not inside the domain")
        margin = float(D.boundary_distance(p))
        if margin < eps[0]:
            raise ValueError(f"point {p} is {margin:.3g} from the boundary, less than max eps {eps[0]}")
    (n1, f1), (n2, f2) = (F.indices[-2], F[F.indices[-2]]), (F.indices[-1], F[F.indices[-1]])

    alphas, corrections = [], []
    for e in eps:
        a2 = spherical_area(f2, Disk(p, e), tol).value
        a = _richardson(n1, spherical_area(f1, Disk(p, e), tol).value, n2, a2)
        r_out = min(2 * e, margin)
        ring = Annulus(p, e, r_out) if r_out >= 1.25 * e else Annulus(p, e / 2, e)
        b = _richardson(n1, spherical_area(f1, ring, tol).value, n2, spherical_area(f2, ring, tol).value)
        # limit density assumed flat across disk and ring
        residual = max(b, 0.0) * e**2 / (ring.r_out**2 - ring.r_in**2)
        alphas.append(a - residual)
        corrections.append(abs(a - a2))
    alphas = np.array(alphas)
    _, intercept = np.polyfit(np.array(eps), alphas, 1)
    alpha = float(intercept)
    # spread over eps + eps-extrapolation gap + a third of the largest n-extrapolation step
    uncertainty = float(np.ptp(alphas) + abs(alpha - alphas[-1]) + max(corrections) / 3)
    logger.debug("mass at %s: per-eps %s -> %.6f +- %.2g", p, alphas, alpha, uncertainty)
    if alpha < 1.0 - uncertainty or alphas.min() < 1.0 - uncertainty:
        raise NotConcentratedError(f"no stable mass >= 1 at {p}: per-eps masses {alphas.round(4).tolist()}")
    return alpha, uncertainty


# --------------------------------------------------------------------------- limits and profiles


@dataclass
class LimitProbe:
    point: complex
    value: SpherePoint
    gap: float
    converged: bool

    def to_json(self) -> dict:
        return {
            "point": [self.point.real, self.point.imag],
            "value": self.value.to_json(),
            "gap": self.gap,
            "converged": self.converged,
        }


def limit_off_S(F: FamilySpec, D, S: Sequence[complex], probe: Sequence[complex], cauchy_tol: float = 0.01) -> List[LimitProbe]:
    """Values of the last scheduled member at probe points, with a two-member Cauchy check."""
    pts = np.asarray(probe, dtype=complex)
    for z in pts:
        if any(abs(z - s) < 0.05 for s in S) or float(D.boundary_distance(z)) < 0.05 or not bool(D.contains(z)):
            raise ValueError(f"probe {z} must be inside D and at distance >= 0.05 from S and the boundary")
    f_prev, f_last = F[F.indices[-2]], F[F.indices[-1]]
    v_prev = f_prev.evaluate(pts)
    v_last = f_last.evaluate(pts)
    gaps = chordal(v_prev, v_last)
    return [
        LimitProbe(complex(z), SpherePoint.from_complex(v), float(g), bool(g <= cauchy_tol))
        for z, v, g in zip(pts, v_last, gaps)
    ]


def _key(p: complex) -> str:
    # round first so that -1e-12 prints as 0, not -0
    re, im = round(p.real, 9) + 0.0, round(p.imag, 9) + 0.0
    return f"{re:.9f}{im:+.9f}j"


@dataclass
class MassProfile:
    S: List[IrregularPoint]
    alpha: Dict[str, Tuple[float, float]]
    residual_area: float
    order_bound: Optional[float]
    quantized: Dict[str, bool] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "S": [p.to_json() for p in self.S],
            "alpha": {k: {"estimate": a, "uncertainty": u} for k, (a, u) in self.alpha.items()},
            "residual_area": self.residual_area,
            "order_bound": self.order_bound,
            "quantized": dict(self.quantized),
        }


def quantization_check(profile: MassProfile, tol: float = 0.05) -> Dict[str, bool]:
    out = {}
    for key, (a, u) in profile.alpha.items():
        out[key] = bool(abs(a - round(a)) <= max(tol, u))
    return out


def residual_area(F: FamilySpec, D, S: Sequence[complex], eps: float, tol: float = 1e-9) -> float:
    """Area of the limit outside ``eps``-disks around S, extrapolated in n."""
    vals = []
    for n in F.indices[-2:]:
        f = F[n]
        total = spherical_area(f, D, tol).value
        holes = sum(spherical_area(f, Disk(p, eps), tol).value for p in S)
        vals.append(total - holes)
    return max(_richardson(F.indices[-2], vals[0], F.indices[-1], vals[1]), 0.0)


def mass_profile(
    F: FamilySpec,
    D,
    resolution: int = 128,
    eps_schedule: Sequence[float] = DEFAULT_EPS,
    quant_tol: float = 0.05,
) -> MassProfile:
    """Detect irregular points, estimate their masses and check integrality."""
    S = detect_irregular_points(F, D, resolution)
    locs = [p.location for p in S]
    eps = list(eps_schedule)
    if locs:
        margin = min(float(D.boundary_distance(p)) for p in locs)
        sep = min((abs(a - b) for i, a in enumerate(locs) for b in locs[i + 1 :]), default=math.inf)
        limit = 0.999 * min(margin, sep / 4)
        if eps[0] > limit:
            eps = [e * limit / eps[0] for e in eps]
    alpha = {_key(p): estimate_mass(F, p, eps, D) for p in locs}
    resid = residual_area(F, D, locs, eps[-1]) if locs else spherical_area(F[F.indices[-1]], D).value
    prof = MassProfile(S, alpha, resid, F.area_bound)
    prof.quantized = quantization_check(prof, quant_tol)
    return prof
