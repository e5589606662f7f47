"""Finite-difference side of the Liouville correspondence ``u = log f^#``.

For locally univalent f, ``u = log f^#`` solves ``-Delta u = 4 e^{2u}``. The
module measures the 5-point residual of that identity, solves
``-Delta u = V e^{2u}`` with Dirichlet data by damped Newton, checks the
discrete mean-value inequality for superharmonicity, and tabulates the
blow-up of ``u_n = log f_n^#`` along a family.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.integrate import trapezoid
from scipy.sparse.linalg import splu

from .errors import CriticalPointError, NewtonDivergedError
from .funcmodel import FamilySpec, MeroFunc

logger = logging.getLogger(__name__)

CRITICAL_TOL = 1e-8


@dataclass(frozen=True)
class Grid2D:
    """Uniform node grid on ``[x0, x1] x [y0, y1]`` with ``nx * ny`` nodes (boundary included)."""

    x0: float
    x1: float
    y0: float
    y1: float
    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 8 or self.ny < 8:
            raise ValueError("grid needs at least 8 nodes per direction")
        if abs(self.hx - self.hy) > 1e-12:
            raise ValueError(f"grid spacing must be square (hx={self.hx}, hy={self.hy})")

    @classmethod
    def square(cls, half_width: float, h: float, center: complex = 0j) -> "Grid2D":
        n = int(round(2 * half_width / h)) + 1
        c = complex(center)
        return cls(c.real - half_width, c.real + half_width, c.imag - half_width, c.imag + half_width, n, n)

    @property
    def hx(self) -> float:
        return (self.x1 - self.x0) / (self.nx - 1)

    @property
    def hy(self) -> float:
        return (self.y1 - self.y0) / (self.ny - 1)

    @property
    def h(self) -> float:
        return self.hx

    def nodes(self) -> np.ndarray:
        xs = np.linspace(self.x0, self.x1, self.nx)
        ys = np.linspace(self.y0, self.y1, self.ny)
        return xs[None, :] + 1j * ys[:, None]

    def index_of(self, z: complex) -> Tuple[int, int]:
        """(row, col) of the node nearest to z."""
        i = int(round((complex(z).real - self.x0) / self.h))
        j = int(round((complex(z).imag - self.y0) / self.h))
        return j, i


def _laplacian_5pt(u: np.ndarray, h: float) -> np.ndarray:
    """Interior 5-point Laplacian, shape (ny-2, nx-2)."""
    return (u[1:-1, 2:] + u[1:-1, :-2] + u[2:, 1:-1] + u[:-2, 1:-1] - 4.0 * u[1:-1, 1:-1]) / (h * h)


def log_sharp(f: MeroFunc, G: Grid2D) -> np.ndarray:
    """``log f^#`` on all nodes; raises CriticalPointError where f^# <= 1e-8."""
    sh = f.sharp(G.nodes())
    bad = np.argwhere(sh <= CRITICAL_TOL)
    if bad.size:
        raise CriticalPointError(
            f"f^# <= {CRITICAL_TOL} at {len(bad)} node(s); f is not locally univalent there",
            [tuple(map(int, b)) for b in bad],
        )
    return np.log(sh)


def liouville_residual(f: MeroFunc, G: Grid2D) -> np.ndarray:
    """``-Delta_h log f^# - 4 (f^#)^2`` at interior nodes."""
    u = log_sharp(f, G)
    return -_laplacian_5pt(u, G.h) - 4.0 * np.exp(2.0 * u[1:-1, 1:-1])


# --------------------------------------------------------------------------- Newton solver


@dataclass
class PDESolution:
    u: np.ndarray
    residual_norm: float
    newton_iters: int
    converged: bool
    grid: Optional[Grid2D] = None
    history: List[float] = field(default_factory=list)

    def metadata(self) -> dict:
        return {
            "residual_norm": self.residual_norm,
            "newton_iters": self.newton_iters,
            "converged": self.converged,
            "history": list(self.history),
        }


def _neg_laplacian_matrix(mx: int, my: int, h: float) -> sp.csc_matrix:
    """-Delta_h on the (my, mx) interior block, row-major unknowns."""
    ex = sp.diags([-np.ones(mx - 1), 2 * np.ones(mx), -np.ones(mx - 1)], [-1, 0, 1])
    ey = sp.diags([-np.ones(my - 1), 2 * np.ones(my), -np.ones(my - 1)], [-1, 0, 1])
    return (sp.kron(sp.identity(my), ex) + sp.kron(ey, sp.identity(mx))).tocsc() / (h * h)


def _boundary_term(b: np.ndarray, h: float) -> np.ndarray:
    """Contribution of Dirichlet values to -Delta_h at interior nodes (moved to the RHS)."""
    t = np.zeros((b.shape[0] - 2, b.shape[1] - 2))
    t[:, 0] += b[1:-1, 0]
    t[:, -1] += b[1:-1, -1]
    t[0, :] += b[0, 1:-1]
    t[-1, :] += b[-1, 1:-1]
    return t / (h * h)


def harmonic_extension(boundary: np.ndarray, G: Grid2D) -> np.ndarray:
    b = np.asarray(boundary, dtype=float)
    my, mx = G.ny - 2, G.nx - 2
    A = _neg_laplacian_matrix(mx, my, G.h)
    inner = splu(A).solve(_boundary_term(b, G.h).ravel())
    u = b.copy()
    u[1:-1, 1:-1] = inner.reshape(my, mx)
    return u


def solve_liouville(V, boundary: np.ndarray, G: Grid2D, max_iter: int = 200) -> PDESolution:
    """Damped Newton for ``-Delta_h u = V e^{2u}`` with Dirichlet data from ``boundary``.

    ``V`` is a scalar or an (ny, nx) array, ``boundary`` an (ny, nx) array of
    which only the edge entries are used. Iteration starts from the discrete
    harmonic extension; steps are halved until the max-norm residual drops.
    """
    b = np.asarray(boundary, dtype=float)
    if b.shape != (G.ny, G.nx):
        raise ValueError(f"boundary array has shape {b.shape}, grid is {(G.ny, G.nx)}")
    edges = np.concatenate([b[0], b[-1], b[:, 0], b[:, -1]])
    if not np.all(np.isfinite(edges)):
        raise ValueError("boundary values must be finite")
    Vg = np.broadcast_to(np.asarray(V, dtype=float), (G.ny, G.nx))
    if np.any(Vg < 0):
        raise ValueError("V must be nonnegative")
    Vi = Vg[1:-1, 1:-1].ravel()
    my, mx = G.ny - 2, G.nx - 2
    A = _neg_laplacian_matrix(mx, my, G.h)
    rhs_b = _boundary_term(b, G.h).ravel()

    u = harmonic_extension(b, G)
    x = u[1:-1, 1:-1].ravel().copy()

    def residual(x):
        with np.errstate(over="ignore", invalid="ignore"):
            return A @ x - rhs_b - Vi * np.exp(2.0 * x)

    F = residual(x)
    norm = float(np.max(np.abs(F)))
    history = [norm]
    it = 0
    while True:
        scale = 1.0 + max(float(np.max(np.abs(x))), float(np.max(np.abs(edges))))
        if norm <= 1e-10 * scale:
            break
        if it >= max_iter:
            break
        J = (A - sp.diags(2.0 * Vi * np.exp(2.0 * x))).tocsc()
        dx = splu(J).solve(-F)
        lam = 1.0
        for _ in range(40):
            xn = x + lam * dx
            Fn = residual(xn)
            nn = float(np.max(np.abs(Fn)))
            if np.isfinite(nn) and nn < norm:
                break
            lam *= 0.5
        else:
            best = b.copy()
            best[1:-1, 1:-1] = x.reshape(my, mx)
            raise NewtonDivergedError(
                f"Newton stagnated at residual {norm:.3g} after {it} iterations",
                PDESolution(best, norm, it, False, G, history),
            )
        x, F, norm = xn, Fn, nn
        history.append(norm)
        it += 1
        logger.debug("newton %d: step %.3g residual %.3g", it, lam, norm)

    u = b.copy()
    u[1:-1, 1:-1] = x.reshape(my, mx)
    scale = 1.0 + float(np.max(np.abs(u)))
    return PDESolution(u, norm, it, norm <= 1e-10 * scale, G, history)


# --------------------------------------------------------------------------- superharmonicity


@dataclass
class SuperharmonicReport:
    violations: int
    worst: float
    excluded: List[Tuple[int, int]] = field(default_factory=list)


def mean_value_violations(u: np.ndarray, excluded: Optional[np.ndarray] = None, rel_tol: float = 1e-8) -> SuperharmonicReport:
    """Count interior nodes with ``u < mean(4 neighbours) - rel_tol * scale``."""
    u = np.asarray(u, dtype=float)
    if excluded is None:
        excluded = np.zeros(u.shape, dtype=bool)
    bad = excluded | ~np.isfinite(u)
    uu = np.where(bad, 0.0, u)
    scale = max(1.0, float(np.max(np.abs(uu))))
    mean = 0.25 * (uu[1:-1, 2:] + uu[1:-1, :-2] + uu[2:, 1:-1] + uu[:-2, 1:-1])
    gap = mean - uu[1:-1, 1:-1]
    skip = bad[1:-1, 1:-1] | bad[1:-1, 2:] | bad[1:-1, :-2] | bad[2:, 1:-1] | bad[:-2, 1:-1]
    gap = np.where(skip, -np.inf, gap)
    viol = int(np.count_nonzero(gap > rel_tol * scale))
    worst = float(gap.max()) if np.isfinite(gap).any() else 0.0
    ex = [tuple(map(int, t)) for t in np.argwhere(bad)]
    return SuperharmonicReport(viol, worst, ex)


def superharmonic_check(f: MeroFunc, G: Grid2D, u: Optional[np.ndarray] = None) -> SuperharmonicReport:
    """Discrete mean-value test of ``log f^#`` (or of an injected grid ``u``)."""
    if u is not None:
        return mean_value_violations(u)
    sh = f.sharp(G.nodes())
    excluded = sh <= CRITICAL_TOL
    with np.errstate(divide="ignore"):
        lu = np.log(np.where(excluded, 1.0, sh))
    return mean_value_violations(lu, excluded)


# --------------------------------------------------------------------------- blow-up table


@dataclass
class BlowupRow:
    n: int
    max_u: float
    min_u: float
    mass: float
    probes: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"n": self.n, "max_u": self.max_u, "min_u": self.min_u, "mass": self.mass, "probes": self.probes}


def blowup_demo(
    F: FamilySpec,
    G: Grid2D,
    bubble_points: Sequence[complex] = (),
    probes: Sequence[complex] = (),
) -> List[BlowupRow]:
    """Extremes of ``u_n = log f_n^#`` and the grid mass ``(1/pi) int e^{2 u_n}`` per scheduled n.

    Nodes within ``1/sqrt(n)`` of a declared bubble point are exempt from the
    local-univalence check; everywhere else ``f_n^# > 1e-8`` is required,
    relaxed to ``f_n^# > 0`` for families whose flag was verified at construction.
    """
    Z = G.nodes()
    xs = np.linspace(G.x0, G.x1, G.nx)
    ys = np.linspace(G.y0, G.y1, G.ny)
    rows = []
    for n, f in F.members():
        sh = f.sharp(Z)
        hole = np.zeros(Z.shape, dtype=bool)
        for p in bubble_points:
            hole |= np.abs(Z - p) < 1.0 / math.sqrt(n)
        # a verified-univalent family may legitimately have u_n -> -inf off S
        floor = 0.0 if F.locally_univalent else CRITICAL_TOL
        bad = (sh <= floor) & ~hole
        if bad.any():
            raise CriticalPointError(
                f"member n={n} has f^# <= {CRITICAL_TOL} at {int(bad.sum())} node(s)",
                [tuple(map(int, t)) for t in np.argwhere(bad)],
            )
        pos = sh > 0
        u = np.log(sh[pos])
        mass = float(trapezoid(trapezoid(sh**2, xs, axis=1), ys) / math.pi)
        pr = {}
        for z in probes:
            pr[f"{complex(z).real:g}{complex(z).imag:+g}j"] = float(np.log(f.sharp(complex(z))))
        rows.append(BlowupRow(n, float(u.max()), float(u.min()), mass, pr))
    return rows


# --------------------------------------------------------------------------- CSV


def grid_to_csv(values: np.ndarray, G: Grid2D) -> str:
    lines = ["x0,x1,y0,y1,nx,ny", ",".join(repr(float(v)) for v in (G.x0, G.x1, G.y0, G.y1)) + f",{G.nx},{G.ny}"]
    for row in np.asarray(values, dtype=float):
        lines.append(",".join(f"{v:.17g}" for v in row))
    return "\n".join(lines) + "\n"


def grid_from_csv(text: str) -> Tuple[np.ndarray, Grid2D]:
    lines = text.strip().splitlines()
    head = lines[1].split(",")
    G = Grid2D(*(float(t) for t in head[:4]), int(head[4]), int(head[5]))
    vals = np.array([[float(t) for t in ln.split(",")] for ln in lines[2:]])
    return vals, G
