"""Meromorphic functions, indexed families, and pole-safe spherical derivatives.

Every function exposes vectorised ``evaluate`` (non-finite entries mean a pole)
and ``sharp`` (the spherical derivative ``|f'| / (1 + |f|^2)``).
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import (
    DegenerateFunctionError,
    DerivativeMismatchWarning,
    EvaluationDomainError,
    UnknownFamilyError,
)
from .sphere import INF, RigidMotion, SpherePoint

GCD_TOL = 1e-10
TRIM_TOL = 1e-14


@dataclass(frozen=True)
class Jet:
    value: SpherePoint
    sph_deriv: float


def _trim(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=complex).ravel()
    if c.size == 0:
        return np.zeros(1, dtype=complex)
    scale = np.max(np.abs(c))
    if scale == 0:
        return np.zeros(1, dtype=complex)
    k = c.size
    while k > 1 and abs(c[k - 1]) <= TRIM_TOL * scale:
        k -= 1
    return c[:k].copy()


def _rel_value(c: np.ndarray, z: complex) -> float:
    """|c(z)| divided by the absolute-coefficient evaluation sum |c_k||z|^k."""
    denom = P.polyval(abs(z), np.abs(c))
    if denom == 0:
        return 0.0
    return abs(P.polyval(z, c)) / denom


def _cancel_common_roots(p: np.ndarray, q: np.ndarray):
    """Divide out approximate common roots of p and q (tolerance GCD_TOL)."""
    for _ in range(max(len(p), len(q))):
        if len(p) < 2 or len(q) < 2:
            break
        found = None
        for r in P.polyroots(q):
            if _rel_value(p, r) <= GCD_TOL and _rel_value(q, r) <= GCD_TOL:
                found = r
                break
        if found is None:
            break
        lin = np.array([-found, 1.0], dtype=complex)
        p = _trim(P.polydiv(p, lin)[0])
        q = _trim(P.polydiv(q, lin)[0])
    return p, q


class MeroFunc:
    """Interface for evaluable meromorphic functions."""

    singularities: tuple = ()

    def evaluate(self, z) -> np.ndarray:
        raise NotImplementedError

    def sharp(self, z) -> np.ndarray:
        raise NotImplementedError

    def jet(self, z) -> Jet:
        return jet_at(self, z)


class RationalFunc(MeroFunc):
    """``p / q`` with ascending complex coefficient lists, reduced at construction."""

    def __init__(self, numerator: Sequence[complex], denominator: Sequence[complex] = (1.0,)):
        p = _trim(numerator)
        q = _trim(denominator)
        if np.all(q == 0):
            raise DegenerateFunctionError("denominator is identically zero")
        if np.all(p == 0):
            p = np.zeros(1, dtype=complex)
            q = np.ones(1, dtype=complex)
        else:
            p, q = _cancel_common_roots(p, q)
        scale = max(np.max(np.abs(p)), np.max(np.abs(q)))
        self.num = p / scale
        self.den = q / scale
        self._dnum = P.polyder(self.num) if len(self.num) > 1 else np.zeros(1, dtype=complex)
        self._dden = P.polyder(self.den) if len(self.den) > 1 else np.zeros(1, dtype=complex)
        # Wronskian p'q - pq'; f' = W / q^2
        self.wronskian = _trim(P.polysub(P.polymul(self._dnum, self.den), P.polymul(self.num, self._dden)))

    @classmethod
    def polynomial(cls, coeffs: Sequence[complex]) -> "RationalFunc":
        return cls(coeffs, (1.0,))

    @property
    def degree(self) -> int:
        if np.all(self.num == 0):
            return 0
        return max(len(self.num), len(self.den)) - 1

    @property
    def is_constant(self) -> bool:
        return bool(np.all(self.wronskian == 0))

    def evaluate(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        p = P.polyval(z, self.num)
        q = P.polyval(z, self.den)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = p / q
        return np.where(q == 0, INF, out)

    def derivative(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        q = P.polyval(z, self.den)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = P.polyval(z, self.wronskian) / q**2
        return np.where(q == 0, INF, out)

    def sharp(self, z) -> np.ndarray:
        # |p'q - pq'| / (|p|^2 + |q|^2) is symmetric under p <-> q, so it is the
        # reciprocal-branch value whenever |f| > 1; no overflow at poles.
        z = np.asarray(z, dtype=complex)
        p = P.polyval(z, self.num)
        q = P.polyval(z, self.den)
        w = P.polyval(z, self.wronskian)
        den = (p.real**2 + p.imag**2) + (q.real**2 + q.imag**2)
        if np.any(den == 0):
            raise DegenerateFunctionError("numerator and denominator vanish simultaneously")
        return np.abs(w) / den

    def reciprocal(self) -> "RationalFunc":
        return RationalFunc(self.den, self.num)

    def compose_motion(self, T: RigidMotion) -> "RationalFunc":
        """Symbolic ``T o f = phase (p - a q) / (q + conj(a) p)``."""
        num = T.phase * P.polysub(self.num, T.a * self.den)
        den = P.polyadd(self.den, np.conj(T.a) * self.num)
        return RationalFunc(num, den)

    def critical_points(self) -> np.ndarray:
        """Finite zeros of the Wronskian: critical points and multiple poles."""
        if len(self.wronskian) < 2:
            return np.zeros(0, dtype=complex)
        return P.polyroots(self.wronskian)

    def to_json(self) -> dict:
        return {
            "num": [[float(c.real), float(c.imag)] for c in self.num],
            "den": [[float(c.real), float(c.imag)] for c in self.den],
        }

    @classmethod
    def from_json(cls, data) -> "RationalFunc":
        if isinstance(data, str):
            data = json.loads(data)
        try:
            num = [complex(re, im) for re, im in data["num"]]
            den = [complex(re, im) for re, im in data["den"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed rational function JSON: {exc}") from exc
        return cls(num, den)

    def __repr__(self):
        return f"RationalFunc(num={self.num.tolist()}, den={self.den.tolist()})"


class FormulaFunc(MeroFunc):
    """Function given by vectorised callables for f and f'.

    ``recip`` optionally returns ``(1/f, (1/f)')`` directly; it is used where
    ``|f| > 1`` so that exponentially large values never overflow.
    """

    def __init__(
        self,
        func: Callable,
        deriv: Callable,
        singularities: Sequence[complex] = (),
        recip: Optional[Callable] = None,
        label: str = "",
    ):
        self.func = func
        self.deriv = deriv
        self.singularities = tuple(complex(s) for s in singularities)
        self.recip = recip
        self.label = label

    def _check(self, z: np.ndarray):
        for s in self.singularities:
            if np.any(np.abs(z - s) <= 1e-12 * (1.0 + abs(s))):
                raise EvaluationDomainError(f"{self.label or 'function'} is not defined at excluded point {s}")

    def evaluate(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        self._check(z)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            f = np.asarray(self.func(z), dtype=complex)
            if self.recip is not None:
                g, _ = self.recip(z)
                g = np.asarray(g, dtype=complex)
                f = np.where(np.isfinite(f), f, np.where(g == 0, INF, 1.0 / g))
        return np.where(np.isfinite(f), f, INF)

    def sharp(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        self._check(z)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            f = np.broadcast_to(np.asarray(self.func(z), dtype=complex), z.shape)
            df = np.broadcast_to(np.asarray(self.deriv(z), dtype=complex), z.shape)
            af = np.abs(f)
            direct = np.abs(df) / (1.0 + af**2)
            use_recip = ~(np.isfinite(af) & (af <= 1.0))
            if self.recip is not None:
                g, dg = self.recip(z)
                g = np.broadcast_to(np.asarray(g, dtype=complex), z.shape)
                dg = np.broadcast_to(np.asarray(dg, dtype=complex), z.shape)
                flipped = np.abs(dg) / (1.0 + np.abs(g) ** 2)
            else:
                # (1/f)^# written to avoid forming |f|^2
                flipped = (np.abs(df) / af) / (af + 1.0 / af)
            out = np.where(use_recip, flipped, direct)
        if np.any(~np.isfinite(out)):
            raise EvaluationDomainError("spherical derivative is not finite; supply a reciprocal formula")
        return out

    def validate_derivative(self, probe: Sequence[complex], tol: float = 1e-5, h: float = 1e-6) -> bool:
        """Cross-check f' against central differences; warns and returns False on mismatch."""
        z = np.asarray(probe, dtype=complex)
        with np.errstate(over="ignore", invalid="ignore"):
            fd = (np.asarray(self.func(z + h)) - np.asarray(self.func(z - h))) / (2 * h)
            d = np.asarray(self.deriv(z))
        ok = np.isfinite(fd) & np.isfinite(d)
        err = np.abs(fd[ok] - d[ok]) / (1.0 + np.abs(d[ok]))
        if err.size and np.max(err) > tol:
            warnings.warn(
                f"supplied derivative disagrees with central differences (max rel err {np.max(err):.3g})",
                DerivativeMismatchWarning,
            )
            return False
        return True


def jet_at(f: MeroFunc, z) -> Jet:
    z = complex(z)
    value = complex(np.asarray(f.evaluate(z)))
    sh = float(np.asarray(f.sharp(z)))
    return Jet(SpherePoint.from_complex(value), sh)


def compose_motion(T: RigidMotion, f: RationalFunc) -> RationalFunc:
    return f.compose_motion(T)


def constant(value: complex) -> RationalFunc:
    return RationalFunc([value], [1.0])


def random_rational(rng: np.random.Generator, max_degree: int = 4, min_degree: int = 1) -> RationalFunc:
    """Random rational function with Gaussian complex coefficients."""
    while True:
        dp = int(rng.integers(0, max_degree + 1))
        dq = int(rng.integers(0, max_degree + 1))
        if max(dp, dq) < min_degree:
            continue
        num = rng.normal(size=dp + 1) + 1j * rng.normal(size=dp + 1)
        den = rng.normal(size=dq + 1) + 1j * rng.normal(size=dq + 1)
        f = RationalFunc(num, den)
        if f.degree >= min_degree:
            return f


# --------------------------------------------------------------------------- families


@dataclass
class FamilySpec:
    """Indexed family ``n -> f_n`` over an ascending index schedule.

    ``area_bound`` is the declared C with ``(1/pi) int (f_n^#)^2 <= C`` (None if
    the family has no such bound).
    """

    member: Callable[[int], MeroFunc]
    indices: tuple
    locally_univalent: bool
    label: str
    area_bound: Optional[float] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.indices = tuple(int(n) for n in self.indices)
        if not self.indices:
            raise ValueError("family index schedule is empty")
        if any(b <= a for a, b in zip(self.indices, self.indices[1:])):
            raise ValueError("family index schedule must be strictly increasing")

    def __getitem__(self, n: int) -> MeroFunc:
        return self.member(n)

    def members(self):
        return [(n, self.member(n)) for n in self.indices]

    def check_local_univalence(self, box=(-1.0, 1.0, -1.0, 1.0), resolution: int = 33) -> bool:
        """Probe-grid check that every scheduled member has f^# > 0 and no critical points in ``box``."""
        x0, x1, y0, y1 = box
        xs = np.linspace(x0, x1, resolution)
        ys = np.linspace(y0, y1, resolution)
        grid = xs[None, :] + 1j * ys[:, None]
        for _, f in self.members():
            if isinstance(f, RationalFunc):
                if f.is_constant:
                    return False
                cps = f.critical_points()
                inside = (cps.real >= x0) & (cps.real <= x1) & (cps.imag >= y0) & (cps.imag <= y1)
                if np.any(inside):
                    return False
            if np.any(f.sharp(grid) <= 0):
                return False
        return True

    def validate(self, box=(-1.0, 1.0, -1.0, 1.0)):
        if self.locally_univalent and not self.check_local_univalence(box):
            raise ValueError(f"family {self.label!r} is flagged locally univalent but has critical points")
        return self


def parse_schedule(text: str) -> tuple:
    """Parse ``"a:b:geom"`` (powers of two from a to b), ``"a:b"`` (a..b) or ``"1,2,5"``."""
    text = text.strip()
    if "," in text:
        return tuple(int(t) for t in text.split(","))
    parts = text.split(":")
    if len(parts) == 2:
        a, b = int(parts[0]), int(parts[1])
        return tuple(range(a, b + 1))
    if len(parts) == 3 and parts[2] == "geom":
        a, b = int(parts[0]), int(parts[1])
        out, n = [], a
        while n <= b:
            out.append(n)
            n *= 2
        return tuple(out)
    if len(parts) == 3 and parts[2] == "lin":
        return tuple(range(int(parts[0]), int(parts[1]) + 1))
    raise ValueError(f"cannot parse index schedule {text!r}")


DEFAULT_SCHEDULE = (1, 2, 4, 8, 16, 32, 64, 128)


def _exp_inz(n: int) -> FormulaFunc:
    def func(z):
        return np.exp(1j * n * z)

    def deriv(z):
        return 1j * n * np.exp(1j * n * z)

    def recip(z):
        g = np.exp(-1j * n * z)
        return g, -1j * n * g

    return FormulaFunc(func, deriv, recip=recip, label=f"exp({n}iz)")


def builtin_family(name: str, indices: Optional[Sequence[int]] = None, **params) -> FamilySpec:
    """Named families: ``nz``, ``exp_inz``, ``nP`` (``m``) and ``constant`` (``value``)."""
    idx = tuple(indices) if indices is not None else DEFAULT_SCHEDULE
    if name == "nz":
        fam = FamilySpec(lambda n: RationalFunc([0.0, float(n)]), idx, True, "nz", area_bound=1.0)
    elif name == "exp_inz":
        fam = FamilySpec(_exp_inz, idx, True, "exp_inz", area_bound=None)
    elif name == "nP":
        m = int(params.get("m", 1))
        if m < 1:
            raise ValueError("nP family needs m >= 1")
        base = np.zeros(m + 1, dtype=complex)
        base[0], base[m] = -1.0, 2.0
        fam = FamilySpec(
            lambda n: RationalFunc(n * base), idx, m == 1, f"nP(m={m})", area_bound=float(m), params={"m": m}
        )
    elif name == "constant":
        value = complex(params.get("value", 0.0))
        lu = bool(params.get("locally_univalent", False))
        fam = FamilySpec(lambda n: constant(value), idx, lu, "constant", area_bound=0.0, params={"value": value})
        return fam
    else:
        raise UnknownFamilyError(f"unknown family {name!r}; expected nz, exp_inz, nP or constant")
    return fam.validate()


def fixed_family(f: MeroFunc, indices: Sequence[int] = DEFAULT_SCHEDULE, label: str = "fixed") -> FamilySpec:
    return FamilySpec(lambda n: f, tuple(indices), False, label)
