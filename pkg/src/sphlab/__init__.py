"""Numerical laboratory for spherical derivatives, normal families and Liouville's equation."""
from .errors import *  # noqa: F401,F403
from .sphere import INF, RigidMotion, SpherePoint, apply_motion, chordal, chordal_distance
from .funcmodel import (
    FamilySpec,
    FormulaFunc,
    Jet,
    MeroFunc,
    RationalFunc,
    builtin_family,
    compose_motion,
    jet_at,
    random_rational,
)
from .quadrature import Annulus, Disk, DiskMinusPoints, QuadResult, Rectangle, ls_integral, spherical_area

__version__ = "0.1.0"
