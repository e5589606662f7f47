import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sphlab.errors import DegenerateFunctionError, DerivativeMismatchWarning, EvaluationDomainError, UnknownFamilyError
from sphlab.funcmodel import (
    DEFAULT_SCHEDULE,
    FamilySpec,
    FormulaFunc,
    RationalFunc,
    builtin_family,
    compose_motion,
    jet_at,
    parse_schedule,
    random_rational,
)
from sphlab.sphere import RigidMotion, chordal

seeds = st.integers(0, 2**32 - 1)


def test_jet_examples():
    j = jet_at(RationalFunc([0, 1]), 0)
    assert j.value.to_complex() == 0 and j.sph_deriv == pytest.approx(1.0)
    j = jet_at(RationalFunc([1], [0, 1]), 0)
    assert j.value.is_infinity and j.sph_deriv == pytest.approx(1.0)
    f = builtin_family("exp_inz")[7]
    assert jet_at(f, 0.3).sph_deriv == pytest.approx(3.5, rel=1e-12)


def test_exp_sharp_closed_form_far_from_axis():
    f = builtin_family("exp_inz")[200]
    z = np.array([0.4 + 3j, -0.2 - 3j])
    expected = 200 / (2 * np.cosh(200 * z.imag))
    assert np.allclose(f.sharp(z), expected, rtol=1e-10, atol=0)


def test_builtin_families():
    F = builtin_family("nz", range(1, 11))
    assert F[3].evaluate(2.0) == pytest.approx(6.0)
    G = builtin_family("nP", m=3)
    assert G[5].evaluate(1.0) == pytest.approx(5.0)
    assert not G.locally_univalent and builtin_family("nP", m=1).locally_univalent
    H = builtin_family("constant", value=0)
    assert all(f.evaluate(0.7 + 0.1j) == 0 for _, f in H.members())
    assert builtin_family("nz").indices == DEFAULT_SCHEDULE
    with pytest.raises(UnknownFamilyError):
        builtin_family("nope")


def test_family_checks():
    with pytest.raises(ValueError):
        FamilySpec(lambda n: RationalFunc([0, n]), (1, 1, 2), True, "x")
    with pytest.raises(ValueError):
        FamilySpec(lambda n: RationalFunc([0, 0, n]), (1, 2), True, "z2").validate()


def test_parse_schedule():
    assert parse_schedule("1:128:geom") == (1, 2, 4, 8, 16, 32, 64, 128)
    assert parse_schedule("3:5") == (3, 4, 5)
    assert parse_schedule("1,5,9") == (1, 5, 9)


def test_gcd_cancellation():
    # (z-1)(z+2) / ((z-1)(z-3)) reduces to (z+2)/(z-3)
    f = RationalFunc([-2, 1, 1], [3, -4, 1])
    assert f.degree == 1
    assert f.evaluate(0.5) == pytest.approx((0.5 + 2) / (0.5 - 3))


def test_degenerate_denominator():
    with pytest.raises(DegenerateFunctionError):
        RationalFunc([1], [0])


def test_json_round_trip(rng):
    f = random_rational(rng, 4)
    g = RationalFunc.from_json(f.to_json())
    z = rng.normal(size=20) + 1j * rng.normal(size=20)
    assert np.allclose(f.sharp(z), g.sharp(z), rtol=1e-13)
    with pytest.raises(ValueError):
        RationalFunc.from_json({"num": [[1]]})


def test_formula_singularity():
    f = FormulaFunc(lambda z: np.exp(1 / z), lambda z: -np.exp(1 / z) / z**2, singularities=[0])
    with pytest.raises(EvaluationDomainError):
        f.sharp(0.0)


def test_validate_derivative_warns():
    bad = FormulaFunc(np.sin, np.sin)
    with pytest.warns(DerivativeMismatchWarning):
        assert not bad.validate_derivative([0.1, 0.5 + 0.2j])
    good = FormulaFunc(np.sin, np.cos)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert good.validate_derivative([0.1, 0.5 + 0.2j])


def test_rational_pole_has_no_overflow():
    f = RationalFunc([1], [0, 0, 1])  # 1/z^2, double pole
    assert f.sharp(0.0) == 0.0
    assert np.isfinite(f.sharp(1e-200))


@given(seeds, st.complex_numbers(max_magnitude=0.9), st.floats(0, 6.28))
def test_rigid_motion_invariance(seed, a, t):
    rng = np.random.default_rng(seed)
    f = random_rational(rng, 4)
    T = RigidMotion.from_angle(a, t)
    z = rng.normal(size=16) + 1j * rng.normal(size=16)
    s0 = f.sharp(z)
    s1 = compose_motion(T, f).sharp(z)
    assert np.all(np.abs(s1 - s0) <= 1e-9 * (1 + s0))


@given(seeds)
def test_reciprocal_invariance(seed):
    rng = np.random.default_rng(seed)
    f = random_rational(rng, 4)
    z = rng.normal(size=16) + 1j * rng.normal(size=16)
    s0 = f.sharp(z)
    assert np.all(np.abs(f.reciprocal().sharp(z) - s0) <= 1e-10 * (1 + s0))


@given(seeds)
def test_finite_difference_consistency(seed):
    rng = np.random.default_rng(seed)
    f = random_rational(rng, 3)
    z = complex(rng.normal(), rng.normal())
    s = float(f.sharp(z))
    if s < 0.1:
        return
    errs = []
    for h in (1e-3, 1e-4):
        fd = float(chordal(f.evaluate(z + h), f.evaluate(z))) / h
        errs.append(abs(fd - s))
    # O(h): the error shrinks roughly tenfold, with slack for curvature constants
    assert errs[1] <= max(0.2 * errs[0], 1e-6 * (1 + s))


def test_formula_matches_rational_away_from_axis():
    F = builtin_family("exp_inz")
    z = np.linspace(-1, 1, 7) + 0.3j
    f = F[9]
    expected = 9 / (2 * np.cosh(9 * 0.3))
    assert np.allclose(f.sharp(z), expected, rtol=1e-12)
