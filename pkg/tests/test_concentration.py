import math

import numpy as np
import pytest

from sphlab.concentration import (
    MassProfile,
    detect_irregular_points,
    estimate_mass,
    family_marty_field,
    limit_off_S,
    marty_field,
    mass_profile,
    quantization_check,
)
from sphlab.errors import NotConcentratedError, NotQuasiNormalError, ResolutionTooLowError, ScheduleTooShortError
from sphlab.funcmodel import RationalFunc, builtin_family, fixed_family
from sphlab.quadrature import Disk

D = Disk(0, 1)
ROOTS3 = 2 ** (-1 / 3) * np.exp(2j * np.pi * np.arange(3) / 3)


def test_marty_examples():
    assert marty_field(RationalFunc([0, 1]), D, 33).max() == pytest.approx(1.0)
    m = marty_field(RationalFunc([0, 5]), D, 33)
    assert m.max() == pytest.approx(5.0) and abs(m.argmax()) < 1e-12
    assert np.nanmax(marty_field(RationalFunc([2.0]), D, 16).values) == 0.0
    with pytest.raises(ResolutionTooLowError):
        marty_field(RationalFunc([0, 1]), D, 4)


def test_family_field_is_pointwise_sup():
    F = builtin_family("nz", (1, 2, 4))
    fam = family_marty_field(F, D, 17)
    stacked = np.stack([marty_field(f, D, 17).values for _, f in F.members()])
    assert np.array_equal(fam.values, np.max(stacked, axis=0), equal_nan=True)
    assert fam.max() == pytest.approx(4.0)


def test_detect_nz():
    S = detect_irregular_points(builtin_family("nz"), D)
    assert len(S) == 1 and abs(S[0].location) < 1e-3
    w = S[0].witness
    assert all(b[2] > a[2] for a, b in zip(w, w[1:]))


def test_detect_nP3():
    S = detect_irregular_points(builtin_family("nP", m=3), D)
    assert len(S) == 3
    for r in ROOTS3:
        assert min(abs(p.location - r) for p in S) < 1e-3


def test_detect_constant_and_errors():
    assert detect_irregular_points(builtin_family("constant", value=0.5), D) == []
    with pytest.raises(ScheduleTooShortError):
        detect_irregular_points(builtin_family("nz", (1, 2, 4)), D)
    with pytest.raises(ResolutionTooLowError):
        detect_irregular_points(builtin_family("nz"), D, resolution=4)


def test_exp_family_not_quasi_normal():
    with pytest.raises(NotQuasiNormalError) as exc:
        detect_irregular_points(builtin_family("exp_inz"), D, resolution=128)
    assert exc.value.flagged.sum() > 0


def test_estimate_mass_examples():
    a, u = estimate_mass(builtin_family("nz"), 0, D=D)
    assert abs(a - 1) <= 0.05 and u < 0.05
    a, u = estimate_mass(builtin_family("nP", m=1), 0.5, (0.4, 0.2, 0.1), D)
    assert abs(a - 1) <= 0.05
    with pytest.raises(NotConcentratedError):
        estimate_mass(builtin_family("constant", value=1.0), 0.2, D=D)


def test_estimate_mass_validates_schedule():
    with pytest.raises(ValueError):
        estimate_mass(builtin_family("nz"), 0, (0.1, 0.2, 0.05))
    with pytest.raises(ValueError):
        estimate_mass(builtin_family("nz"), 0.8, (0.4, 0.2, 0.1), D)


def test_limit_off_S():
    F = builtin_family("nz", (1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024))
    out = limit_off_S(F, D, [0], [0.5, -0.3j])
    for probe in out:
        assert probe.converged
        assert probe.value.is_infinity or abs(probe.value.to_complex()) > 99
    f = RationalFunc([1, 2], [3, 1j])
    out = limit_off_S(fixed_family(f), D, [], [0.2 + 0.1j])
    assert out[0].converged and out[0].value.to_complex() == pytest.approx(complex(f.evaluate(0.2 + 0.1j)))
    out = limit_off_S(builtin_family("exp_inz"), D, [], [0.5j])
    assert out[0].converged and abs(out[0].value.to_complex()) < 1e-10
    with pytest.raises(ValueError):
        limit_off_S(F, D, [0], [0.01])


def test_quantization_check():
    prof = MassProfile([], {"p": (1.02, 0.05), "q": (1.5, 0.01)}, 0.0, 2.0)
    assert quantization_check(prof, 0.05) == {"p": True, "q": False}
    assert quantization_check(MassProfile([], {}, 0.0, 1.0), 0.05) == {}


def test_mass_profile_nP3_conservation():
    prof = mass_profile(builtin_family("nP", m=3), D)
    assert len(prof.S) <= math.floor(prof.order_bound)
    total = prof.residual_area + sum(a for a, _ in prof.alpha.values())
    assert total <= prof.order_bound + 0.05
    for a, u in prof.alpha.values():
        assert a + u >= 1
    assert all(prof.quantized.values())
    js = prof.to_json()
    assert set(js) == {"S", "alpha", "residual_area", "order_bound", "quantized"}
