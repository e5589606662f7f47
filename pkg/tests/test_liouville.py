import math

import numpy as np
import pytest

from sphlab.errors import CriticalPointError, NewtonDivergedError
from sphlab.funcmodel import FormulaFunc, RationalFunc, builtin_family
from sphlab.liouville import (
    Grid2D,
    blowup_demo,
    grid_from_csv,
    grid_to_csv,
    harmonic_extension,
    liouville_residual,
    log_sharp,
    solve_liouville,
    superharmonic_check,
)

Z = RationalFunc([0, 1])
EXP = FormulaFunc(np.exp, np.exp, recip=lambda z: (np.exp(-z), -np.exp(-z)))


def square(k, half=0.5):
    n = 2 * half * 2**k + 1
    return Grid2D(-half, half, -half, half, int(n), int(n))


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid2D(0, 1, 0, 1, 4, 4)
    with pytest.raises(ValueError):
        Grid2D(0, 1, 0, 2, 9, 9)
    G = Grid2D.square(0.5, 2**-6)
    assert G.nx == 65 and G.h == 2**-6


def test_residual_examples():
    r6 = np.abs(liouville_residual(Z, square(6))).max()
    r7 = np.abs(liouville_residual(Z, square(7))).max()
    assert r6 <= 0.01
    assert r6 / r7 == pytest.approx(4.0, rel=0.05)
    e5 = np.abs(liouville_residual(EXP, square(5, 1.0))).max()
    e6 = np.abs(liouville_residual(EXP, square(6, 1.0))).max()
    assert 1.8 <= math.log2(e5 / e6) <= 2.2
    with pytest.raises(CriticalPointError) as exc:
        liouville_residual(RationalFunc([0, 0, 1]), square(4))
    assert exc.value.nodes


def test_exp_log_sharp_closed_form():
    G = square(5, 1.0)
    x = G.nodes().real
    assert np.allclose(log_sharp(EXP, G), x - np.log1p(np.exp(2 * x)), atol=1e-14)


def test_laplace_when_V_zero(rng):
    G = square(4)
    b = rng.normal(size=(G.ny, G.nx))
    sol = solve_liouville(0.0, b, G)
    assert sol.converged
    assert np.allclose(sol.u, harmonic_extension(b, G), atol=1e-12)


@pytest.mark.parametrize("f,half", [(Z, 0.5), (EXP, 0.5)])
def test_solver_matches_oracle(f, half):
    errs = []
    for k in (5, 6):
        G = square(k, half)
        exact = log_sharp(f, G)
        sol = solve_liouville(4.0, exact, G)
        assert sol.converged
        assert sol.residual_norm <= 1e-10 * (1 + np.abs(sol.u).max())
        errs.append(np.abs(sol.u - exact).max() / G.h**2)
    assert errs[1] == pytest.approx(errs[0], rel=0.1)


def test_newton_diverged_payload():
    G = square(4)
    with pytest.raises(NewtonDivergedError) as exc:
        solve_liouville(1e3, np.full((G.ny, G.nx), 5.0), G)
    assert exc.value.best is not None


def test_solver_input_checks():
    G = square(4)
    with pytest.raises(ValueError):
        solve_liouville(-1.0, np.zeros((G.ny, G.nx)), G)
    with pytest.raises(ValueError):
        solve_liouville(4.0, np.zeros((3, 3)), G)


def test_superharmonic_examples():
    assert superharmonic_check(EXP, square(6, 1.0)).violations == 0
    assert superharmonic_check(Z, square(6)).violations == 0
    G = square(5)
    zz = G.nodes()
    harmonic = (zz**2).real + 3 * zz.real
    rep = superharmonic_check(Z, G, u=harmonic)
    assert rep.violations == 0 and abs(rep.worst) < 1e-12
    rep = superharmonic_check(RationalFunc([0, 0, 1]), square(4))
    assert rep.excluded


def test_subharmonic_is_caught():
    G = square(4)
    rep = superharmonic_check(Z, G, u=np.abs(G.nodes()) ** 2)
    assert rep.violations > 0


def test_blowup_nz():
    G = square(7)
    rows = blowup_demo(builtin_family("nz", (4, 8, 16, 32)), G, [0], [0.4])
    for r in rows:
        assert r.max_u == pytest.approx(math.log(r.n), abs=1e-9)
        assert list(r.probes.values())[0] == pytest.approx(math.log(r.n / (1 + 0.16 * r.n**2)), abs=1e-12)
    probes = [list(r.probes.values())[0] for r in rows]
    assert all(b < a for a, b in zip(probes, probes[1:]))
    assert rows[-1].mass == pytest.approx(1.0, abs=0.05)


def test_blowup_exp_upper_half():
    G = Grid2D(-0.5, 0.5, 0.25, 1.25, 65, 65)
    rows = blowup_demo(builtin_family("exp_inz", (1, 2, 4, 8, 16, 32)), G)
    maxes = [r.max_u for r in rows]
    assert all(b < a for a, b in zip(maxes[2:], maxes[3:]))
    assert maxes[-1] < -4


def test_blowup_constant_flat():
    with pytest.raises(CriticalPointError):
        blowup_demo(builtin_family("constant", value=0.0, indices=(1, 2)), square(4))
    rows = blowup_demo(builtin_family("nz", (1, 2)), square(4), [0])
    assert len(rows) == 2


def test_csv_round_trip(rng):
    G = Grid2D(-1, 1, 0, 1, 17, 9)
    v = rng.normal(size=(G.ny, G.nx))
    back, G2 = grid_from_csv(grid_to_csv(v, G))
    assert G2 == G and np.array_equal(back, v)
