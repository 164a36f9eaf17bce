import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import minimize

from rivet import toy


def independent_energy(t, u1, u2, z):
    """Second transcription of the model energy, grouped by powers of u."""
    a1 = 60 * (z + 2) ** 2 + 76
    b1 = -4 * (z - 16) ** 2 - 8
    a2 = 15 * (z - 33) ** 2 + 100
    b2 = 25 * (z - 20) ** 2 - 2000 * t
    return 58 * (z + 14) ** 2 + a1 * u1 * u1 + b1 * u1 + a2 * u2 * u2 + b2 * u2


def test_energy_examples(rng):
    assert toy.toy_energy(0, 0, 0, 0) == 11368
    for z in (-3.0, 7.5):
        assert toy.toy_energy(0.7, 0, 0, z) == pytest.approx(58 * (z + 14) ** 2)
    for t, u1, u2, z in rng.normal(size=(20, 4)) * [1, 2, 10, 20]:
        assert toy.toy_energy(t, u1, u2, z) == pytest.approx(independent_energy(t, u1, u2, z), rel=1e-12)


def test_u_min_stationarity(rng):
    t = rng.uniform(0, 2, 10_000)
    z = rng.uniform(-40, 40, 10_000)
    u1, u2 = toy.toy_u_min(t, z)
    g1 = 2 * u1 * (60 * (z + 2) ** 2 + 76) - 4 * (z - 16) ** 2 - 8
    g2 = 2 * u2 * (15 * (z - 33) ** 2 + 100) + 25 * (z - 20) ** 2 - 2000 * t
    assert np.max(np.abs(g1)) < 1e-9 and np.max(np.abs(g2)) < 1e-9
    assert toy.toy_u_min(0.0, 20.0)[1] == 0.0


def test_u_min_against_numeric_minimiser(rng):
    for t, z in zip(rng.uniform(0, 2, 10), rng.uniform(-30, 40, 10)):
        res = minimize(lambda u: toy.toy_energy(t, u[0], u[1], z), [0.0, 0.0], method="BFGS",
                       options={"gtol": 1e-12})
        assert np.allclose(toy.toy_u_min(t, z), res.x, atol=1e-6)


@settings(max_examples=100, deadline=None)
@given(t=st.floats(0, 2), z=st.floats(-39, 39))
def test_reduced_energy_envelope(t, z):
    fd = toy.reduced_energy_dz(t, z)
    ex = toy.reduced_energy_dz_exact(t, z)
    assert fd == pytest.approx(ex, rel=1e-6, abs=1e-4)
    u1, u2 = toy.toy_u_min(t, z)
    assert toy.reduced_energy(t, z) <= toy.toy_energy(t, u1 + 0.1, u2 - 0.2, z)


def test_initial_state_is_a_local_minimum():
    zs = np.linspace(30, 37, 7001)
    f = toy.reduced_energy(0.001, zs)
    k = np.argmin(f)
    assert 0 < k < len(zs) - 1 and abs(zs[k] - 33.5) < 1.0


def test_stable_set_scan():
    m = toy.stable_set_scan((0.0, 2.0), (30.0, 36.0), (0.001, 0.5))
    iz = int(np.argmin(np.abs(m.z - 33.5)))
    assert m.flags[0, iz] and not m.flags[-1, iz]
    # the upper branch of stable states ends near t = 1.28
    up = toy.stable_set_scan((1.2, 1.35), (0.0, 40.0), (1e-4, 0.01))
    t_last = up.t[np.where(up.flags.any(axis=1))[0].max()]
    assert abs(t_last - 1.28) < 0.01
    with pytest.raises(ValueError):
        toy.stable_set_scan((0, 1), (0, 1), 0.0)


def test_am_trajectory_shape():
    tr = toy.run_toy_am()
    moved = np.where(tr.z < 33.5)[0]
    assert abs(tr.t[moved[0]] - 1.16) < 0.02
    j = tr.jump()
    assert abs(tr.t[j] - 1.28) < 0.01
    assert np.all(np.diff(tr.z) <= 0)


def test_zero_loading_keeps_z():
    for tr in (toy.run_toy_am(t_end=1.0, load=False), toy.run_toy_em(t_end=1.0, load=False),
               toy.viscous_oracle(epsilon=1e-2, dt=1e-2, t_end=1.0, load=False)):
        assert np.all(tr.z == 33.5)


def test_global_scheme():
    g = toy.run_toy_global(t_end=1.5)
    e = toy.run_toy_em(t_end=1.5)
    assert g.z[0] < 0  # immediate jump
    for t, eg in zip(g.t[::50], g.F_red[::50]):
        i = np.searchsorted(e.t, t, side="right") - 1
        assert eg <= toy.reduced_energy(t, e.z[i]) + 1e-9
    # both end on the lower branch; the global scheme sits at the t = 0
    # minimiser, which the lower branch minimiser moves away from slowly
    a = toy.run_toy_am(t_end=1.5)
    assert a.z[-1] == pytest.approx(g.z[-1], abs=0.25)


def test_viscous_large_epsilon_moves_slowly():
    tr = toy.viscous_oracle(z0=33.5, epsilon=1e3, dt=1e-3, t_end=1.4, t_start=1.3)
    assert np.max(-np.diff(tr.z)) < 0.5


def test_frozen_blocks():
    dt = np.array([0.1, 0, 0, 0.1, 0, 0.1, 0, 0, 0])
    assert toy.frozen_blocks(dt) == [(1, 2), (4, 4), (6, 8)]
    assert toy.frozen_blocks(dt, min_len=3) == [(6, 8)]
    assert toy.frozen_blocks(np.ones(3)) == []


def test_csv_writers(tmp_path):
    tr = toy.run_toy_am(t_end=0.01)
    toy.write_toy_trajectory(tr, tmp_path / "a.csv")
    lines = (tmp_path / "a.csv").read_text().splitlines()
    assert lines[0] == "step,t,z,u1,u2,F_red" and len(lines) == len(tr) + 1
    toy.write_stable_set(toy.stable_set_scan((0, 0.1), (0, 1), 0.05), tmp_path / "s.csv")
    assert (tmp_path / "s.csv").read_text().startswith("t,z,flag\n0,0,")
    toy.write_reduced_energy(1.0, tmp_path / "r.csv", n=11)
    assert len((tmp_path / "r.csv").read_text().splitlines()) == 12


# snap-through -----------------------------------------------------------------


def test_snap_energy_examples():
    assert toy.snap_energy(0.0, 0.0) == 0.0
    assert abs(toy.snap_energy(2.0, 0.0)) < 1e-15
    assert toy.snap_energy(1.0, 0.0) == pytest.approx((1 - np.sqrt(2)) ** 2 / np.sqrt(2), rel=1e-14)
    us = np.linspace(-1, 3, 41)
    np.testing.assert_allclose(toy.snap_energy(us, 0.0), toy.snap_energy(2 - us, 0.0), atol=1e-12)


def test_snap_derivatives(rng):
    h = 1e-6
    for u, F in zip(rng.uniform(-1, 3, 20), rng.uniform(-0.3, 0.3, 20)):
        fd1 = (toy.snap_energy(u + h, F) - toy.snap_energy(u - h, F)) / (2 * h)
        fd2 = (toy.snap_energy_du(u + h, F) - toy.snap_energy_du(u - h, F)) / (2 * h)
        assert fd1 == pytest.approx(toy.snap_energy_du(u, F), rel=1e-6, abs=1e-9)
        assert fd2 == pytest.approx(toy.snap_energy_du2(u, F), rel=1e-6, abs=1e-8)


def test_fold_point():
    uc, Fc = toy.snap_fold()
    assert abs(toy.snap_energy_du2(uc, Fc)) < 1e-12 and abs(toy.snap_energy_du(uc, Fc)) < 1e-12
    assert uc == pytest.approx(0.4902, abs=1e-4) and Fc == pytest.approx(0.1874, abs=1e-4)


def test_snap_variants_agree_in_tension():
    sched = toy.LinearSchedule(F0=-0.1, rate=0.0)
    e = toy.run_snap_em(sched, t_end=0.2)
    loc = toy.run_snap_local(sched, t_end=0.2)
    glo = toy.run_snap_global(sched, t_end=0.2)
    assert e.u[-1] == pytest.approx(loc.u[-1], abs=1e-9)
    assert glo.u[-1] == pytest.approx(loc.u[-1], abs=1e-6)
    assert e.u[0] < 0


def test_snap_em_steps_and_census():
    tr = toy.run_snap_em()
    uc, Fc = toy.snap_fold()
    blocks = toy.frozen_blocks(tr.dt)
    assert len(blocks) == 1
    first, last = blocks[0]
    assert tr.F[first] == pytest.approx(Fc, abs=0.25 * 0.01)   # within one load step
    assert tr.u[first - 1] < uc < tr.u[first] and tr.u[last] > 1.9
    census = toy.newton_iteration_census(tr)
    assert census.max() <= 15
    assert np.all(tr.dt + np.abs(np.diff(np.concatenate([[toy.snap_start(toy.LinearSchedule())], tr.u])))
                  == pytest.approx(0.01, abs=1e-12))
