import csv

import numpy as np
import pytest

from wavecross.dynamics import (IntegratorControls, flow_step, initial_bundle, integrate_batch, integrate_to,
                                theta_matrices, write_trace_csv)
from wavecross.models import builtin_model, make_two_level, poisson


def test_harmonic_rotation_and_action():
    m = builtin_model("harmonic")
    q0, p0 = 0.7, -0.4
    for t in (0.5, 1.7, 2 * np.pi):
        b = flow_step(m, 1, initial_bundle(m, 1, 0.0, [q0, p0]), t)
        c, s = np.cos(t), np.sin(t)
        assert np.allclose(b.z, [q0 * c + p0 * s, -q0 * s + p0 * c], atol=1e-11)
        assert np.allclose(b.F, [[c, s], [-s, c]], atol=1e-11)
        action = (p0 ** 2 - q0 ** 2) * np.sin(2 * t) / 4 + q0 * p0 * (np.cos(2 * t) - 1) / 2
        assert abs(b.s_action - action) < 1e-11


def test_free_motion():
    m = builtin_model("free")
    b = flow_step(m, 1, initial_bundle(m, 1, 0.0, [0.2, 1.5]), 2.0)
    assert np.allclose(b.z, [0.2 + 3.0, 1.5])
    assert abs(b.s_action - 2.0 * 1.5 ** 2 / 2) < 1e-12
    assert np.allclose(b.F, [[1, 2], [0, 1]])


def test_decoupled_model_theta_vanishes_and_y_constant(rng):
    m = make_two_level("xi**2/2 + x**2/2", "1 + x**2/4", (1, 0, 0))
    for z in rng.normal(size=(10, 2)):
        for mat in theta_matrices(m, 1, 0.0, z):
            assert np.max(np.abs(mat)) == 0
    tr = integrate_to(m, 1, initial_bundle(m, 1, 0.0, [1.0, 0.5]), 3.0)
    assert np.allclose(tr.final.y_vec, [1, 0])


def test_zero_length_interval():
    m = builtin_model("pendulum")
    b0 = initial_bundle(m, 1, 0.3, [0.1, 0.2])
    tr = integrate_to(m, 1, b0, 0.3)
    assert tr.final is b0
    assert np.allclose(tr.z_at(0.3), b0.z)


def test_pendulum_energy_drift():
    m = builtin_model("pendulum")
    tr = integrate_to(m, 1, initial_bundle(m, 1, 0.0, [0.5, 1.0]), 10.0, sample_times=np.linspace(0, 10, 101))
    e = np.array([m.value("v", 0.0, b.z) for b in tr.samples])
    assert np.max(np.abs(e - e[0])) < 1e-8


def test_pendulum_against_finer_reference():
    m = builtin_model("pendulum")
    b0 = initial_bundle(m, 1, 0.0, [0.5, 1.0])
    a = integrate_to(m, 1, b0, 10.0).final.z
    b = integrate_to(m, 1, b0, 10.0, IntegratorControls(rtol=1e-13, atol=1e-13, max_step=0.01)).final.z
    assert np.max(np.abs(a - b)) < 1e-9


def test_backwards_interval_rejected():
    m = builtin_model("free")
    with pytest.raises(ValueError):
        integrate_to(m, 1, initial_bundle(m, 1, 1.0, [0.0, 1.0]), 0.5)


def test_schrodinger_omega_vanishes(rng):
    m = builtin_model("schrodinger_crossing_1d")
    for z in rng.uniform(-2, 2, size=(20, 2)):
        om, _, _ = theta_matrices(m, 1, 0.0, z)
        assert np.max(np.abs(om)) < 1e-12


@pytest.mark.parametrize("name", ["gapped_two_level_1d", "schrodinger_crossing_2d", "bloch_crossing_1d",
                                  "dirac_cone_2d"])
def test_theta_hermitian_omega_antihermitian(name, rng):
    m = builtin_model(name)
    z = rng.uniform(-2, 2, size=(100, 2 * m.dim_d))
    for band in (1, 2):
        om, _, th = theta_matrices(m, band, 0.2, z)
        assert np.max(np.abs(th - np.conj(np.swapaxes(th, -1, -2)))) < 1e-9
        assert np.max(np.abs(om + np.conj(np.swapaxes(om, -1, -2)))) < 1e-9


@pytest.mark.parametrize("name", ["gapped_two_level_1d", "schrodinger_crossing_2d", "bloch_crossing_1d"])
def test_commutator_identity(name, rng):
    # i (d_t Pi + {h, Pi}) = [Theta, Pi]
    m = builtin_model(name)
    d = m.dim_d
    for z in rng.uniform(-2, 2, size=(10, 2 * d)):
        _, _, th = theta_matrices(m, 1, 0.0, z)
        pi = m.projector(1, 0.0, z)
        dpi = m.projector_grad(1, 0.0, z)
        gh = m.grad("h1", 0.0, z)
        br = sum(gh[d + k] * dpi[k] - gh[k] * dpi[d + k] for k in range(d))
        lhs = 1j * (m.projector_dt(1, 0.0, z) + br)
        assert np.max(np.abs(lhs - (th @ pi - pi @ th))) < 1e-6


@pytest.mark.parametrize("name,z0", [("gapped_two_level_1d", [-1.0, 0.5]), ("schrodinger_crossing_1d", [-1.0, 2.0]),
                                     ("bloch_crossing_1d", [0.0, 1.0])])
def test_parallel_transport_invariants(name, z0):
    m = builtin_model(name)
    tr = integrate_to(m, 1, initial_bundle(m, 1, 0.0, z0), 5.0, sample_times=np.linspace(0, 5, 51))
    for b in tr.samples:
        assert abs(np.linalg.norm(b.y_vec) - 1) < 1e-10
        assert np.linalg.norm(m.projector(2, b.t, b.z) @ b.y_vec) < 1e-8
        assert b.symplectic_defect() < 1e-8


def test_flow_map_matches_finite_difference_jacobian():
    m = builtin_model("pendulum")
    z0 = np.array([0.3, 0.8])
    tr = integrate_to(m, 1, initial_bundle(m, 1, 0.0, z0), 1.0)
    h = 1e-5
    jac = np.zeros((2, 2))
    for j in range(2):
        e = np.zeros(2)
        e[j] = h
        zp = integrate_to(m, 1, initial_bundle(m, 1, 0.0, z0 + e), 1.0).final.z
        zm = integrate_to(m, 1, initial_bundle(m, 1, 0.0, z0 - e), 1.0).final.z
        jac[:, j] = (zp - zm) / (2 * h)
    assert np.max(np.abs(jac - tr.final.F)) < 1e-5


def test_batch_matches_single():
    m = builtin_model("gapped_two_level_1d")
    z0s = np.array([[-1.0, 0.5], [0.5, -0.2]])
    ts, z, s, f, y = integrate_batch(m, 1, z0s, 0.0, 2.0)
    for k, z0 in enumerate(z0s):
        b = integrate_to(m, 1, initial_bundle(m, 1, 0.0, z0), 2.0).final
        assert np.allclose(z[-1, k], b.z, atol=1e-9)
        assert np.allclose(f[-1, k], b.F, atol=1e-9)
        assert np.allclose(np.abs(np.vdot(y[-1, k], b.y_vec)), 1, atol=1e-9)


def test_trace_csv(tmp_path):
    m = builtin_model("gapped_two_level_1d")
    tr = integrate_to(m, 1, initial_bundle(m, 1, 0.0, [-1.0, 0.5]), 1.0)
    path = tmp_path / "trace.csv"
    write_trace_csv(tr, path, times=[0.0, 0.5, 1.0])
    rows = list(csv.reader(open(path)))
    assert rows[0][:4] == ["t", "q1", "p1", "S"]
    assert len(rows) == 4
