import json
import math
import warnings

import numpy as np
import pytest
import sympy

from ion_ifo import tdse as Q
from ion_ifo.core import HBAR, NM, US, ZN, ConfigurationError, DomainError, NumericError, make_config
from ion_ifo.dynamics import Branch, PerturbationSpec
from ion_ifo.overlap import ModeOccupation, state_overlap
from ion_ifo.phases import phase_difference, phase_difference_one_branch
from ion_ifo.trajectory import (cubic_metric, design_alpha_A, design_alpha_B, sensitivity,
                                zero_trajectory)

FAST = dict(grid_n=512, n_steps=20_000)


def _wrapped(a, b):
    return abs(math.remainder(a - b, 2 * math.pi))


def _energy(cfg, psi):
    k = 2 * np.pi * np.fft.fftfreq(psi.amplitudes.size, psi.dx)
    psi_k = np.fft.fft(psi.amplitudes)
    kinetic = np.sum(np.abs(psi_k) ** 2 * (HBAR * k) ** 2 / (2 * cfg.mass)) / np.sum(np.abs(psi_k) ** 2)
    potential = np.sum(np.abs(psi.amplitudes) ** 2 * 0.5 * cfg.spring * psi.x**2) * psi.dx
    return kinetic + potential


def test_ground_state_moments(cfg):
    psi = Q.ground_state(cfg)
    prob = np.abs(psi.amplitudes) ** 2 * psi.dx
    assert psi.norm() == pytest.approx(1.0, abs=1e-12)
    assert abs(np.sum(prob * psi.x)) < 1e-10 * cfg.length_scale
    var = np.sum(prob * psi.x**2)
    assert var == pytest.approx(HBAR / (2 * cfg.mass * cfg.omega), rel=1e-10)


def test_ground_state_grid_checks(cfg):
    with pytest.raises(ConfigurationError):
        Q.ground_state(cfg, 0.0, 64, 40 * cfg.length_scale)
    with pytest.raises(ConfigurationError):
        Q.ground_state(cfg, 100 * NM, 2048, 10 * cfg.length_scale)
    with pytest.raises(ConfigurationError):
        Q.ground_state(cfg, 0.0, 1000)
    with pytest.raises(DomainError):
        Q.GridWavefunction(0.0, 1.0, np.ones(3))


def test_fock_states(cfg):
    states = [Q.fock_state(cfg, n) for n in range(8)]
    assert np.allclose(states[0].amplitudes, Q.ground_state(cfg).amplitudes, atol=1e-12 / math.sqrt(states[0].dx))
    for i, a in enumerate(states):
        for j, b in enumerate(states):
            assert abs(a.inner(b) - (1.0 if i == j else 0.0)) <= 1e-10
        assert _energy(cfg, a) == pytest.approx(HBAR * cfg.omega * (i + 0.5), rel=1e-8)
    with pytest.raises(DomainError):
        Q.fock_state(cfg, 13)


def test_superposition_grid_state(cfg):
    occ = ModeOccupation.normalized([1, 0.5j, 0.25])
    psi = Q.superposition(cfg, occ)
    assert psi.norm() == pytest.approx(1.0, abs=1e-10)
    assert psi.inner(Q.fock_state(cfg, 1)) == pytest.approx(np.conj(occ.amplitudes[1]), abs=1e-10)
    with pytest.raises(DomainError):
        Q.superposition(cfg, ModeOccupation.fock(13))


def test_free_ground_state_only_gains_phase(cfg):
    spec = Q.PotentialSpec(PerturbationSpec(), Branch.UP, zero_trajectory(cfg.t_final))
    psi0 = Q.ground_state(cfg, 0.0, 512)
    psi = Q.propagate(cfg, spec, psi0, 20_000)
    expected = np.exp(-0.5j * cfg.omega * cfg.t_final)
    assert abs(psi0.inner(psi) - expected) <= 1e-6
    np.testing.assert_allclose(psi.amplitudes, expected * psi0.amplitudes,
                               atol=1e-6 * np.max(np.abs(psi0.amplitudes)))


def test_displaced_ground_state_is_stationary(cfg):
    c = 10 * ZN
    spec = Q.PotentialSpec(PerturbationSpec(c=c), Branch.UP, zero_trajectory(cfg.t_final))
    psi0 = Q.ground_state(cfg, c / cfg.spring, 512)
    psi = Q.propagate(cfg, spec, psi0, 20_000)
    assert abs(abs(psi0.inner(psi)) - 1.0) <= 1e-8


def test_norm_log(tmp_path, cfg, traj_a):
    pert = PerturbationSpec(c=10 * ZN)
    up, down = Q.branch_specs(traj_a, pert)
    psi0 = Q.ground_state(cfg, 0.0, 512, Q.grid_span(cfg, traj_a, pert))
    psi_up, psi_down, log = Q.propagate_pair(cfg, up, down, psi0, 20_000, log_every=2000)
    assert log.max_norm_drift <= 1e-9
    assert len(log.times) == 11
    energies = np.asarray(log.energies)
    # both branches start and end at rest in the ground state
    np.testing.assert_allclose(energies[[0, -1]], 0.5 * HBAR * cfg.omega, rtol=1e-4)
    assert np.all(energies[5] > energies[0])
    log.to_json(tmp_path / "log.json")
    doc = json.loads((tmp_path / "log.json").read_text())
    assert doc["max_norm_drift"] == log.max_norm_drift and len(doc["norm"]) == 2
    psi_up.to_csv(tmp_path / "psi.csv")
    lines = (tmp_path / "psi.csv").read_text().splitlines()
    assert lines[0] == "x_nm,re,im" and len(lines) == 513


def test_propagation_guards(cfg, traj_a):
    spec = Q.PotentialSpec(PerturbationSpec(), "up", traj_a)
    psi0 = Q.ground_state(cfg, 0.0, 512)
    with pytest.raises(ConfigurationError):
        Q.propagate(cfg, spec, psi0, 9_999)
    slow = make_config(t_final_us=300.0)
    with pytest.raises(ConfigurationError):
        Q.propagate(slow, spec, psi0, 10_000)
    other = Q.ground_state(cfg, 0.0, 1024)
    with pytest.raises(DomainError):
        Q._evolve(cfg, [spec, spec], [psi0, other], 10_000)


def test_norm_drift_raises(cfg, traj_a, monkeypatch):
    def leaky(psi, base, profile, coef):
        psi *= 1.0001

    monkeypatch.setattr(Q._kernels, "apply_potential_phase", leaky)
    spec = Q.PotentialSpec(PerturbationSpec(), "up", traj_a)
    with pytest.raises(NumericError):
        Q.propagate(cfg, spec, Q.ground_state(cfg, 0.0, 512), 10_000)


def test_unperturbed_branches_coincide(cfg, traj_a):
    up, down = Q.branch_specs(traj_a, PerturbationSpec())
    psi0 = Q.ground_state(cfg, 0.0, FAST["grid_n"], Q.grid_span(cfg, traj_a, PerturbationSpec()))
    res = Q.branch_overlap(cfg, up, down, psi0, FAST["n_steps"])
    assert abs(res.modulus - 1.0) <= 1e-6
    assert abs(res.value - 1.0) <= 1e-6


@pytest.mark.parametrize("traj_name", ["traj_a", "traj_b"])
def test_branch_phase_matches_analytic(request, cfg, traj_name):
    traj = request.getfixturevalue(traj_name)
    for c in (10 * ZN, -20 * ZN):
        pert = PerturbationSpec(c=c)
        up, down = Q.branch_specs(traj, pert)
        psi0 = Q.ground_state(cfg, 0.0, 1024, Q.grid_span(cfg, traj, pert))
        res = Q.branch_overlap(cfg, up, down, psi0, 40_000)
        assert _wrapped(res.phase, phase_difference(cfg, traj, pert)) <= 1e-3
        closed = state_overlap(cfg, traj, pert, ModeOccupation.fock(0, 0))
        assert abs(res.modulus - closed.modulus) <= 1e-4


def test_one_branch_force(cfg, traj_a):
    c = 10 * ZN
    pert = PerturbationSpec(c=c)
    up, down = Q.branch_specs(traj_a, pert, "one")
    assert down.pert == PerturbationSpec()
    psi0 = Q.ground_state(cfg, 0.0, 1024, Q.grid_span(cfg, traj_a, pert))
    res = Q.branch_overlap(cfg, up, down, psi0, 40_000)
    assert _wrapped(res.phase, phase_difference_one_branch(cfg, traj_a, c)) <= 1e-3
    assert res.modulus == pytest.approx(1.0, abs=1e-4)
    with pytest.raises(DomainError):
        Q.branch_specs(traj_a, PerturbationSpec(epsilon=ZN), "one")
    with pytest.raises(DomainError):
        Q.branch_specs(traj_a, pert, "neither")


def test_crossing_point_cancels_phase(cfg, traj_a):
    c = 10 * ZN
    pert = PerturbationSpec(c=c, x0=c / cfg.spring)
    up, down = Q.branch_specs(traj_a, pert)
    psi0 = Q.ground_state(cfg, 0.0, 1024, Q.grid_span(cfg, traj_a, pert))
    res = Q.branch_overlap(cfg, up, down, psi0, 40_000)
    assert _wrapped(res.phase, 0.0) <= 1e-3


def test_superposition_matches_closed_form():
    """Off a full period the mode phases matter: compare a superposition with the analytic sum."""
    cfg = make_config(t_final_us=0.37)
    traj = design_alpha_A(cfg, 100 * NM)
    pert = PerturbationSpec(c=10 * ZN, epsilon=20 * ZN)
    occ = ModeOccupation.normalized([1.0, 0.6j, -0.3, 0.2])
    up, down = Q.branch_specs(traj, pert)
    psi0 = Q.superposition(cfg, occ, 1024, Q.grid_span(cfg, traj, pert))
    res = Q.branch_overlap(cfg, up, down, psi0, 40_000)
    closed = state_overlap(cfg, traj, pert, occ)
    assert closed.modulus < 0.99
    assert _wrapped(res.phase, closed.phase) <= 1e-3
    assert abs(res.modulus - closed.modulus) <= 1e-4


def test_lattice_profile_against_symbolic_series():
    x, k = sympy.symbols("x k", positive=True)
    potential = sympy.sin(k * x + sympy.pi / 4) ** 2
    force = -sympy.diff(potential, x)
    f0 = force.subs(x, 0)
    spec_k = 1.5e6
    xs = np.linspace(-0.9, 0.9, 13) / spec_k
    for order, n_terms in (("linear", 1), ("cubic", 3), ("quintic", 5)):
        shape = sympy.series(force / f0, x, 0, n_terms).removeO()
        prof = sympy.series((potential - potential.subs(x, 0)) / sympy.diff(potential, x).subs(x, 0),
                            x, 0, n_terms + 1).removeO()
        spec = Q.LatticeSpec(1e-30, spec_k, order)
        want_shape = [float(shape.subs({k: spec_k, x: xi})) for xi in xs]
        want_prof = [float(prof.subs({k: spec_k, x: xi})) for xi in xs]
        np.testing.assert_allclose(Q.lattice_shape(spec, xs), want_shape, rtol=1e-12, atol=1e-15)
        np.testing.assert_allclose(Q.lattice_profile(spec, xs), want_prof, rtol=1e-12, atol=1e-24)
    full = Q.LatticeSpec(1e-30, spec_k)
    np.testing.assert_allclose(Q.lattice_shape(full, xs),
                               [float((force / f0).subs({k: spec_k, x: xi})) for xi in xs], rtol=1e-12)


def test_lattice_force_profile():
    spec = Q.LatticeSpec(1e-30, 1.5e6, "cubic")
    assert Q.lattice_force_profile(spec, 7 * ZN, 0.0) == 7 * ZN
    linear = Q.LatticeSpec(1e-30, 1.5e6, "linear")
    xs = np.linspace(-500, 500, 11) * NM
    np.testing.assert_array_equal(Q.lattice_force_profile(linear, 7 * ZN, xs), np.full(11, 7 * ZN))
    kx = 1.5e6 * 300 * NM
    assert Q.lattice_force_profile(spec, 1.0, 300 * NM) == pytest.approx(1 - 2 * kx**2)
    # lattice force is minus the gradient of v0 sin^2(kx + pi/4), normalized at 0
    full = Q.LatticeSpec(2e-28, 1.5e6)
    h = 1e-12
    grad = (Q.lattice_potential(full, 300 * NM + h) - Q.lattice_potential(full, 300 * NM - h)) / (2 * h)
    f0 = -(Q.lattice_potential(full, h) - Q.lattice_potential(full, -h)) / (2 * h)
    assert Q.lattice_force_profile(full, 1.0, 300 * NM) == pytest.approx(-grad / f0, rel=1e-5)


def test_lattice_warns_outside_expansion():
    spec = Q.LatticeSpec(1e-30, 1.5e6, "quintic")
    with pytest.warns(RuntimeWarning):
        Q.lattice_force_profile(spec, 1.0, np.array([0.0, 2.0 / 1.5e6]))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        Q.lattice_force_profile(Q.LatticeSpec(1e-30, 1.5e6), 1.0, 2.0 / 1.5e6)
    with pytest.raises(DomainError):
        Q.LatticeSpec(-1.0, 1.0)
    with pytest.raises(DomainError):
        Q.LatticeSpec(1.0, 0.0)


def test_linear_lattice_equals_homogeneous_drive(cfg, traj_a):
    pert = PerturbationSpec(c=10 * ZN)
    linear = Q.LatticeSpec(0.0, 1.5e6, "linear")
    psi0 = Q.ground_state(cfg, 0.0, 512, Q.grid_span(cfg, traj_a, pert))
    plain = Q.branch_overlap(cfg, *Q.branch_specs(traj_a, pert), psi0, 20_000)
    lat = Q.branch_overlap(cfg, *Q.branch_specs(traj_a, pert, lattice=linear), psi0, 20_000)
    assert lat.value == pytest.approx(plain.value, abs=1e-12)


def _lattice_discrepancy(cfg, traj, k=1.5e6, c=10 * ZN):
    pert = PerturbationSpec(c=c)
    psi0 = Q.ground_state(cfg, 0.0, 512, Q.grid_span(cfg, traj, pert))
    phases = []
    for order in ("full", "linear"):
        lat = Q.LatticeSpec(0.0, k, order)
        phases.append(Q.branch_overlap(cfg, *Q.branch_specs(traj, pert, lattice=lat), psi0, 20_000).phase)
    return abs(math.remainder(phases[0] - phases[1], 2 * math.pi))


@pytest.mark.slow
def test_lattice_error_grows_with_cubic_metric(cfg):
    trajs = [design_alpha_A(cfg, m * NM) for m in (50, 100, 135)]
    metrics = [cubic_metric(t) for t in trajs]
    errors = [_lattice_discrepancy(cfg, t) for t in trajs]
    assert metrics == sorted(metrics)
    assert errors == sorted(errors) and errors[0] > 0
    b = design_alpha_B(cfg, sensitivity(trajs[-1]), 75 * NM)
    assert abs(cubic_metric(b)) < metrics[-1]
    assert _lattice_discrepancy(cfg, b) < errors[-1]


@pytest.mark.slow
def test_grid_convergence(cfg, traj_a):
    pert = PerturbationSpec(c=10 * ZN)
    span = Q.grid_span(cfg, traj_a, pert)
    up, down = Q.branch_specs(traj_a, pert)
    phases = []
    for grid_n, steps in ((Q.DEFAULT_GRID_N, Q.DEFAULT_STEPS), (2 * Q.DEFAULT_GRID_N, 2 * Q.DEFAULT_STEPS)):
        psi0 = Q.ground_state(cfg, 0.0, grid_n, span)
        phases.append(Q.branch_overlap(cfg, up, down, psi0, steps).phase)
    assert _wrapped(phases[0], phases[1]) <= 1e-4


def test_potential_spec(cfg, traj_a):
    pert = PerturbationSpec(c=2 * ZN, epsilon=1 * ZN, x0=5 * NM)
    spec = Q.PotentialSpec(pert, "down", traj_a)
    x = np.array([-10.0, 0.0, 30.0]) * NM
    t = 0.2 * US
    f_alpha = cfg.mass * (traj_a.alpha_ddot(t) + cfg.omega**2 * traj_a.alpha(t))
    expected = 0.5 * cfg.spring * x**2 - pert.c * x + (f_alpha + pert.epsilon) * (x - pert.x0)
    np.testing.assert_allclose(spec.potential(cfg, x, t), expected, rtol=1e-12)
