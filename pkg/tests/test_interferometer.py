import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ion_ifo import interferometer as I
from ion_ifo.core import HBAR, NM, US, ZN, DomainError, make_config
from ion_ifo.dynamics import PerturbationSpec
from ion_ifo.overlap import ModeOccupation, OverlapResult
from ion_ifo.trajectory import design_alpha_A, sensitivity

S_UNIT = NM * US


def _synthetic(c, s_values, noise=0.0, rng=None):
    p = 0.5 + 0.5 * np.cos(2 * c * s_values / HBAR)
    if noise:
        p = np.clip(p + rng.uniform(-noise, noise, size=p.size), 0.0, 1.0)
    rows = [I.SweepRow(s, pu, 1.0 - pu, 2 * c * s / HBAR, 1.0) for s, pu in zip(s_values, p)]
    return I.SweepTable(tuple(rows))


def _m_grid(c, periods=4.0, n=80):
    s_max = periods * math.pi * HBAR / c
    m_max = s_max / (16 / 35 * 0.5 * US)
    return np.linspace(0.0, m_max, n)


def test_populations_examples():
    assert I.populations(OverlapResult(1 + 0j)) == (1.0, 0.0)
    p_up, p_down = I.populations(OverlapResult(complex(math.cos(math.pi), math.sin(math.pi))))
    assert p_up == pytest.approx(0.0, abs=1e-15) and p_down == pytest.approx(1.0)
    p_up, _ = I.populations(OverlapResult(np.exp(5.852j)))
    assert p_up == pytest.approx(0.5 + 0.5 * math.cos(5.852), rel=1e-15)
    assert p_up == pytest.approx(0.954, abs=1e-3)
    with pytest.raises(DomainError):
        I.populations(OverlapResult(1.01 + 0j))


@given(st.floats(0, 1), st.floats(-10, 10))
def test_populations_sum_to_one(mod, phase):
    p_up, p_down = I.populations(OverlapResult(mod * complex(math.cos(phase), math.sin(phase))))
    assert p_up + p_down == 1.0
    assert 0 <= p_up <= 1


def test_predict_analytic(cfg, traj_a):
    row = I.predict(I.ExperimentSpec(cfg, traj_a, PerturbationSpec(c=10 * ZN)))
    assert row.sensitivity / S_UNIT == pytest.approx(30.857, rel=1e-4)
    assert row.delta_phi == pytest.approx(5.852, abs=1e-3)
    assert row.p_up == pytest.approx(0.954, abs=1e-3)
    assert row.modulus == pytest.approx(1.0, abs=1e-12)
    zero = I.predict(I.ExperimentSpec(cfg, traj_a))
    assert zero.p_up == 1.0 and zero.delta_phi == 0.0


def test_predict_tdse_matches_analytic(cfg, traj_a):
    exp = I.ExperimentSpec(cfg, traj_a, PerturbationSpec(c=10 * ZN))
    analytic = I.predict(exp)
    grid = I.predict(exp, engine="tdse", grid_n=1024, n_steps=40_000)
    assert abs(grid.p_up - analytic.p_up) <= 1e-3
    assert abs(grid.delta_phi - analytic.delta_phi) <= 1e-3


def test_predict_unwraps_large_phase(cfg):
    traj = design_alpha_A(cfg, 500 * NM)
    row = I.predict(I.ExperimentSpec(cfg, traj, PerturbationSpec(c=20 * ZN)))
    assert row.delta_phi == pytest.approx(2 * 20 * ZN * sensitivity(traj) / HBAR, rel=1e-12)
    assert row.delta_phi > 2 * math.pi


def test_predict_crossing_point(cfg, traj_a):
    c = 10 * ZN
    row = I.predict(I.ExperimentSpec(cfg, traj_a, PerturbationSpec(c=c, x0=c / cfg.spring)))
    assert abs(row.delta_phi) < 1e-12 and row.p_up == pytest.approx(1.0)
    with pytest.raises(DomainError):
        I.predict(I.ExperimentSpec(cfg, traj_a, PerturbationSpec(c=c, epsilon=c, x0=NM)))


def test_predict_one_branch_and_errors(cfg, traj_a):
    row = I.predict(I.ExperimentSpec(cfg, traj_a, PerturbationSpec(c=10 * ZN), "one"))
    assert row.delta_phi == pytest.approx(3.026, abs=1e-3)
    with pytest.raises(DomainError):
        I.predict(I.ExperimentSpec(cfg, traj_a), engine="quantum")
    with pytest.raises(DomainError):
        I.ExperimentSpec(cfg, traj_a, scenario="neither")
    assert I.ExperimentSpec.spin_amplitudes[0] ** 2 + I.ExperimentSpec.spin_amplitudes[1] ** 2 == pytest.approx(1)


def test_sweep_zero_force(cfg):
    table = I.sensitivity_sweep(cfg, 0.0, np.linspace(0, 300, 7) * NM)
    assert np.all(table.p_up == 1.0)
    assert len(table) == 7


@pytest.mark.parametrize("c_zn,period", [(10.0, 33.13), (20.0, 16.56)])
def test_sweep_period(cfg, c_zn, period):
    c = c_zn * ZN
    assert math.pi * HBAR / c / S_UNIT == pytest.approx(period, abs=0.01)
    m_values = np.linspace(0, 100 / (16 / 35 * 0.5), 201) * NM  # S from 0 to 100 nm us
    table = I.sensitivity_sweep(cfg, c, m_values)
    s = table.sensitivity / S_UNIT
    assert s[0] == 0.0 and s[-1] == pytest.approx(100.0)
    assert np.all(np.diff(s) > 0)
    # P_up returns to 1 after each period
    for k in (1, 2):
        i = int(np.argmin(np.abs(s - k * period)))
        assert table.p_up[i] > 0.99
    np.testing.assert_allclose(table.p_up, 0.5 + 0.5 * np.cos(2 * c * table.sensitivity / HBAR), atol=1e-12)
    np.testing.assert_allclose(table.p_up + table.column("p_down"), 1.0, atol=1e-12)


def test_sweep_parallel_matches_serial(cfg, monkeypatch):
    m_values = np.linspace(10, 400, 9)[::-1] * NM
    serial = I.sensitivity_sweep(cfg, 7 * ZN, m_values, jobs=1)
    parallel = I.sensitivity_sweep(cfg, 7 * ZN, m_values, jobs=2)
    assert serial.to_csv_text() == parallel.to_csv_text()
    monkeypatch.setenv("ION_IFO_JOBS", "3")
    assert I.resolve_jobs(1) == 3
    monkeypatch.setenv("ION_IFO_JOBS", "many")
    with pytest.raises(DomainError):
        I.resolve_jobs(1)
    monkeypatch.delenv("ION_IFO_JOBS")
    assert I.resolve_jobs(None) == 1
    with pytest.raises(DomainError):
        I.resolve_jobs(0)


def test_sweep_validation(cfg):
    with pytest.raises(DomainError):
        I.sensitivity_sweep(cfg, ZN, [])
    with pytest.raises(DomainError):
        I.sensitivity_sweep(cfg, ZN, [NM], engine="quantum")


def test_sweep_table_validation_and_csv(tmp_path, cfg):
    with pytest.raises(DomainError):
        I.SweepTable((I.SweepRow(0.0, 0.7, 0.4, 0.0, 1.0),))
    with pytest.raises(DomainError):
        I.SweepTable((I.SweepRow(0.0, 1.2, -0.2, 0.0, 1.0),))
    table = I.sensitivity_sweep(cfg, 10 * ZN, np.linspace(0, 200, 25) * NM)
    path = tmp_path / "sweep.csv"
    table.to_csv(path)
    text = path.read_bytes()
    assert text.startswith(b"S_nm_us,P_up,P_down,delta_phi_rad,modulus\n")
    assert b"\r" not in text
    back = I.SweepTable.from_csv(path)
    np.testing.assert_allclose(back.sensitivity, table.sensitivity, rtol=1e-11)
    np.testing.assert_allclose(back.p_up, table.p_up, atol=1e-11)
    assert back.to_csv_text() == table.to_csv_text()
    bad = tmp_path / "bad.csv"
    bad.write_text("S,P\n1,0.5\n")
    with pytest.raises(DomainError):
        I.SweepTable.from_csv(bad)


@pytest.mark.parametrize("c_zn", [2.0, 5.0, 10.0, 20.0, 50.0])
def test_round_trip_noiseless(cfg, c_zn):
    c = c_zn * ZN
    table = I.sensitivity_sweep(cfg, c, _m_grid(c))
    res = I.extract_c(table)
    assert res.c_estimate == pytest.approx(c, rel=1e-3)
    assert res.period_estimate == pytest.approx(math.pi * HBAR / res.c_estimate, rel=1e-15)
    assert res.fit_residual < 1e-6
    doc = res.to_dict()
    assert set(doc) == {"c_zN", "period_nm_us", "residual"}
    assert doc["c_zN"] == pytest.approx(c_zn, rel=1e-3)


def test_round_trip_with_noise():
    c = 10 * ZN
    s_values = np.linspace(0, 4 * math.pi * HBAR / c, 80)
    worst = 0.0
    for seed in range(100):
        table = _synthetic(c, s_values, 0.01, np.random.default_rng(seed))
        worst = max(worst, abs(I.extract_c(table).c_estimate / c - 1))
    assert worst <= 0.02


def test_extraction_refuses_degenerate_input(cfg):
    flat = _synthetic(0.0, np.linspace(0, 100, 40) * S_UNIT)
    with pytest.raises(I.ExtractionError):
        I.extract_c(flat)
    with pytest.raises(I.ExtractionError):
        I.extract_c(I.SweepRow(30 * S_UNIT, 0.9, 0.1, 0.0, 1.0))
    with pytest.raises(I.ExtractionError):
        I.extract_c(_synthetic(10 * ZN, np.linspace(0, 60, 3) * S_UNIT))
    with pytest.raises(I.ExtractionError):
        # less than 1.5 periods of c = 10 zN
        I.extract_c(_synthetic(10 * ZN, np.linspace(0, 40, 40) * S_UNIT))
    with pytest.raises(I.ExtractionError):
        I.extract_c(_synthetic(10 * ZN, np.zeros(30)))


def test_extraction_rejects_noise_table():
    rng = np.random.default_rng(3)
    s_values = np.linspace(0, 150, 60) * S_UNIT
    rows = [I.SweepRow(s, p, 1 - p, 0.0, 1.0) for s, p in zip(s_values, rng.uniform(0, 1, 60))]
    with pytest.raises(I.ExtractionError):
        I.extract_c(I.SweepTable(tuple(rows)))


def test_period_scales_inversely_with_force(cfg):
    forces = np.array([2.0, 5.0, 10.0, 20.0, 50.0]) * ZN
    periods = [I.extract_c(I.sensitivity_sweep(cfg, c, _m_grid(c))).period_estimate for c in forces]
    slope = np.polyfit(np.log(forces), np.log(periods), 1)[0]
    assert slope == pytest.approx(-1.0, abs=0.02)


@settings(max_examples=25, deadline=None)
@given(st.floats(1.0, 80.0), st.floats(2.0, 6.0), st.integers(40, 120))
def test_round_trip_property(c_zn, periods, n):
    c = c_zn * ZN
    s_values = np.linspace(0, periods * math.pi * HBAR / c, n)
    assert I.extract_c(_synthetic(c, s_values)).c_estimate == pytest.approx(c, rel=1e-3)


def test_extract_from_unsorted_table():
    c = 10 * ZN
    s_values = np.linspace(0, 4 * math.pi * HBAR / c, 50)
    rows = list(_synthetic(c, s_values).rows)[::-1]
    assert I.extract_c(I.SweepTable(tuple(rows))).c_estimate == pytest.approx(c, rel=1e-6)


def test_ground_state_default_occupation(cfg, traj_a):
    exp = I.ExperimentSpec(cfg, traj_a, PerturbationSpec(c=10 * ZN, epsilon=5 * ZN))
    assert I.predict(exp) == I.predict(exp, ModeOccupation.fock(0, 4))
    other = make_config(t_final_us=0.37)
    t = design_alpha_A(other, 100 * NM)
    exp = I.ExperimentSpec(other, t, PerturbationSpec(c=10 * ZN, epsilon=20 * ZN))
    assert I.predict(exp).modulus < 1
