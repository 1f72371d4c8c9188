import math

import numpy as np
import pytest

from nhscatter.analysis import (
    REFERENCE_PACKET,
    PacketConfig,
    critical_table,
    sweep_ti_vs_td,
    td_coefficients,
)
from nhscatter.model import ImaginaryOnsite, UnequalHopping
from nhscatter.scattering import amplitudes_closed_form


def test_critical_table():
    rows = critical_table()
    assert len(rows) == 5
    for row in rows:
        assert row.gamma_c == pytest.approx(row.reference, abs=1e-8)
        assert row.zero_threshold == (row.reference == 0.0)
        if row.zero_threshold:
            assert row.first_quadrant_at_1e9 is True
        else:
            assert row.first_quadrant_at_1e9 is None


def test_reduced_sweep_flags_supercritical_points():
    report = sweep_ti_vs_td(ImaginaryOnsite(1.0), [0.2, 1.0, 1.4, 1.6, 2.4])
    assert report.parameter == "gamma1"
    np.testing.assert_array_equal(report.grid, [0.2, 1.0, 1.4, 1.6, 2.4])
    for row in report.rows[:3]:
        assert row.valid and not row.diverged and row.n_growing_poles == 0
        assert row.R_L_td == pytest.approx(row.R_L_ti, rel=0.10)
        assert row.T_L_td == pytest.approx(row.T_L_ti, rel=0.10)
    for row in report.rows[3:]:
        assert not row.valid and row.diverged and row.n_growing_poles == 1


def test_hermitian_point_is_not_diverged():
    (row,) = sweep_ti_vs_td(UnequalHopping(-1.0), [0.0]).rows
    assert row.R_L_ti == 0.0
    assert row.valid and not row.diverged


def test_divergence_onset_near_critical_hopping():
    report = sweep_ti_vs_td(UnequalHopping(-1.0), [1.3, 1.4, 1.5])
    assert [r.diverged for r in report.rows] == [False, False, True]


def test_errors_are_recorded_in_row():
    # at the critical gain the amplitudes diverge at k = pi/2
    packet = PacketConfig(k=np.pi / 2)
    (row,) = sweep_ti_vs_td(ImaginaryOnsite(1.0), [1.5], packet).rows
    assert math.isnan(row.R_L_ti) and math.isnan(row.T_L_ti)
    assert "divergent" in row.error
    assert row.diverged and not row.valid
    with pytest.raises(ValueError):
        sweep_ti_vs_td(ImaginaryOnsite(1.0), [])


def test_threads_do_not_change_results():
    grid = [0.5, 1.1, 1.9]
    serial = sweep_ti_vs_td(ImaginaryOnsite(1.0), grid, threads=1)
    parallel = sweep_ti_vs_td(ImaginaryOnsite(1.0), grid, threads=3)
    assert [r.csv_row() for r in serial.rows] == [r.csv_row() for r in parallel.rows]


def test_stepper_fallback_and_propagator_choice():
    packet = PacketConfig(L=200, j0=-50, sigma=10.0, t_extract=60.0, propagator="stepper")
    R, T = td_coefficients(ImaginaryOnsite(0.5, 0.5), packet)
    c = amplitudes_closed_form(ImaginaryOnsite(0.5, 0.5), packet.k).coefficients()
    assert R == pytest.approx(c.R_L, abs=0.01)
    assert T == pytest.approx(c.T_L, abs=0.02)
    with pytest.raises(ValueError):
        td_coefficients(ImaginaryOnsite(), PacketConfig(propagator="magic"))


@pytest.mark.parametrize("gamma1", [0.2, 0.6, 1.0, 1.2, 1.4])
def test_ti_td_agreement_below_critical(gamma1):
    model = ImaginaryOnsite(1.0, gamma1)
    R, T = td_coefficients(model, REFERENCE_PACKET)
    c = amplitudes_closed_form(model, REFERENCE_PACKET.k).coefficients()
    assert abs(R - c.R_L) / c.R_L <= 0.02
    assert abs(T - c.T_L) / c.T_L <= 0.02
