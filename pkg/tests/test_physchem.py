import math

import pytest
from hypothesis import given, strategies as st

from mcrx.errors import DomainError
from mcrx.physchem import (
    DnaProbe, Electrolyte, FluidicChannel, ReceiverElectro, debye_length,
    edl_capacitance, effective_charge, gate_capacitance, hydraulic_diameter,
    linear_velocity, physchem_report, probe_density, reynolds_number,
)

EPS0 = 8.8541878128e-12
QE = 1.602176634e-19

CHANNEL = FluidicChannel(4000.0, 1500.0, 1000.0, 0.001002, 80.0)

pos = st.floats(min_value=1e-2, max_value=1e5, allow_nan=False)


def test_hydraulic_diameter():
    assert hydraulic_diameter(CHANNEL) == pytest.approx(4 * 6e6 / 11000, rel=1e-14)
    assert hydraulic_diameter(FluidicChannel(250.0, 250.0)) == pytest.approx(250.0)
    assert hydraulic_diameter(FluidicChannel(1.0, 1e9)) == pytest.approx(2.0, rel=1e-8)


def test_linear_velocity():
    assert linear_velocity(CHANNEL) == pytest.approx(222.2222, rel=1e-6)
    assert linear_velocity(FluidicChannel(4000.0, 1500.0, flow_rate_ul_min=0.0)) == 0.0
    doubled = FluidicChannel(4000.0, 1500.0, flow_rate_ul_min=160.0)
    assert linear_velocity(doubled) == pytest.approx(444.4444, rel=1e-6)


def test_reynolds():
    assert reynolds_number(CHANNEL) == pytest.approx(0.4839, abs=1e-3)
    assert reynolds_number(FluidicChannel(4000.0, 1500.0, flow_rate_ul_min=0.0)) == 0.0
    viscous = FluidicChannel(4000.0, 1500.0, 1000.0, 2 * 0.001002, 80.0)
    assert reynolds_number(viscous) == pytest.approx(0.2420, abs=1e-4)


def test_debye_length():
    assert debye_length(Electrolyte(0.150)) == pytest.approx(0.7746, abs=1e-4)
    assert debye_length(Electrolyte(0.0015)) == pytest.approx(7.746, abs=1e-3)
    assert debye_length(Electrolyte(0.09)) == pytest.approx(1.0, rel=1e-15)
    with pytest.raises(DomainError):
        Electrolyte(0.0)


def test_edl_capacitance():
    assert edl_capacitance(4e3, 80, 0.77) == pytest.approx(3.68, abs=5e-3)
    assert edl_capacitance(4e3, 80, 1.54) == pytest.approx(edl_capacitance(4e3, 80, 0.77) / 2)
    oracle = 4e3 * 1e-12 * 80 * EPS0 / 7.75e-9 * 1e9
    assert edl_capacitance(4e3, 80, 7.75) == pytest.approx(oracle, rel=1e-14)
    # the quoted four digits correspond to the unrounded 7.746 nm
    assert oracle == pytest.approx(0.3657, rel=5e-4)
    assert edl_capacitance(4e3, 80, 0.3 / math.sqrt(0.0015)) == pytest.approx(0.3657, abs=1e-4)


def test_gate_capacitance():
    assert gate_capacitance(3.68, 0.08) == pytest.approx(7.83e-2, rel=1e-3)
    assert gate_capacitance(0.3657, 0.08) == pytest.approx(6.58e-2, rel=5e-3)
    assert gate_capacitance(2.0, 2.0, 2.0, neglect_electrode=False) == pytest.approx(2.0 / 3)
    with pytest.raises(DomainError):
        gate_capacitance(0.0, 0.08)


def test_effective_charge():
    probe = DnaProbe(18, 0.34, 0.5)
    assert probe.effective_length_nm == pytest.approx(3.06)
    assert effective_charge(probe, 0.77) == pytest.approx(18 * QE * math.exp(-3.06 / 0.77))
    assert effective_charge(probe, 0.77) == pytest.approx(5.42e-20, rel=5e-3)
    assert effective_charge(probe, 7.75) == pytest.approx(1.943e-18, rel=1e-3)
    assert effective_charge(probe, 1e12) == pytest.approx(18 * QE, rel=1e-9)


def test_probe_density_follows_formula():
    n = probe_density(66.0, 7.83e-2, 5.42e-20, 4e3)
    assert n == pytest.approx(0.066 * 7.83e-11 / 5.42e-20 / 4e3, rel=1e-12)
    assert n == pytest.approx(2.38e4, rel=1e-2)
    assert probe_density(0.0, 7.83e-2, 5.42e-20, 4e3) == 0.0
    assert probe_density(132.0, 7.83e-2, 5.42e-20, 4e3) == pytest.approx(2 * n)


def test_invalid_inputs():
    with pytest.raises(DomainError):
        FluidicChannel(0.0, 1.0)
    with pytest.raises(DomainError):
        FluidicChannel(1.0, 1.0, flow_rate_ul_min=-1.0)
    with pytest.raises(DomainError):
        ReceiverElectro(relative_permittivity=1.0)
    with pytest.raises(DomainError):
        DnaProbe(0)
    with pytest.raises(DomainError):
        DnaProbe(18, 0.34, 1.5)


def test_report_numbers():
    rep = physchem_report(CHANNEL, ReceiverElectro(), Electrolyte(0.15), Electrolyte(0.0015),
                          DnaProbe(), 66.0)
    assert rep.c_gate_nF == pytest.approx(7.83e-2, rel=1e-2)
    assert rep.c_gate_sensing_nF == pytest.approx(6.58e-2, rel=1e-2)
    text = "\n".join(rep.lines())
    assert "Re = 0.483881" in text and "nF" in text


@given(pos, pos, st.floats(min_value=0, max_value=1e4), st.floats(min_value=1.0, max_value=100.0))
def test_reynolds_linear_in_flow(w, h, q, k):
    a = reynolds_number(FluidicChannel(w, h, flow_rate_ul_min=q))
    b = reynolds_number(FluidicChannel(w, h, flow_rate_ul_min=k * q))
    assert b == pytest.approx(k * a, rel=1e-12, abs=1e-300)


@given(st.floats(min_value=1e-5, max_value=1.0), st.floats(min_value=1.0, max_value=100.0))
def test_reynolds_inverse_in_viscosity(mu, k):
    a = reynolds_number(FluidicChannel(4000.0, 1500.0, viscosity=mu))
    b = reynolds_number(FluidicChannel(4000.0, 1500.0, viscosity=k * mu))
    assert b == pytest.approx(a / k, rel=1e-12)


@given(pos, pos, pos)
def test_series_below_every_input(a, b, c):
    assert gate_capacitance(a, b, c, neglect_electrode=False) <= min(a, b, c) * (1 + 1e-15)
    assert gate_capacitance(a, b) <= min(a, b) * (1 + 1e-15)


@given(st.floats(min_value=1e-6, max_value=10.0))
def test_debye_halves_when_ionic_strength_quadruples(i):
    assert debye_length(Electrolyte(4 * i)) == pytest.approx(debye_length(Electrolyte(i)) / 2,
                                                             rel=1e-15)


@given(st.floats(min_value=0.1, max_value=2.0), st.floats(min_value=0.1, max_value=2.0),
       st.floats(min_value=0.1, max_value=20.0), st.floats(min_value=0.1, max_value=20.0))
def test_charge_monotone(f1, f2, l1, l2):
    f1, f2 = min(f1, 1.0), min(f2, 1.0)
    if f1 != f2:
        lo, hi = sorted((f1, f2))
        assert effective_charge(DnaProbe(18, 0.34, hi), 5.0) < effective_charge(
            DnaProbe(18, 0.34, lo), 5.0)
    if l1 != l2:
        lo, hi = sorted((l1, l2))
        p = DnaProbe()
        assert effective_charge(p, lo) < effective_charge(p, hi)


def test_pure():
    args = (CHANNEL, ReceiverElectro(), Electrolyte(0.15), Electrolyte(0.0015), DnaProbe(), 66.0)
    assert physchem_report(*args) == physchem_report(*args)
