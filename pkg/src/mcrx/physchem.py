"""Fluidic and electrostatic parameters of the microfluidic bioFET receiver.

Public functions take and return the units used in device datasheets and lab
notebooks (µm, µl/min, M, nF, mV, C); everything is converted to SI
internally.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

# CODATA 2018
VACUUM_PERMITTIVITY = 8.8541878128e-12  # F/m
ELEMENTARY_CHARGE = 1.602176634e-19  # C

UM = 1e-6
NM = 1e-9
NF = 1e-9
UL_PER_MIN = 1e-9 / 60.0  # m^3/s


@dataclass(frozen=True)
class FluidicChannel:
    """Rectangular microfluidic channel and the fluid flowing through it."""

    width_um: float
    height_um: float
    fluid_density: float = 1000.0  # kg/m^3
    viscosity: float = 0.001002  # Pa s
    flow_rate_ul_min: float = 80.0

    def __post_init__(self):
        if not (self.width_um > 0 and self.height_um > 0):
            raise DomainError(
                f"channel dimensions must be positive, got "
                f"{self.width_um} x {self.height_um} um"
            )
        if self.fluid_density <= 0 or self.viscosity <= 0:
            raise DomainError("fluid density and viscosity must be positive")
        if self.flow_rate_ul_min < 0:
            raise DomainError(f"flow rate must be >= 0, got {self.flow_rate_ul_min}")

    @property
    def area_um2(self) -> float:
        return self.width_um * self.height_um

    @property
    def perimeter_um(self) -> float:
        return 2.0 * (self.width_um + self.height_um)


@dataclass(frozen=True)
class ReceiverElectro:
    """Electrostatic stack of the graphene receiver."""

    graphene_area_um2: float = 4.0e3
    gate_electrode_area_um2: float = 7.85e6
    relative_permittivity: float = 80.0
    quantum_capacitance_uF_cm2: float = 2.0
    transconductance_uA_V: float = -28.0

    def __post_init__(self):
        if self.graphene_area_um2 <= 0 or self.gate_electrode_area_um2 <= 0:
            raise DomainError("receiver areas must be positive")
        if self.relative_permittivity <= 1:
            raise DomainError("relative permittivity must exceed 1")
        if self.quantum_capacitance_uF_cm2 <= 0:
            raise DomainError("quantum capacitance density must be positive")

    @property
    def quantum_capacitance_nF(self) -> float:
        # uF/cm^2 -> F/m^2 is x1e-2; um^2 -> m^2 is x1e-12
        farad = self.quantum_capacitance_uF_cm2 * 1e-2 * self.graphene_area_um2 * 1e-12
        return farad / NF


@dataclass(frozen=True)
class Electrolyte:
    ionic_strength_M: float

    def __post_init__(self):
        if not self.ionic_strength_M > 0:
            raise DomainError(
                f"ionic strength must be positive, got {self.ionic_strength_M} M"
            )


@dataclass(frozen=True)
class DnaProbe:
    """Single-stranded DNA standing on the sensor surface."""

    n_bases: int = 18
    base_rise_nm: float = 0.34
    effective_length_fraction: float = 0.5

    def __post_init__(self):
        if self.n_bases < 1:
            raise DomainError("a probe needs at least one base")
        if self.base_rise_nm <= 0:
            raise DomainError("base rise must be positive")
        if not 0 < self.effective_length_fraction <= 1:
            raise DomainError("effective length fraction must lie in (0, 1]")

    @property
    def effective_length_nm(self) -> float:
        """Distance of the lumped charge from the surface."""
        return self.n_bases * self.base_rise_nm * self.effective_length_fraction


def hydraulic_diameter(ch: FluidicChannel) -> float:
    """Hydraulic diameter ``4 A / P`` in µm."""
    return 4.0 * ch.area_um2 / ch.perimeter_um


def linear_velocity(ch: FluidicChannel) -> float:
    """Mean linear flow velocity in µm/s."""
    q = ch.flow_rate_ul_min * UL_PER_MIN
    return q / (ch.area_um2 * UM * UM) / UM


def reynolds_number(ch: FluidicChannel) -> float:
    u = linear_velocity(ch) * UM
    d_h = hydraulic_diameter(ch) * UM
    return ch.fluid_density * u * d_h / ch.viscosity


def debye_length(e: Electrolyte) -> float:
    """Debye length in nm from the aqueous approximation ``0.3 / sqrt(I)``."""
    return 0.3 / math.sqrt(e.ionic_strength_M)


def edl_capacitance(area_um2: float, relative_permittivity: float, debye_nm: float) -> float:
    """Parallel-plate double-layer capacitance in nF."""
    if area_um2 <= 0 or relative_permittivity <= 0 or debye_nm <= 0:
        raise DomainError("area, permittivity and Debye length must be positive")
    farad = area_um2 * UM * UM * relative_permittivity * VACUUM_PERMITTIVITY / (debye_nm * NM)
    return farad / NF


def gate_capacitance(c_graphene_nF: float, c_quantum_nF: float,
                     c_electrode_nF: float | None = None,
                     neglect_electrode: bool = True) -> float:
    """Series combination of the graphene EDL, quantum and gate-electrode capacitances (nF).

    The gate-electrode term is dropped when ``neglect_electrode`` is set or no
    value is supplied; its area is three orders of magnitude larger than the
    graphene channel so its series contribution is negligible.
    """
    caps = [c_graphene_nF, c_quantum_nF]
    if not neglect_electrode and c_electrode_nF is not None:
        caps.append(c_electrode_nF)
    if any(c <= 0 for c in caps):
        raise DomainError(f"capacitances must be positive, got {caps}")
    return 1.0 / sum(1.0 / c for c in caps)


def effective_charge(probe: DnaProbe, debye_nm: float) -> float:
    """Debye-screened charge of one DNA strand, in coulombs."""
    if debye_nm <= 0:
        raise DomainError("Debye length must be positive")
    r = probe.effective_length_nm
    return probe.n_bases * ELEMENTARY_CHARGE * math.exp(-r / debye_nm)


def probe_density(cnp_shift_mV: float, c_gate_nF: float, charge_C: float,
                  area_um2: float) -> float:
    """Areal density of immobilised probes (µm⁻²) from the CNP shift.

    Direct substitution of the reference device numbers gives ~2.4e4 µm⁻²,
    an order of magnitude above the ~2e3 µm⁻² figure often quoted for it;
    the formula is returned as is.
    """
    if charge_C <= 0 or area_um2 <= 0 or c_gate_nF <= 0:
        raise DomainError("charge, gate capacitance and area must be positive")
    return cnp_shift_mV * 1e-3 * c_gate_nF * NF / (charge_C * area_um2)


@dataclass(frozen=True)
class PhyschemReport:
    reynolds: float
    hydraulic_diameter_um: float
    velocity_um_s: float
    debye_nm: float
    debye_sensing_nm: float
    c_graphene_nF: float
    c_quantum_nF: float
    c_gate_nF: float
    c_gate_sensing_nF: float
    probe_charge_C: float
    target_charge_C: float
    probe_density_um2: float

    def lines(self):
        rows = [
            ("Re", self.reynolds, ""),
            ("D_H", self.hydraulic_diameter_um, "um"),
            ("u", self.velocity_um_s, "um/s"),
            ("lambda_D", self.debye_nm, "nm"),
            ("lambda_D_sensing", self.debye_sensing_nm, "nm"),
            ("C_Gr", self.c_graphene_nF, "nF"),
            ("C_Q", self.c_quantum_nF, "nF"),
            ("C_G", self.c_gate_nF, "nF"),
            ("C_G_sensing", self.c_gate_sensing_nF, "nF"),
            ("q_probe", self.probe_charge_C, "C"),
            ("q_target", self.target_charge_C, "C"),
            ("n_probe", self.probe_density_um2, "um^-2"),
        ]
        return [f"{k} = {v:.6g} {u}".rstrip() for k, v, u in rows]


def physchem_report(ch: FluidicChannel, rx: ReceiverElectro, buffer: Electrolyte,
                    sensing_buffer: Electrolyte, probe: DnaProbe,
                    cnp_shift_mV: float, neglect_electrode: bool = True) -> PhyschemReport:
    """Every derived receiver quantity, for the functionalisation and sensing buffers."""
    lam = debye_length(buffer)
    lam_s = debye_length(sensing_buffer)
    c_q = rx.quantum_capacitance_nF

    def gate(lam_nm):
        c_gr = edl_capacitance(rx.graphene_area_um2, rx.relative_permittivity, lam_nm)
        c_pt = edl_capacitance(rx.gate_electrode_area_um2, rx.relative_permittivity, lam_nm)
        return c_gr, gate_capacitance(c_gr, c_q, c_pt, neglect_electrode)

    c_gr, c_g = gate(lam)
    _, c_g_s = gate(lam_s)
    q_probe = effective_charge(probe, lam)
    return PhyschemReport(
        reynolds=reynolds_number(ch),
        hydraulic_diameter_um=hydraulic_diameter(ch),
        velocity_um_s=linear_velocity(ch),
        debye_nm=lam,
        debye_sensing_nm=lam_s,
        c_graphene_nF=c_gr,
        c_quantum_nF=c_q,
        c_gate_nF=c_g,
        c_gate_sensing_nF=c_g_s,
        probe_charge_C=q_probe,
        target_charge_C=effective_charge(probe, lam_s),
        probe_density_um2=probe_density(cnp_shift_mV, c_g, q_probe, rx.graphene_area_um2),
    )
