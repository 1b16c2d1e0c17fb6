"""Receiver response to a finite-length concentration pulse.

The bound-receptor count follows a transport-limited Langmuir model whose
closed-form solution is expressed through the Lambert W function.  Mapped to
current with the per-molecule transduction constant ``Q``, the response is::

    assoc (t_a <= t <= t_d):
        dI = dI_eq * (1 - W0[a * exp(a - b (t - t_a))] / a)
    dissoc (t > t_d):
        dI = -g Q W0[-(dI_d / (g Q)) * exp((-k_on dI_d / Q - kT k_off (t - t_d)) / (k_on g))]

with ``a``, ``b``, ``g`` the transport-adjusted parameters returned by
:func:`alpha_star`, :func:`beta_star` and :func:`gamma_star`, and
``dI_d = dI(t_d)`` taken from the association branch.

As ``k_T_star`` grows the model reduces to the pure reaction-limited traces
of :mod:`mcrx.kinetics`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError, ModelParameterError
from .kinetics import BindingKinetics
from .lambertw import lambert_w0, wright_omega
from .physchem import UM, FluidicChannel, linear_velocity

AVOGADRO = 6.02214076e23
LEVEQUE_AVERAGE = 0.8075  # mean Sherwood prefactor of the Leveque solution

__all__ = [
    "PulseModelParams", "PulseResponse", "alpha_star", "beta_star", "gamma_star",
    "pulse_response", "simulate_pulse", "transport_parameter", "steepest_descent_time",
]


@dataclass(frozen=True)
class PulseModelParams:
    kinetics: BindingKinetics
    delta_I_eq: float  # µA, signed
    Q: float  # A per bound molecule, signed
    c_avg: float  # M
    k_T_star: float  # M^-1 s^-1 (molecules delivered per second per molar)
    t_a: float = 0.0
    t_d: float = 30.0

    def __post_init__(self):
        if not self.t_d > self.t_a:
            raise DomainError(f"t_d ({self.t_d}) must be after t_a ({self.t_a})")
        if not self.c_avg > 0:
            raise DomainError("c_avg must be positive")
        if not self.k_T_star > 0:
            raise DomainError("k_T_star must be positive")
        if self.Q == 0 or self.delta_I_eq == 0 or (self.delta_I_eq > 0) != (self.Q > 0):
            raise DomainError("delta_I_eq and Q must be non-zero and share a sign")

    @property
    def n_eq(self) -> float:
        """Bound receptors at equilibrium."""
        return self.delta_I_eq * 1e-6 / self.Q

    @property
    def pulse_length(self) -> float:
        return self.t_d - self.t_a

    def shifted(self, t_a: float, t_d: float | None = None) -> "PulseModelParams":
        if t_d is None:
            t_d = t_a + self.pulse_length
        return replace(self, t_a=t_a, t_d=t_d)


def alpha_star(p: PulseModelParams) -> float:
    k = p.kinetics
    denom = k.k_off * p.n_eq + p.k_T_star * p.c_avg
    if denom == 0:
        raise DomainError("alpha* denominator vanishes")
    return k.k_on * p.c_avg * p.n_eq / denom


def beta_star(p: PulseModelParams) -> float:
    k = p.kinetics
    denom = 1.0 + k.k_off * p.n_eq / (p.k_T_star * p.c_avg)
    if denom == 0:
        raise DomainError("beta* denominator vanishes")
    return (k.k_on * p.c_avg + k.k_off) / denom


def gamma_star(p: PulseModelParams) -> float:
    k = p.kinetics
    n_max = (p.c_avg + k.K_D) * p.n_eq / p.c_avg
    return n_max + p.k_T_star / k.k_on


def _association(tau, delta_I_eq, a, b):
    y = wright_omega(math.log(a) + a - b * tau)
    out = delta_I_eq * (1.0 - y / a)
    # W0(a e^a) = a exactly
    return np.where(tau == 0, 0.0, out)


def _dissociation(s, p: PulseModelParams, dI_d, g):
    k = p.kinetics
    n0 = dI_d * 1e-6 / p.Q
    ratio = n0 / g
    if not ratio < 1.0:
        # -r exp(-r) is always inside the W0 domain, but W0 only inverts it for r < 1
        raise ModelParameterError(
            f"dissociation branch needs N(t_d)/gamma* < 1, got {ratio:.6g}; "
            f"check k_T_star={p.k_T_star:g}, c_avg={p.c_avg:g}"
        )
    exponent = -ratio - p.k_T_star * k.k_off * s / (k.k_on * g)
    arg = -ratio * np.exp(exponent)
    try:
        w = lambert_w0(arg)
    except DomainError as exc:
        raise ModelParameterError(
            f"dissociation branch left the Lambert W domain: N0/gamma* = {ratio:.6g} "
            f"(must stay below 1); check k_T_star={p.k_T_star:g}, c_avg={p.c_avg:g}"
        ) from exc
    return -g * p.Q * w * 1e6


def pulse_response(t, p: PulseModelParams):
    """Current change (µA) at time(s) ``t`` for a pulse present on ``[t_a, t_d]``."""
    t = np.asarray(t, dtype=float)
    a, b, g = alpha_star(p), beta_star(p), gamma_star(p)
    if not a > 0:
        raise ModelParameterError(f"alpha* must be positive, got {a}")
    tp = p.pulse_length
    out = np.zeros_like(t)
    assoc = (t >= p.t_a) & (t <= p.t_d)
    if assoc.any():
        out[assoc] = _association(t[assoc] - p.t_a, p.delta_I_eq, a, b)
    later = t > p.t_d
    if later.any():
        dI_d = float(_association(np.array([tp]), p.delta_I_eq, a, b)[0])
        out[later] = _dissociation(t[later] - p.t_d, p, dI_d, g)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class PulseResponse:
    times: np.ndarray
    delta_I: np.ndarray  # µA
    normalized: np.ndarray


def simulate_pulse(p: PulseModelParams, t_end: float, dt: float = 1.0,
                   baseline_uA: float = 31.25) -> PulseResponse:
    n = int(math.floor(t_end / dt + 1e-9)) + 1
    times = dt * np.arange(n)
    d_i = pulse_response(times, p)
    return PulseResponse(times, d_i, (baseline_uA + d_i) / baseline_uA)


def steepest_descent_time(times, values) -> float:
    """Time of the most negative slope of a sampled response."""
    slope = np.gradient(np.asarray(values, dtype=float), np.asarray(times, dtype=float))
    return float(np.asarray(times)[int(np.argmin(slope))])


def transport_parameter(mode: str = "direct", value: float | None = None, *,
                        channel: FluidicChannel | None = None,
                        diffusivity_um2_s: float | None = None,
                        sensor_length_um: float | None = None,
                        sensor_area_um2: float | None = None) -> float:
    """Transport rate parameter ``k_T*`` in M⁻¹s⁻¹.

    ``direct`` returns a configured value unchanged.  ``estimate`` is an
    approximation: the mean Lévêque mass-transfer coefficient of a sensor of
    length ``L`` under wall shear ``6 u / h``::

        k_m = 0.8075 * (D^2 * shear / L)^(1/3)

    converted to molecules delivered per second per molar of bulk
    concentration, ``k_m * A * N_A * 1000``.  ``h`` is the smaller channel
    dimension.
    """
    if mode == "direct":
        if value is None or not value > 0:
            raise DomainError("direct k_T* mode needs a positive value")
        return float(value)
    if mode != "estimate":
        raise DomainError(f"unknown k_T* mode {mode!r}")
    if channel is None or diffusivity_um2_s is None or sensor_length_um is None \
            or sensor_area_um2 is None:
        raise DomainError("estimate mode needs channel, diffusivity, sensor length and area")
    u = linear_velocity(channel) * UM
    if u <= 0:
        raise DomainError("k_T* estimate requires a non-zero flow")
    if diffusivity_um2_s <= 0 or sensor_length_um <= 0 or sensor_area_um2 <= 0:
        raise DomainError("diffusivity and sensor geometry must be positive")
    gap = min(channel.width_um, channel.height_um) * UM
    shear = 6.0 * u / gap
    d = diffusivity_um2_s * UM * UM
    k_m = LEVEQUE_AVERAGE * (d * d * shear / (sensor_length_um * UM)) ** (1.0 / 3.0)
    return k_m * sensor_area_um2 * UM * UM * AVOGADRO * 1e3
