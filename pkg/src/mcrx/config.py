"""Experiment configuration: an INI document whose key names carry their units.

Every key is declared in :data:`SCHEMA`; unknown sections or keys are
rejected.  Sections are optional at load time and each command checks for
the ones it needs via :meth:`Config.require`.
"""
from __future__ import annotations

import configparser
import hashlib
import math
import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigError, DomainError
from .kinetics import BindingKinetics, Transduction, get_fixture, transduction_constant
from .physchem import (DnaProbe, Electrolyte, FluidicChannel, ReceiverElectro,
                       debye_length, edl_capacitance, effective_charge, gate_capacitance)
from .pulse import PulseModelParams, transport_parameter
from .txrx import NOISE_PROFILES, NoiseConfig, TxConfig, filter_lag, generate_bits

CONFIG_ENV = "MCRX_CONFIG"
_REQUIRED = object()


@dataclass(frozen=True)
class Field:
    kind: type
    default: object = _REQUIRED
    check: str = ""  # "pos", "nonneg" or ""
    choices: tuple = ()


def _f(check="", default=_REQUIRED):
    return Field(float, default, check)


SCHEMA = {
    "channel": {
        "width_um": _f("pos"),
        "height_um": _f("pos"),
        "fluid_density_kg_per_m3": _f("pos", 1000.0),
        "viscosity_Pa_s": _f("pos", 0.001002),
        "flow_rate_uL_per_min": _f("nonneg"),
        "diffusivity_um2_per_s": _f("pos", 100.0),
        "sensor_length_um": _f("pos", 100.0),
    },
    "electrolyte": {
        "ionic_strength_M": _f("pos"),
        "sensing_ionic_strength_M": _f("pos"),
    },
    "receiver": {
        "graphene_area_um2": _f("pos"),
        "gate_electrode_area_um2": _f("pos"),
        "relative_permittivity": _f("pos"),
        "quantum_capacitance_uF_per_cm2": _f("pos"),
        "transconductance_uA_per_V": _f(),
        "neglect_gate_electrode": Field(bool, True),
        "cnp_shift_mV": _f("nonneg"),
        "baseline_current_uA": _f("pos", 31.25),
        "probe_bases": Field(int, 18, "pos"),
        "base_rise_nm": _f("pos", 0.34),
        "effective_length_fraction": _f("pos", 0.5),
    },
    "kinetics": {
        "name": Field(str, "tdna", choices=("tdna", "ntdna1", "ntdna2", "custom")),
        "k_on_per_M_s": _f("pos", None),
        "k_off_per_s": _f("pos", None),
    },
    "pulse": {
        "delta_I_eq_uA": _f(),
        "delta_I_sat_uA": _f("", 1.393),
        "concentration_nM": _f("pos", 1000.0),
        "c_avg_scale": _f("pos", 1.0),
        "k_T_mode": Field(str, "direct", choices=("direct", "estimate")),
        "k_T_per_M_s": _f("pos", None),
        "t_a_s": _f("nonneg", 0.0),
        "t_d_s": _f("pos", 30.0),
    },
    "tx": {
        "n_bits": Field(int, 20, "pos"),
        "bit_interval_s": _f("pos"),
        "pulse_length_s": _f("pos", 30.0),
        "t_transmit_s": _f("nonneg", 60.0),
        "t_delay_s": _f("nonneg", 55.0),
        "seed": Field(int, 1),
        # explicit bit pattern such as 0110; replaces the seeded generator
        "bits": Field(str, None),
        "grid_dt_s": _f("pos", 1.0),
        "tail_s": _f("nonneg", 120.0),
        "decision_offset_s": _f("", 0.0),
        "cap_at_saturation": Field(bool, False),
    },
    "noise": {
        "profile": Field(str, "custom", choices=tuple(NOISE_PROFILES) + ("custom",)),
        "gaussian_sigma_uA": _f("nonneg", None),
        "drift_uA_per_s": _f("", None),
        "seed": Field(int, 0),
    },
    "filter": {
        "window_s": _f("pos", 21.0),
        "decision_offset_s": _f("", None),
    },
    "fit": {
        "association_start_s": _f("", 0.0),
        "association_end_s": _f("pos", 1800.0),
        "concentration_nM": _f("pos", 1000.0),
        "dissociation_weight": _f("nonneg", 1.0),
        "max_iterations": Field(int, 200, "pos"),
    },
}


def _parse_value(section, key, field, raw):
    where = f"[{section}] {key}"
    raw = raw.strip()
    if field.kind is bool:
        low = raw.lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"{where}: expected a boolean, got {raw!r}")
    if field.kind is str:
        if field.choices and raw not in field.choices:
            raise ConfigError(f"{where}: {raw!r} is not one of {', '.join(field.choices)}")
        return raw
    try:
        val = field.kind(raw)
    except ValueError:
        raise ConfigError(f"{where}: expected {field.kind.__name__}, got {raw!r}") from None
    if field.kind is float and not math.isfinite(val):
        raise ConfigError(f"{where}: must be finite, got {raw}")
    if field.check == "pos" and not val > 0:
        raise ConfigError(f"{where}: must be positive, got {raw}")
    if field.check == "nonneg" and not val >= 0:
        raise ConfigError(f"{where}: must be non-negative, got {raw}")
    return val


def _format_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


class Config:
    """Typed, validated sections of an experiment description."""

    def __init__(self, sections: dict, source: str = "<memory>"):
        self.sections = sections
        self.source = source

    def __contains__(self, section):
        return section in self.sections

    def __eq__(self, other):
        return isinstance(other, Config) and self.sections == other.sections

    def require(self, *names):
        for name in names:
            if name not in self.sections:
                raise ConfigError(f"{self.source}: missing section [{name}]")

    def get(self, section, key):
        self.require(section)
        return self.sections[section][key]

    def with_overrides(self, pairs) -> "Config":
        """Copy with ``section.key=value`` assignments applied."""
        raw = {s: {k: _format_value(v) for k, v in kv.items() if v is not None}
               for s, kv in self.sections.items()}
        for item in pairs:
            if "=" not in item or "." not in item.split("=", 1)[0]:
                raise ConfigError(f"override {item!r} must look like section.key=value")
            lhs, value = item.split("=", 1)
            section, key = lhs.strip().split(".", 1)
            raw.setdefault(section, {})[key] = value
        return _from_raw(raw, self.source)

    def dumps(self) -> str:
        out = []
        for section in SCHEMA:
            if section not in self.sections:
                continue
            out.append(f"[{section}]")
            for key in SCHEMA[section]:
                v = self.sections[section].get(key)
                if v is not None:
                    out.append(f"{key} = {_format_value(v)}")
            out.append("")
        return "\n".join(out)

    def hash(self) -> str:
        return hashlib.sha256(self.dumps().encode("utf-8")).hexdigest()


def _from_raw(raw: dict, source: str) -> Config:
    sections = {}
    for section, items in raw.items():
        if section not in SCHEMA:
            raise ConfigError(f"{source}: unknown section [{section}]")
        fields = SCHEMA[section]
        typed = {}
        for key, value in items.items():
            if key not in fields:
                raise ConfigError(f"{source}: unknown key [{section}] {key}")
            typed[key] = _parse_value(section, key, fields[key], value)
        for key, field in fields.items():
            if key in typed:
                continue
            if field.default is _REQUIRED:
                raise ConfigError(f"{source}: missing key [{section}] {key}")
            typed[key] = field.default
        sections[section] = typed
    return Config(sections, source)


def loads(text: str, source: str = "<string>") -> Config:
    parser = configparser.ConfigParser(interpolation=None, default_section="__none__")
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    raw = {s: dict(parser.items(s)) for s in parser.sections()}
    return _from_raw(raw, source)


def load(path) -> Config:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return loads(text, str(path))


def reference_config_text() -> str:
    return resources.files("mcrx").joinpath("data/reference.ini").read_text(encoding="utf-8")


def reference_config() -> Config:
    return loads(reference_config_text(), "reference.ini")


def load_default(path=None) -> Config:
    """Explicit path, else ``$MCRX_CONFIG``, else the bundled reference config."""
    if path is None:
        path = os.environ.get(CONFIG_ENV)
    if path:
        return load(path)
    return reference_config()


# ----------------------------------------------------- object builders

def _wrap(fn):
    def inner(cfg, *args, **kw):
        try:
            return fn(cfg, *args, **kw)
        except DomainError as exc:
            raise ConfigError(f"{cfg.source}: {exc}") from None
    inner.__name__ = fn.__name__
    inner.__doc__ = fn.__doc__
    return inner


@_wrap
def channel_from(cfg: Config) -> FluidicChannel:
    cfg.require("channel")
    c = cfg.sections["channel"]
    return FluidicChannel(c["width_um"], c["height_um"], c["fluid_density_kg_per_m3"],
                          c["viscosity_Pa_s"], c["flow_rate_uL_per_min"])


@_wrap
def receiver_from(cfg: Config) -> ReceiverElectro:
    cfg.require("receiver")
    r = cfg.sections["receiver"]
    return ReceiverElectro(r["graphene_area_um2"], r["gate_electrode_area_um2"],
                           r["relative_permittivity"], r["quantum_capacitance_uF_per_cm2"],
                           r["transconductance_uA_per_V"])


@_wrap
def probe_from(cfg: Config) -> DnaProbe:
    cfg.require("receiver")
    r = cfg.sections["receiver"]
    return DnaProbe(r["probe_bases"], r["base_rise_nm"], r["effective_length_fraction"])


@_wrap
def electrolytes_from(cfg: Config):
    cfg.require("electrolyte")
    e = cfg.sections["electrolyte"]
    return Electrolyte(e["ionic_strength_M"]), Electrolyte(e["sensing_ionic_strength_M"])


@_wrap
def kinetics_from(cfg: Config) -> BindingKinetics:
    cfg.require("kinetics")
    k = cfg.sections["kinetics"]
    if k["name"] == "custom":
        if k["k_on_per_M_s"] is None or k["k_off_per_s"] is None:
            raise ConfigError(
                f"{cfg.source}: [kinetics] custom needs k_on_per_M_s and k_off_per_s"
            )
        return BindingKinetics(k["k_on_per_M_s"], k["k_off_per_s"], "custom")
    return get_fixture(k["name"])


def transduction_from(cfg: Config) -> float:
    """Signed current change per bound target (A) in the sensing buffer."""
    cfg.require("receiver", "electrolyte")
    rx = receiver_from(cfg)
    _, sensing = electrolytes_from(cfg)
    lam = debye_length(sensing)
    c_gr = edl_capacitance(rx.graphene_area_um2, rx.relative_permittivity, lam)
    c_pt = edl_capacitance(rx.gate_electrode_area_um2, rx.relative_permittivity, lam)
    neglect = cfg.sections["receiver"]["neglect_gate_electrode"]
    c_g = gate_capacitance(c_gr, rx.quantum_capacitance_nF, c_pt, neglect)
    q = effective_charge(probe_from(cfg), lam)
    return transduction_constant(Transduction(rx.transconductance_uA_V, q, c_g))


@_wrap
def k_t_from(cfg: Config) -> float:
    cfg.require("pulse")
    p = cfg.sections["pulse"]
    if p["k_T_mode"] == "direct":
        if p["k_T_per_M_s"] is None:
            raise ConfigError(f"{cfg.source}: [pulse] k_T_per_M_s is required in direct mode")
        return transport_parameter("direct", p["k_T_per_M_s"])
    cfg.require("channel", "receiver")
    ch = cfg.sections["channel"]
    return transport_parameter(
        "estimate", channel=channel_from(cfg),
        diffusivity_um2_s=ch["diffusivity_um2_per_s"],
        sensor_length_um=ch["sensor_length_um"],
        sensor_area_um2=cfg.sections["receiver"]["graphene_area_um2"],
    )


@_wrap
def pulse_params_from(cfg: Config) -> PulseModelParams:
    cfg.require("pulse")
    p = cfg.sections["pulse"]
    c_avg = p["concentration_nM"] * 1e-9 * p["c_avg_scale"]
    return PulseModelParams(
        kinetics=kinetics_from(cfg), delta_I_eq=p["delta_I_eq_uA"],
        Q=transduction_from(cfg), c_avg=c_avg, k_T_star=k_t_from(cfg),
        t_a=p["t_a_s"], t_d=p["t_d_s"],
    )


@_wrap
def tx_from(cfg: Config) -> TxConfig:
    cfg.require("tx", "pulse")
    t = cfg.sections["tx"]
    cap = abs(cfg.sections["pulse"]["delta_I_sat_uA"]) if t["cap_at_saturation"] else None
    n_bits = len(_explicit_bits(cfg)) if t["bits"] is not None else t["n_bits"]
    return TxConfig(
        n_bits=n_bits, bit_interval=t["bit_interval_s"],
        pulse_length=t["pulse_length_s"],
        concentration=cfg.sections["pulse"]["concentration_nM"] * 1e-9,
        t_transmit=t["t_transmit_s"], seed=t["seed"], delay=t["t_delay_s"],
        tail=t["tail_s"], saturation_cap=cap, decision_offset=t["decision_offset_s"],
    )


def _explicit_bits(cfg: Config):
    text = cfg.sections["tx"]["bits"]
    if not text or any(ch not in "01" for ch in text):
        raise ConfigError(f"{cfg.source}: [tx] bits must be a string of 0 and 1, got {text!r}")
    return np.array([int(ch) for ch in text], dtype=np.int8)


def bits_from(cfg: Config):
    """Transmitted bits: the explicit ``[tx] bits`` pattern, else the seeded generator."""
    cfg.require("tx")
    if cfg.sections["tx"]["bits"] is not None:
        return _explicit_bits(cfg)
    tx = tx_from(cfg)
    return generate_bits(tx.seed, tx.n_bits)


@_wrap
def noise_from(cfg: Config) -> NoiseConfig:
    cfg.require("noise")
    n = cfg.sections["noise"]
    if n["profile"] == "custom":
        if n["gaussian_sigma_uA"] is None:
            raise ConfigError(f"{cfg.source}: [noise] gaussian_sigma_uA is required "
                              "for a custom profile")
        base = NoiseConfig()
    else:
        base = NOISE_PROFILES[n["profile"]]
    sigma = base.gaussian_sigma if n["gaussian_sigma_uA"] is None else n["gaussian_sigma_uA"]
    drift = base.drift_rate if n["drift_uA_per_s"] is None else n["drift_uA_per_s"]
    return NoiseConfig(sigma, drift, n["seed"])


def filter_from(cfg: Config, grid_dt: float = 1.0):
    """(window, decision offset) for the filtered decision path."""
    cfg.require("filter")
    f = cfg.sections["filter"]
    offset = f["decision_offset_s"]
    if offset is None:
        offset = -filter_lag(f["window_s"], grid_dt)
    return f["window_s"], offset
