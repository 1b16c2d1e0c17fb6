import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mcrx import config as cfgmod
from mcrx import io
from mcrx.errors import ConfigError, DataError
from mcrx.kinetics import SensingPoint
from mcrx.trace import Trace


def test_default_loads_and_builds_everything():
    cfg = cfgmod.reference_config()
    assert cfgmod.channel_from(cfg).flow_rate_ul_min == 80.0
    assert cfgmod.kinetics_from(cfg).label == "tdna"
    assert cfgmod.tx_from(cfg).bit_interval == 120.0
    assert cfgmod.noise_from(cfg).gaussian_sigma == 0.005
    p = cfgmod.pulse_params_from(cfg)
    assert p.Q == pytest.approx(-8.29e-13, rel=1e-2)
    assert cfgmod.filter_from(cfg) == (21.0, -10.0)


def test_round_trip_identity():
    cfg = cfgmod.reference_config()
    again = cfgmod.loads(cfg.dumps())
    assert again == cfg
    assert again.dumps() == cfg.dumps()
    assert again.hash() == cfg.hash()


key_values = st.sampled_from([
    ("channel.flow_rate_uL_per_min", st.floats(0.0, 1e4)),
    ("tx.bit_interval_s", st.floats(30.0, 1e3)),
    ("tx.seed", st.integers(-2**40, 2**40)),
    ("noise.gaussian_sigma_uA", st.floats(0.0, 1.0)),
    ("receiver.neglect_gate_electrode", st.booleans()),
    ("kinetics.name", st.sampled_from(["tdna", "ntdna1", "ntdna2"])),
    ("pulse.k_T_per_M_s", st.floats(1.0, 1e20)),
])


@settings(max_examples=60)
@given(st.data())
def test_round_trip_with_overrides(data):
    cfg = cfgmod.reference_config()
    pairs = []
    for _ in range(data.draw(st.integers(1, 4))):
        key, strat = data.draw(key_values)
        v = data.draw(strat)
        text = str(v).lower() if isinstance(v, bool) else v if isinstance(v, str) else repr(v)
        pairs.append(f"{key}={text}")
    mod = cfg.with_overrides(pairs)
    assert cfgmod.loads(mod.dumps()) == mod
    assert cfgmod.loads(mod.dumps()).hash() == mod.hash()


def test_override_changes_hash():
    cfg = cfgmod.reference_config()
    mod = cfg.with_overrides(["tx.bit_interval_s=60"])
    assert mod.get("tx", "bit_interval_s") == 60.0
    assert mod.hash() != cfg.hash()


@pytest.mark.parametrize("pair, needle", [
    ("channel.bogus=1", "[channel] bogus"),
    ("nosuch.key=1", "[nosuch]"),
    ("channel.width_um=-3", "[channel] width_um"),
    ("channel.width_um=abc", "[channel] width_um"),
    ("channel.width_um=inf", "[channel] width_um"),
    ("kinetics.name=rna", "[kinetics] name"),
    ("receiver.neglect_gate_electrode=maybe", "neglect_gate_electrode"),
    ("tx.n_bits=2.5", "[tx] n_bits"),
    ("widthonly", "section.key=value"),
])
def test_invalid_overrides_name_the_key(pair, needle):
    with pytest.raises(ConfigError) as exc:
        cfgmod.reference_config().with_overrides([pair])
    assert needle in str(exc.value)


def test_missing_required_key_and_section():
    with pytest.raises(ConfigError, match=r"missing key \[channel\] width_um"):
        cfgmod.loads("[channel]\nheight_um = 1\nflow_rate_uL_per_min = 1\n")
    cfg = cfgmod.loads("[tx]\nbit_interval_s = 60\n")
    with pytest.raises(ConfigError, match=r"\[channel\]"):
        cfgmod.channel_from(cfg)
    with pytest.raises(ConfigError):
        cfgmod.loads("not an ini file")


def test_custom_kinetics_and_noise():
    cfg = cfgmod.reference_config().with_overrides(["kinetics.name=custom"])
    with pytest.raises(ConfigError, match="k_on_per_M_s"):
        cfgmod.kinetics_from(cfg)
    cfg = cfg.with_overrides(["kinetics.k_on_per_M_s=1000", "kinetics.k_off_per_s=0.001"])
    assert cfgmod.kinetics_from(cfg).K_D == pytest.approx(1e-6)
    noisy = cfgmod.reference_config().with_overrides(["noise.profile=custom"])
    with pytest.raises(ConfigError, match="gaussian_sigma_uA"):
        cfgmod.noise_from(noisy)
    quiet = cfgmod.reference_config().with_overrides(["noise.profile=quiet"])
    assert cfgmod.noise_from(quiet).gaussian_sigma == 0.0


def test_estimate_mode_and_domain_errors_become_config_errors():
    cfg = cfgmod.reference_config().with_overrides(["pulse.k_T_mode=estimate"])
    assert 1e12 < cfgmod.k_t_from(cfg) < 1e14
    bad = cfgmod.reference_config().with_overrides(["tx.pulse_length_s=500"])
    with pytest.raises(ConfigError, match="pulse length"):
        cfgmod.tx_from(bad)


def test_env_var_default(tmp_path, monkeypatch):
    alt = cfgmod.reference_config().with_overrides(["tx.seed=42"])
    path = tmp_path / "alt.ini"
    path.write_text(alt.dumps())
    monkeypatch.setenv("MCRX_CONFIG", str(path))
    assert cfgmod.load_default().get("tx", "seed") == 42
    monkeypatch.delenv("MCRX_CONFIG")
    assert cfgmod.load_default().get("tx", "seed") == 1
    with pytest.raises(ConfigError, match="nope.ini"):
        cfgmod.load(tmp_path / "nope.ini")


# ------------------------------------------------------------------ io

def test_trace_round_trip_exact(tmp_path):
    rng = np.random.default_rng(0)
    tr = Trace(0.0, 0.5, 31.25 + rng.standard_normal(50))
    p = io.write_trace(tmp_path / "a.csv", tr)
    back = io.read_trace(p)
    assert back.dt == 0.5
    np.testing.assert_array_equal(back.samples, tr.samples)
    assert p.read_text().startswith("time_s,current_uA\n")
    io.write_trace(tmp_path / "b.csv", back)
    assert (tmp_path / "b.csv").read_bytes() == p.read_bytes()


def test_normalized_header(tmp_path):
    tr = Trace(0.0, 1.0, np.ones(3), baseline=2.0, normalized=True)
    back = io.read_trace(io.write_trace(tmp_path / "n.csv", tr))
    assert back.normalized


@pytest.mark.parametrize("body, line", [
    ("", "line 1"),
    ("time,value\n0,1\n", "line 1"),
    ("time_s,current_uA\n0,1\n1,oops\n", "line 3"),
    ("time_s,current_uA\n0,1\n1,2,3\n", "line 3"),
    ("time_s,current_uA\n0,1\n1,2\n5,3\n", "line 4"),
    ("time_s,current_uA\n0,1\n1,nan\n", "line 3"),
    ("time_s,current_uA\n", "no data rows"),
])
def test_malformed_traces(tmp_path, body, line):
    p = tmp_path / "bad.csv"
    p.write_text(body)
    with pytest.raises(DataError) as exc:
        io.read_trace(p)
    assert line in str(exc.value)
    assert "bad.csv" in str(exc.value)


def test_missing_file(tmp_path):
    with pytest.raises(DataError, match="missing.csv"):
        io.read_trace(tmp_path / "missing.csv")


def test_bits_and_sensing_points(tmp_path):
    p = io.write_bits(tmp_path / "b.txt", [0, 1, 1, 0])
    assert p.read_text() == "0110\n"
    assert list(io.read_bits(p)) == [0, 1, 1, 0]
    (tmp_path / "x.txt").write_text("01a1\n")
    with pytest.raises(DataError, match="column 3"):
        io.read_bits(tmp_path / "x.txt")
    (tmp_path / "e.txt").write_text("")
    with pytest.raises(DataError, match="empty"):
        io.read_bits(tmp_path / "e.txt")
    pts = [SensingPoint(50e-9, 0.1), SensingPoint(1e-6, 0.7)]
    back = io.read_sensing_points(io.write_sensing_points(tmp_path / "s.csv", pts))
    assert back[1].delta_I_plateau == 0.7
    assert back[0].concentration == pytest.approx(50e-9)


def test_manifest(tmp_path):
    a = io.write_bits(tmp_path / "a.txt", [1])
    m = io.write_manifest(tmp_path / "m.json", "abc", {"bits": 1}, [a])
    doc = json.loads(m.read_text())
    assert doc["config_sha256"] == "abc"
    assert doc["artifacts"] == [{"file": "a.txt", "sha256": io.sha256_file(a)}]
