import json
import re

import numpy as np
import pytest

from mcrx import io
from mcrx.cli import main
from mcrx.kinetics import FIXTURES, binding_trace, isotherm_response
from mcrx.trace import Trace
from mcrx.txrx import moving_mean


def _value(text, key):
    return float(re.search(rf"^{re.escape(key)} = (\S+)", text, re.M).group(1))


def test_physchem_defaults(capsys):
    assert main(["physchem"]) == 0
    out = capsys.readouterr().out
    assert _value(out, "Re") == pytest.approx(0.4839, abs=1e-3)
    assert _value(out, "u") == pytest.approx(222.2, abs=0.5)
    for key in ("D_H", "lambda_D", "C_Gr", "C_Q", "C_G", "q_target", "n_probe"):
        assert re.search(rf"^{key} = ", out, re.M)


def test_physchem_flow_scaling(capsys):
    main(["physchem", "--set", "channel.flow_rate_uL_per_min=0"])
    assert _value(capsys.readouterr().out, "Re") == 0.0
    main(["physchem"])
    base = _value(capsys.readouterr().out, "Re")
    main(["physchem", "--set", "channel.flow_rate_uL_per_min=160"])
    assert _value(capsys.readouterr().out, "Re") == pytest.approx(2 * base, rel=1e-5)


def test_config_errors_exit_2(capsys, tmp_path):
    assert main(["physchem", "--set", "channel.bogus=1"]) == 2
    assert "[channel] bogus" in capsys.readouterr().err
    bad = tmp_path / "c.ini"
    bad.write_text("[tx]\nbit_interval_s = 60\n")
    assert main(["physchem", "--config", str(bad)]) == 2
    assert "[channel]" in capsys.readouterr().err
    assert main(["simulate", "--out", str(tmp_path / "o"), "--set", "tx.bits=01x"]) == 2
    assert "[tx] bits" in capsys.readouterr().err


def test_env_config(capsys, tmp_path, monkeypatch):
    path = tmp_path / "env.ini"
    path.write_text("[channel]\nwidth_um = 4000\nheight_um = 1500\nflow_rate_uL_per_min = 0\n")
    monkeypatch.setenv("MCRX_CONFIG", str(path))
    assert main(["physchem"]) == 2
    assert "[electrolyte]" in capsys.readouterr().err


def test_simulate_outputs_and_determinism(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--out", str(a)]) == 0
    assert main(["simulate", "--out", str(b)]) == 0
    report = capsys.readouterr().out
    names = sorted(p.name for p in a.iterdir())
    for want in ("clean.csv", "noisy.csv", "filtered.csv", "sent_bits.txt",
                 "decision_samples.csv", "decoded_raw.txt", "decoded_filtered.txt",
                 "report.txt", "manifest.json"):
        assert want in names
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name
    manifest = json.loads((a / "manifest.json").read_text())
    assert manifest["seeds"] == {"bits": 1, "noise": 1}
    assert len(manifest["artifacts"]) == len(names) - 1
    assert "ber_filtered" in report


def test_simulate_all_zero_bits_is_flat(tmp_path):
    out = tmp_path / "z"
    assert main(["simulate", "--out", str(out), "--set", "tx.bits=00000",
                 "--set", "noise.profile=quiet"]) == 0
    norm = io.read_trace(out / "clean_normalized.csv")
    assert np.all(norm.samples == 1.0)
    assert (out / "sent_bits.txt").read_text() == "00000\n"
    assert (out / "decoded_raw.txt").read_text() == "00000\n"


def test_simulate_unwritable(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["simulate", "--out", str(blocker / "sub")]) == 3
    assert "file" in capsys.readouterr().err


def test_detect_and_ber_agree_with_simulate(tmp_path, capsys):
    out = tmp_path / "s"
    main(["simulate", "--out", str(out)])
    capsys.readouterr()
    assert main(["detect", str(out / "noisy.csv"), "--out", str(tmp_path / "d.txt")]) == 0
    assert (tmp_path / "d.txt").read_text() == (out / "decoded_raw.txt").read_text()
    capsys.readouterr()
    assert main(["detect", str(out / "noisy.csv"), "--filter"]) == 0
    filt = capsys.readouterr().out.strip()
    assert filt + "\n" == (out / "decoded_filtered.txt").read_text()
    assert main(["ber", str(out / "sent_bits.txt"), str(out / "sent_bits.txt")]) == 0
    assert _value(capsys.readouterr().out, "ber") == 0.0
    (tmp_path / "short.txt").write_text("01\n")
    assert main(["ber", str(out / "sent_bits.txt"), str(tmp_path / "short.txt")]) == 3


def test_detect_short_trace_lists_instants(tmp_path, capsys):
    io.write_trace(tmp_path / "t.csv", Trace(0.0, 1.0, np.ones(100)))
    assert main(["detect", str(tmp_path / "t.csv")]) == 3
    assert "decision instants" in capsys.readouterr().err


def test_plotdata(tmp_path):
    out = tmp_path / "s"
    main(["simulate", "--out", str(out)])
    src = out / "noisy.csv"
    assert main(["plotdata", str(src), "--out", str(tmp_path / "p.csv")]) == 0
    assert (tmp_path / "p.csv").read_bytes() == src.read_bytes()
    main(["plotdata", str(src), "--out", str(tmp_path / "d.csv"), "--downsample", "10"])
    n_src = len(src.read_text().splitlines()) - 1
    n_out = len((tmp_path / "d.csv").read_text().splitlines()) - 1
    assert abs(n_out - n_src / 10) <= 1
    main(["plotdata", str(src), "--out", str(tmp_path / "f.csv"), "--filter"])
    ref = moving_mean(io.read_trace(src), 21.0).samples
    np.testing.assert_array_equal(io.read_trace(tmp_path / "f.csv").samples, ref)
    main(["plotdata", str(src), "--out", str(tmp_path / "n.csv"), "--normalize"])
    norm = io.read_trace(tmp_path / "n.csv")
    assert norm.normalized
    assert norm.samples[0] == pytest.approx(1.0, abs=1e-3)
    assert main(["plotdata", str(src), "--out", str(tmp_path / "x.csv"),
                 "--downsample", "0"]) == 3


def test_fit_isotherm(tmp_path, capsys):
    c = np.array([50, 100, 200, 500, 1000, 2000, 5000, 10000.0])
    data = tmp_path / "iso.csv"
    io.write_columns(data, io.SENSING_HEADER, [c, isotherm_response(c, 730.0, 1.393)])
    assert main(["fit-isotherm", str(data), "--out", str(tmp_path / "r")]) == 0
    out = capsys.readouterr().out
    assert _value(out, "K_D") == pytest.approx(730.0, rel=1e-2)
    resid = (tmp_path / "r" / "residuals.csv").read_text().splitlines()
    assert resid[0] == "concentration_nM,residual_uA" and len(resid) == 9


def test_fit_kinetics_tdna(tmp_path, capsys):
    kin = FIXTURES["tdna"]
    t = np.arange(0.0, 3001.0)
    rng = np.random.default_rng(2)
    y = 31.25 + binding_trace(t, 1e-6, kin, -0.805, 1800.0) + 0.008 * rng.standard_normal(t.size)
    io.write_trace(tmp_path / "k.csv", Trace(0.0, 1.0, y))
    assert main(["fit-kinetics", str(tmp_path / "k.csv"), "--baseline-uA", "31.25",
                 "--out", str(tmp_path / "r")]) == 0
    out = capsys.readouterr().out
    assert _value(out, "k_on") == pytest.approx(kin.k_on, rel=0.05)
    assert _value(out, "k_off") == pytest.approx(kin.k_off, rel=0.05)
    resid = io.read_table(tmp_path / "r" / "residuals.csv", (("time_s", "residual_uA"),))[1]
    assert resid.shape == (3001, 2)
    assert abs(resid[:, 1].std() - 0.008) < 0.001


def test_fit_kinetics_pulse_model(tmp_path, capsys):
    assert main(["pulse", "--out", str(tmp_path / "p.csv"), "--t-end", "400"]) == 0
    t, d = io.read_table(tmp_path / "p.csv", (("time_s", "delta_I_uA"),))[1].T
    io.write_trace(tmp_path / "k.csv", Trace(0.0, 1.0, d))
    assert main(["fit-kinetics", str(tmp_path / "k.csv"), "--model", "pulse-kT"]) == 0
    assert _value(capsys.readouterr().out, "k_T_star") == pytest.approx(1.3e10, rel=1e-6)


def test_fit_errors(tmp_path, capsys):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    assert main(["fit-kinetics", str(empty)]) == 3
    assert "line 1" in capsys.readouterr().err
    bad = tmp_path / "bad.csv"
    bad.write_text("time_s,current_uA\n0,1\n1,zz\n")
    assert main(["fit-kinetics", str(bad)]) == 3
    assert "line 3" in capsys.readouterr().err
    tiny = tmp_path / "tiny.csv"
    io.write_trace(tiny, Trace(0.0, 1.0, np.zeros(3)))
    assert main(["fit-kinetics", str(tiny)]) == 3


def test_fit_nonconvergence_exit_4(tmp_path, capsys):
    c = np.array([50, 100, 200, 500, 1000, 2000, 5000, 10000.0])
    data = tmp_path / "iso.csv"
    io.write_columns(data, io.SENSING_HEADER, [c, isotherm_response(c, 730.0, 1.393)])
    assert main(["fit-isotherm", str(data), "--set", "fit.max_iterations=1"]) == 4
    assert "did not converge" in capsys.readouterr().err
