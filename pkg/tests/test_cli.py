import csv
import io
import itertools
import math
import subprocess
import sys

import numpy as np
import pytest

from passive_pt.cli import ConfigError, RunConfig, load_config_file, main, parse_grid, parse_initial_state


def run_cli(*args):
    out = io.StringIO()
    code = main(list(args), stdout=out)
    return code, out.getvalue()


def table(text):
    """First CSV block of ``text`` as a list of dicts of floats (comment lines skipped)."""
    lines = []
    for line in text.splitlines():
        if line.startswith("#"):
            if lines:
                break
            continue
        if not line:
            break
        lines.append(line)
    return [{k: (float(v) if v != "" else math.nan) for k, v in row.items()} for row in csv.DictReader(lines)]


def footer(text, key):
    for line in text.splitlines():
        if line.startswith("# " + key):
            return line.split("=", 1)[1].strip()
    raise KeyError(key)


def test_parse_grid():
    assert parse_grid("5") == [5.0]
    assert parse_grid("0:2:3") == [0.0, 1.0, 2.0]
    for bad in ("0:2:1", "2:0:5", "a:b:c", "1:2", "-1"):
        with pytest.raises(ConfigError):
            parse_grid(bad)


def test_parse_initial_state():
    assert parse_initial_state("KET0").data[0, 0] == 1
    assert parse_initial_state("ket1").data[1, 1] == 1
    custom = parse_initial_state("CUSTOM:1,0,0,1").data
    assert np.allclose(custom, 0.5 * np.array([[1, -1j], [1j, 1]]))
    for bad in ("CUSTOM:0,0,0,0", "CUSTOM:1,2", "KET2"):
        with pytest.raises(ConfigError):
            parse_initial_state(bad)


def test_config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# comment\nomega_khz = 20  # inline\n\nseed = 9\n")
    assert load_config_file(path) == {"omega_khz": 20.0, "seed": 9}
    path.write_text("seed = 1\nbogus = 3\n")
    with pytest.raises(ConfigError, match=":2: unknown key 'bogus'"):
        load_config_file(path)


def test_flags_override_file_and_header_embeds_config(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("omega_khz = 20\ngamma_khz = 0:40:5\n")
    code, text = run_cli("spectrum", "--config", str(path), "--omega-khz", "10")
    assert code == 0
    assert "# omega_khz = 10.0" in text and "# gamma_khz = 0:40:5" in text
    rows = table(text)
    assert [r["gamma_over_omega"] for r in rows] == [0, 1, 2, 3, 4]
    for field in RunConfig.__dataclass_fields__:
        assert f"# {field} = " in text


def test_exit_codes(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("nonsense = 1\n")
    assert run_cli("spectrum", "--config", str(bad))[0] == 2
    assert run_cli("spectrum", "--gamma-khz", "1:0:4")[0] == 2
    assert run_cli("evolve", "--levels", "3", "--picture", "pt")[0] == 2
    assert run_cli("evolve", "--gamma-khz", "1000", "--t-max-us", "1000", "--picture", "pt")[0] == 3
    assert run_cli("evolve", "--output", str(tmp_path / "missing" / "x.csv"))[0] == 4
    with pytest.raises(SystemExit) as exc:
        run_cli("spectrum", "--levels", "4")
    assert exc.value.code == 2


def test_spectrum_command():
    code, text = run_cli("spectrum", "--gamma-khz", "0:64:101")
    assert code == 0
    rows = table(text)
    assert len(rows) == 101
    ep = [r for r in rows if r["gamma_over_omega"] == 1.0]
    assert len(ep) == 1 and ep[0]["re_e1"] == 0 and ep[0]["re_e2"] == 0
    assert rows[0]["im_e1"] == 0 and rows[0]["im_e2"] == 0
    for r in rows:
        if r["gamma_over_omega"] < 1:
            assert r["re_e1"] != 0 and r["im_e1"] == 0
        if r["gamma_over_omega"] > 1:
            assert r["re_e1"] == 0 and r["im_e1"] != 0
        e = [complex(r["re_eff1"], r["im_eff1"]), complex(r["re_eff2"], r["im_eff2"])]
        pairs = sorted((-1j * (a - b.conjugate()) for a, b in itertools.product(e, e)), key=lambda z: (z.real, z.imag))
        lam = sorted((complex(r[f"re_l{i}"], r[f"im_l{i}"]) for i in range(1, 5)), key=lambda z: (z.real, z.imag))
        assert np.allclose(pairs, lam, atol=1e-7)


def test_evolve_command(tmp_path):
    out = tmp_path / "traj.csv"
    assert run_cli("evolve", "--output", str(out))[0] == 0
    lossy, pt = out.read_text(), (tmp_path / "traj_pt.csv").read_text()
    header = "t_us,rho00,rho11,rho22,re_rho01,im_rho01,trace,sigma_z_norm,sigma_y_norm"
    assert header in lossy.splitlines() and header in pt.splitlines()
    rows = table(lossy)
    assert len(rows) == 512 and rows[-1]["t_us"] == 50
    assert math.isnan(rows[0]["rho22"])
    assert float(footer(lossy, "max_abs_diff")) < 1e-7
    code, text = run_cli("evolve", "--gamma-khz", "47", "--levels", "3", "--picture", "lossy")
    assert code == 0 and float(footer(text, "max_abs_diff")) < 1e-7
    rows = table(text)
    assert abs(rows[-1]["rho00"] + rows[-1]["rho11"] + rows[-1]["rho22"] - 1) < 1e-8


def test_order_params_command():
    code, text = run_cli("order-params")
    assert code == 0
    rows = table(text)
    assert len(rows) == 40
    peak = max(rows, key=lambda r: r["sigma_y_numeric"])
    assert peak["gamma_over_omega"] == pytest.approx(1.0)
    assert peak["sigma_y_numeric"] == pytest.approx(1.0, abs=1e-3)
    for r in rows:
        if r["gamma_over_omega"] < 1:
            assert abs(r["sigma_z_numeric"]) < 1e-3
        if r["gamma_over_omega"] > 1:
            assert r["sigma_z_numeric"] == pytest.approx(r["sigma_z_analytic"], abs=1e-3)
            assert r["sigma_y_numeric"] == pytest.approx(r["sigma_y_analytic"], abs=1e-3)


def test_turning_point_command():
    code, text = run_cli("turning-point", "--t-periods", "1,2,5")
    assert code == 0
    rows = table(text)
    assert rows[0]["rho00_t1T"] == pytest.approx(1.0)
    gmins = [float(footer(text, f"gamma_min_over_omega_t{k}T")) for k in (1, 2, 5)]
    assert gmins[0] < gmins[1] < gmins[2] < 1


def test_experiment_command(tmp_path):
    out = tmp_path / "shots.csv"
    assert run_cli("experiment", "--n-shots", "0", "--output", str(out))[0] == 0
    shots = out.read_text()
    assert "t_us,n_shots,n_dark,p_hat,std_err" in shots.splitlines()
    assert "prng=numpy-philox4x64-10" in shots
    gamma_hat = float(footer(shots, "gamma_hat_khz").split()[0])
    assert gamma_hat == pytest.approx(10.0, rel=1e-4)
    pt = table((tmp_path / "shots_pt.csv").read_text())
    assert len(pt) == 20 and pt[0]["rho00_pt"] == pytest.approx(1.0)


def test_commands_are_byte_deterministic(tmp_path):
    for cmd in ("spectrum", "evolve", "order-params", "turning-point", "experiment"):
        first = run_cli(cmd, "--t-periods", "1,2")
        second = run_cli(cmd, "--t-periods", "1,2")
        assert first[0] == 0 and first == second


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "passive_pt", "spectrum", "--gamma-khz", "0:64:3"],
                          capture_output=True, text=True, check=True)
    assert len(table(proc.stdout)) == 3
