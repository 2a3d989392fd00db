"""Command-line interface: output contracts, resolved-config echoes,
determinism from a warm cache, and the documented exit codes."""

import json
from pathlib import Path

import numpy as np
import pytest

from surfatom.cli import main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
BASE_CFG = str(CONFIGS / "paper.json")


def _csv_rows(text):
    lines = [ln for ln in text.strip().splitlines() if ln]
    header = lines[0].split(",")
    return header, [ln.split(",") for ln in lines[1:]]


@pytest.fixture(scope="module")
def small_cfg(tmp_path_factory):
    """Tiny bound-to-bound pipeline: every level is in the warm test cache."""
    cfg = {
        "atom": {"preset": "cesium-silica"},
        "field": {"wavelength_nm": 852.0, "saturation_s": 1e-3,
                  "refractive_index_n1": 1.4525},
        "basis": {"nu_a": [410, 420], "nu_b": [290, 293]},
        "mixture": {"kind": "flat-bound", "nu_min": 290, "nu_max": 293},
        "detuning": {"min_MHz": -40.0, "max_MHz": 10.0, "step_MHz": 0.5},
    }
    path = tmp_path_factory.mktemp("cfg") / "small.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def test_validity_prints_landmarks_and_echo(capsys):
    assert main(["validity", "--config", BASE_CFG]) == 0
    out, err = capsys.readouterr()
    header, rows = _csv_rows(out)
    assert header == ["quantity", "value"]
    vals = {name: val for name, val in rows}
    assert float(vals["r_c_nm"]) == pytest.approx(411.26284541583493, rel=1e-11)
    assert float(vals["reflection_R"]) == pytest.approx(0.18450560652395515,
                                                        rel=1e-11)
    assert float(vals["V_min_ground_THz"]) == pytest.approx(-159.7094295686,
                                                            rel=1e-9)
    assert float(vals["V_min_excited_THz"]) == pytest.approx(-316.3149459770,
                                                             rel=1e-9)
    assert float(vals["x_min_ground_nm"]) == pytest.approx(0.189986952106,
                                                           rel=1e-9)
    assert int(vals["l_z"]) == 10
    resolved = json.loads(err)  # stdout mode: echo goes to stderr
    for key in ("atom", "field", "grid", "basis", "profile", "mixture",
                "detuning", "spectrum", "lz", "threads", "output"):
        assert key in resolved
    # echo keeps the user's n1 (re-derives R on re-run) rather than both
    assert resolved["field"]["refractive_index_n1"] == pytest.approx(1.4525)
    assert "reflection_R" not in resolved["field"]


def test_validity_lz_flag_scales_centrifugal_radius(capsys):
    assert main(["validity", "--config", BASE_CFG, "--lz", "5"]) == 0
    out, _ = capsys.readouterr()
    _, rows = _csv_rows(out)
    vals = {name: val for name, val in rows}
    expected = 411.26284541583493 * (10 ** 2 - 0.25) / (5 ** 2 - 0.25)
    assert float(vals["r_c_nm"]) == pytest.approx(expected, rel=1e-10)
    assert int(vals["l_z"]) == 5


def test_solve_levels_file_output_and_determinism(tmp_path, disk_cache, capsys):
    out = tmp_path / "levels.csv"
    argv = ["solve-levels", "--state", "ground", "--nu", "285..285",
            "--config", BASE_CFG, "--cache-dir", str(disk_cache.root),
            "--out", str(out)]
    assert main(argv) == 0
    assert "wrote" in capsys.readouterr().out
    header, rows = _csv_rows(out.read_text())
    assert header == ["nu", "energy_MHz", "x_outer_nm"]
    assert len(rows) == 1 and rows[0][0] == "285"
    assert float(rows[0][1]) == pytest.approx(-54.3138955311, rel=1e-8)
    echo = json.loads(out.with_suffix(".resolved.json").read_text())
    assert echo["cache_dir"] == str(disk_cache.root)
    first = out.read_bytes()
    assert main(argv) == 0
    capsys.readouterr()
    assert out.read_bytes() == first  # warm rerun is byte-identical


def test_solve_levels_default_excited_range(disk_cache, capsys):
    assert main(["solve-levels", "--state", "excited",
                 "--cache-dir", str(disk_cache.root)]) == 0
    out, _ = capsys.readouterr()
    _, rows = _csv_rows(out)
    assert len(rows) == 45 and rows[0][0] == "385" and rows[-1][0] == "429"
    energies = np.array([float(r[1]) for r in rows])
    assert np.all(np.diff(energies) > 0)


def test_resolved_echo_is_rerunnable(tmp_path, disk_cache, capsys):
    a = tmp_path / "a.csv"
    assert main(["solve-levels", "--state", "ground", "--nu", "290..293",
                 "--config", BASE_CFG, "--cache-dir", str(disk_cache.root),
                 "--out", str(a)]) == 0
    b = tmp_path / "b.csv"
    assert main(["solve-levels", "--state", "ground", "--nu", "290..293",
                 "--config", str(a.with_suffix(".resolved.json")),
                 "--out", str(b)]) == 0
    capsys.readouterr()
    assert b.read_bytes() == a.read_bytes()


def test_fc_matrix_small_basis(tmp_path, disk_cache, small_cfg, capsys):
    out = tmp_path / "fc.csv"
    assert main(["fc-matrix", "--config", small_cfg,
                 "--cache-dir", str(disk_cache.root), "--out", str(out)]) == 0
    capsys.readouterr()
    header, rows = _csv_rows(out.read_text())
    assert header == ["nu_a", "nu_b", "Re_F", "Im_F", "absF2"]
    assert len(rows) == 11 * 4
    absf2 = np.array([float(r[4]) for r in rows])
    assert np.all(absf2 <= 1.0 + 1e-9)
    f = np.array([float(r[2]) + 1j * float(r[3]) for r in rows])
    assert np.allclose(np.abs(f) ** 2, absf2, rtol=1e-9)


def test_level_rates_under_default_profile(disk_cache, capsys):
    assert main(["level-rates", "--cache-dir", str(disk_cache.root)]) == 0
    out, _ = capsys.readouterr()
    header, rows = _csv_rows(out)
    assert header == ["nu_a", "gamma_a_MHz", "gamma_channel_MHz"]
    assert len(rows) == 45
    total = np.array([float(r[1]) for r in rows])
    chan = np.array([float(r[2]) for r in rows])
    assert np.all(total >= 5.25)  # never below the free-space rate
    assert np.all(chan < total)


@pytest.mark.filterwarnings("ignore:spectrum does not decay below 5%")
def test_spectrum_writes_csv_and_sidecar(tmp_path, disk_cache, small_cfg,
                                         capsys):
    out = tmp_path / "spec.csv"
    argv = ["spectrum", "--config", small_cfg,
            "--cache-dir", str(disk_cache.root), "--out", str(out)]
    assert main(argv) == 0
    stdout = capsys.readouterr().out
    assert "sidecar=" in stdout and "delta_peak_MHz=" in stdout
    header, rows = _csv_rows(out.read_text())
    assert header == ["delta_MHz", "Gamma_Hz"]
    assert len(rows) == 101  # -40..10 MHz at 0.5 MHz steps
    side = json.loads(out.with_suffix(".json").read_text())
    assert side["provenance"]["mixture_kind"] == "flat-bound"
    assert side["resolved_config"]["basis"]["nu_a"] == [410, 420]
    assert isinstance(side["peak_at_boundary"], bool)
    csv_first, side_first = out.read_bytes(), out.with_suffix(".json").read_bytes()
    assert main(argv) == 0
    capsys.readouterr()
    assert out.read_bytes() == csv_first
    assert out.with_suffix(".json").read_bytes() == side_first


def test_dynamics_check_reports_worst_error(capsys):
    assert main(["dynamics-check"]) == 0
    out, err = capsys.readouterr()
    header, rows = _csv_rows(out)
    assert header == ["case", "level", "rel_error"]
    assert [r[0] for r in rows] == ["two-level resonant", "two-level detuned",
                                    "2x2 toy", "2x2 toy"]
    assert max(float(r[2]) for r in rows) < 1e-2
    assert "worst rel_error=" in err


def test_config_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"nonsense": 1}))
    assert main(["validity", "--config", str(bad)]) == 2
    assert capsys.readouterr().err.startswith("error:")
    both = tmp_path / "both.json"
    both.write_text(json.dumps(
        {"field": {"reflection_R": 0.2, "refractive_index_n1": 1.45}}))
    assert main(["validity", "--config", str(both)]) == 2
    assert main(["solve-levels", "--state", "ground", "--nu", "oops"]) == 2
    assert main(["solve-levels", "--state", "ground", "--nu", "9..3"]) == 2
    capsys.readouterr()


def test_capacity_overflow_exits_3(disk_cache, capsys):
    rc = main(["solve-levels", "--state", "excited", "--nu", "5000..5001",
               "--cache-dir", str(disk_cache.root)])
    assert rc == 3
    assert capsys.readouterr().err.startswith("numerical error:")


def test_cache_corruption_exits_4_then_heals(tmp_path, capsys):
    croot = tmp_path / "cache"
    argv = ["solve-levels", "--state", "ground", "--nu", "0..0",
            "--cache-dir", str(croot), "--out", str(tmp_path / "l.csv")]
    assert main(argv) == 0
    blob = next(croot.glob("*/*.f64"))
    raw = bytearray(blob.read_bytes())
    raw[64] ^= 0xFF
    blob.write_bytes(bytes(raw))
    assert main(argv) == 4
    assert "cache error:" in capsys.readouterr().err
    assert main(argv) == 0  # corrupt entry was dropped; rerun re-solves
    capsys.readouterr()


def test_version_and_missing_subcommand(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "surfatom" in capsys.readouterr().out
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2
    capsys.readouterr()
