"""Command-line front end: exit codes, artifacts, reproducibility."""

import hashlib
import json
from pathlib import Path

import pytest

from purepole.cli import (
    EXIT_BELOW_THRESHOLD,
    EXIT_CONFIG,
    EXIT_OK,
    PRESETS,
    RunConfig,
    run,
)


def _file_hashes(directory: Path) -> dict[str, str]:
    return {
        p.name: hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(directory.iterdir())
        if p.is_file()
    }


class TestPresets:
    def test_all_fourteen_named_cases(self):
        assert len(PRESETS) == 14
        assert PRESETS["o-band-i"] == (710.0, 1310.0, "Z")
        assert PRESETS["c-band-xiv"] == (799.2, 1550.0, "Y")


class TestGvmMapCommand:
    def test_writes_maps_and_legend(self, tmp_path, capsys):
        out = tmp_path / "map"
        code = run([
            "gvm-map",
            "--pump-range-nm", "705:715:5",
            "--signal-range-nm", "1300:1320:10",
            "--signal-axis", "Z",
            "--out-dir", str(out),
        ])
        assert code == EXIT_OK
        assert (out / "gvm_theta_map.csv").exists()
        assert (out / "gvm_lc_map.csv").exists()
        assert (out / "mask_legend.txt").exists()
        assert (out / "run_config.json").exists()
        text = (out / "gvm_theta_map.csv").read_text()
        assert text.startswith("# run_config_digest: ")
        assert "sellmeier: ktp-kato-takaoka-2002" in text

    def test_case_i_cell_value(self, tmp_path):
        out = tmp_path / "map"
        assert run([
            "gvm-map",
            "--pump-range-nm", "710:710:1",
            "--signal-range-nm", "1310:1310:1",
            "--signal-axis", "Z",
            "--out-dir", str(out),
        ]) == EXIT_OK
        row = (out / "gvm_theta_map.csv").read_text().strip().splitlines()[-1].split(",")
        assert float(row[3]) == pytest.approx(26.0, abs=2.0)

    def test_empty_range_is_config_error(self, tmp_path, capsys):
        code = run([
            "gvm-map",
            "--pump-range-nm", "720:700:5",
            "--signal-range-nm", "1300:1320:10",
            "--out-dir", str(tmp_path / "x"),
        ])
        assert code == EXIT_CONFIG
        assert "pump_range_nm" in capsys.readouterr().err

    def test_missing_ranges_is_config_error(self, tmp_path, capsys):
        assert run(["gvm-map", "--out-dir", str(tmp_path)]) == EXIT_CONFIG

    def test_sellmeier_file_override(self, tmp_path):
        from purepole import KTP_KATO_2002

        custom = tmp_path / "custom.txt"
        KTP_KATO_2002.to_file(custom)
        out = tmp_path / "map"
        assert run([
            "gvm-map",
            "--pump-range-nm", "710:710:1",
            "--signal-range-nm", "1310:1310:1",
            "--signal-axis", "Z",
            "--sellmeier", str(custom),
            "--out-dir", str(out),
        ]) == EXIT_OK
        assert str(custom) in (out / "gvm_theta_map.csv").read_text()

    def test_sellmeier_unknown_name_exit_2(self, tmp_path, capsys):
        code = run([
            "gvm-map",
            "--pump-range-nm", "710:710:1",
            "--signal-range-nm", "1310:1310:1",
            "--sellmeier", "no-such-set",
            "--out-dir", str(tmp_path),
        ])
        assert code == EXIT_CONFIG
        assert "sellmeier" in capsys.readouterr().err

    def test_reproducible_across_out_dirs(self, tmp_path):
        args = [
            "gvm-map",
            "--pump-range-nm", "705:715:5",
            "--signal-range-nm", "1300:1320:10",
            "--signal-axis", "Z",
        ]
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert run(args + ["--out-dir", str(out_a)]) == EXIT_OK
        assert run(args + ["--out-dir", str(out_b)]) == EXIT_OK
        for name in ("gvm_theta_map.csv", "gvm_lc_map.csv", "mask_legend.txt"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


class TestDesignCommand:
    def test_pp_scheme_row_and_artifacts(self, tmp_path, capsys):
        out = tmp_path / "pp"
        code = run([
            "design", "--preset", "o-band-i", "--scheme", "pp",
            "--pump-bw-nm", "1.71", "--out-dir", str(out),
        ])
        assert code == EXIT_OK
        row = capsys.readouterr().out
        assert "P_PP" in row and "P_opt" in row
        for name in (
            "design_result.json", "design_summary.txt", "poling.txt",
            "jsa_abs.csv", "jsa.bin", "schmidt.csv", "run_config.json",
        ):
            assert (out / name).exists(), name
        data = json.loads((out / "design_result.json").read_text())
        assert data["purity"] == pytest.approx(0.8301, abs=0.03)
        assert data["pp_purity"] == data["purity"]
        assert data["theta_deg"] == pytest.approx(26.0, abs=2.0)
        assert data["l_c_um"] == pytest.approx(18.86, rel=0.05)
        assert data["structure"]["kind"] == "uniform"
        assert len(data["structure"]["signs"]) == 265

    def test_unknown_preset_exit_2(self, tmp_path, capsys):
        assert run([
            "design", "--preset", "o-band-ix", "--out-dir", str(tmp_path),
        ]) == EXIT_CONFIG

    def test_missing_wavelengths_exit_2(self, tmp_path, capsys):
        code = run(["design", "--out-dir", str(tmp_path)])
        assert code == EXIT_CONFIG
        assert "pump_nm" in capsys.readouterr().err

    def test_below_threshold_exit_3_still_writes(self, tmp_path, capsys):
        out = tmp_path / "cl"
        code = run([
            "design", "--preset", "o-band-i", "--scheme", "cl-scl",
            "--beta-ladder", "1", "--purity-threshold", "0.99999",
            "--out-dir", str(out),
        ])
        assert code == EXIT_BELOW_THRESHOLD
        data = json.loads((out / "design_result.json").read_text())
        assert data["below_threshold"] is True
        assert data["purity"] > 0.99

    def test_persisted_config_reruns_byte_identical(self, tmp_path):
        out = tmp_path / "run"
        args = [
            "design", "--preset", "o-band-i", "--scheme", "pp",
            "--pump-bw-nm", "1.71", "--out-dir", str(out),
        ]
        assert run(args) == EXIT_OK
        first = _file_hashes(out)
        assert run(["design", "--config", str(out / "run_config.json")]) == EXIT_OK
        assert _file_hashes(out) == first

    def test_key_value_config_file(self, tmp_path):
        out_flags = tmp_path / "flags"
        out_file = tmp_path / "file"
        assert run([
            "design", "--preset", "o-band-i", "--scheme", "pp",
            "--pump-bw-nm", "1.71", "--out-dir", str(out_flags),
        ]) == EXIT_OK
        config = tmp_path / "run.cfg"
        config.write_text(
            "command = design\n"
            "preset = o-band-i\n"
            "scheme = pp\n"
            "pump_bandwidth_nm = 1.71\n"
            f"out_dir = {out_file}\n"
        )
        assert run(["design", "--config", str(config)]) == EXIT_OK
        for name in ("design_result.json", "poling.txt", "jsa.bin", "schmidt.csv"):
            assert (out_flags / name).read_bytes() == (out_file / name).read_bytes()

    def test_mqpm_scheme(self, tmp_path):
        out = tmp_path / "mqpm"
        code = run([
            "design", "--preset", "o-band-i", "--scheme", "mqpm",
            "--pump-bw-nm", "3.0", "--out-dir", str(out),
        ])
        assert code == EXIT_OK
        data = json.loads((out / "design_result.json").read_text())
        assert data["scheme"] == "mqpm"
        assert data["alpha"] == 5.0
        assert data["purity"] > 0.85

    def test_dc_scheme_small_budget(self, tmp_path):
        out = tmp_path / "dc"
        code = run([
            "design", "--preset", "o-band-i", "--scheme", "dc",
            "--pump-bw-nm", "3.0", "--pso-particles", "2",
            "--pso-iterations", "1", "--seed", "5", "--out-dir", str(out),
        ])
        assert code in (EXIT_OK, EXIT_BELOW_THRESHOLD)
        data = json.loads((out / "design_result.json").read_text())
        assert data["scheme"] == "dc"
        assert data["structure"]["kind"] == "duty-cycle"
        assert len(data["structure"]["fractions"]) == 132


class TestSweepRangeCommand:
    def test_pp_point_matches_design_purity(self, tmp_path):
        design_out = tmp_path / "design"
        assert run([
            "design", "--preset", "o-band-i", "--scheme", "pp",
            "--pump-bw-nm", "1.71", "--out-dir", str(design_out),
        ]) == EXIT_OK
        design_purity = json.loads((design_out / "design_result.json").read_text())["purity"]

        sweep_out = tmp_path / "sweep"
        assert run([
            "sweep-range", "--preset", "o-band-i", "--schemes", "pp",
            "--r-list", "10", "--pump-bw-nm", "1.71", "--out-dir", str(sweep_out),
        ]) == EXIT_OK
        line = [
            ln for ln in (sweep_out / "purity_vs_range_pp.csv").read_text().splitlines()
            if ln and not ln.startswith(("#", "R_over_dw"))
        ][0]
        assert float(line.split(",")[1]) == pytest.approx(design_purity, abs=1e-9)

    def test_optimized_scheme_requires_design_artifact(self, tmp_path, capsys):
        code = run([
            "sweep-range", "--preset", "o-band-i", "--schemes", "cl-scl",
            "--r-list", "10,20", "--out-dir", str(tmp_path / "x"),
        ])
        assert code == EXIT_CONFIG
        assert "design" in capsys.readouterr().err

    def test_sweep_from_design_artifact(self, tmp_path):
        design_out = tmp_path / "design"
        assert run([
            "design", "--preset", "o-band-i", "--scheme", "cl-scl",
            "--beta-ladder", "1", "--out-dir", str(design_out),
        ]) in (EXIT_OK, EXIT_BELOW_THRESHOLD)
        sweep_out = tmp_path / "sweep"
        assert run([
            "sweep-range", "--preset", "o-band-i", "--schemes", "pp,cl-scl",
            "--r-list", "5,10", "--design-dir", str(design_out),
            "--pump-bw-nm", "1.71", "--out-dir", str(sweep_out),
        ]) == EXIT_OK
        assert (sweep_out / "purity_vs_range_pp.csv").exists()
        assert (sweep_out / "purity_vs_range_cl-scl.csv").exists()

    def test_missing_schemes_exit_2(self, tmp_path):
        assert run([
            "sweep-range", "--preset", "o-band-i", "--r-list", "10",
            "--out-dir", str(tmp_path),
        ]) == EXIT_CONFIG


class TestRunConfig:
    def test_digest_ignores_execution_fields(self):
        a = RunConfig(command="design", preset="o-band-i", out_dir="/a", threads=1)
        b = RunConfig(command="design", preset="o-band-i", out_dir="/b", threads=8)
        assert a.digest() == b.digest()

    def test_digest_tracks_physics_fields(self):
        a = RunConfig(command="design", preset="o-band-i")
        b = RunConfig(command="design", preset="o-band-ii")
        assert a.digest() != b.digest()

    def test_json_round_trip(self):
        cfg = RunConfig(
            command="sweep-range", preset="o-band-i", schemes=("pp",),
            r_list=(10.0, 20.0), seed=3,
        )
        clone = RunConfig.from_dict(json.loads(cfg.to_json()))
        assert clone == cfg

    def test_unknown_key_rejected(self):
        with pytest.raises(Exception, match="unknown config key"):
            RunConfig.from_dict({"command": "design", "bogus": 1})
