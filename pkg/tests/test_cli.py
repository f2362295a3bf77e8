"""Tests for the command-line interface: parsing, artifacts, exit codes."""

from __future__ import annotations

import json
import math

import pytest

from nodal_bosonize import cli
from nodal_bosonize.cli import (
    UsageError,
    main,
    parse_angle,
    parse_lattice,
    parse_samples,
)


@pytest.fixture(autouse=True)
def _clean_threads_env(monkeypatch):
    monkeypatch.delenv(cli.THREADS_ENV_VAR, raising=False)


def run_json(capsys, argv: list[str]) -> tuple[int, dict]:
    code = main(argv)
    captured = capsys.readouterr().out
    # identity checks print a headline line before the JSON document
    body = captured[captured.index("{"):]
    return code, json.loads(body)


class TestParsers:
    def test_angle_multiples_of_pi(self) -> None:
        assert parse_angle("0.45pi") == pytest.approx(0.45 * math.pi)
        assert parse_angle("pi") == pytest.approx(math.pi)
        assert parse_angle("1.5") == 1.5
        assert parse_angle(2) == 2.0

    def test_angle_rejects_garbage(self) -> None:
        with pytest.raises(UsageError):
            parse_angle("0.45qi")

    def test_samples_linspace(self) -> None:
        samples = parse_samples("0:1:41")
        assert len(samples) == 41
        assert samples[0] == 0.0
        assert samples[-1] == 1.0
        assert parse_samples([0.1, 0.2]) == (0.1, 0.2)

    def test_samples_rejects_bad_specs(self) -> None:
        with pytest.raises(UsageError):
            parse_samples("0:1")
        with pytest.raises(UsageError):
            parse_samples("0:1:0")
        with pytest.raises(UsageError):
            parse_samples("a:b:3")

    def test_lattice_specs(self) -> None:
        chain = parse_lattice("1d:8")
        assert chain.dimension == 1
        assert chain.sites_per_direction == (8,)
        square = parse_lattice("2d:4x4")
        assert square.dimension == 2
        assert square.sites_per_direction == (4, 4)

    def test_lattice_rejects_garbage(self) -> None:
        with pytest.raises(UsageError):
            parse_lattice("3d:8")
        with pytest.raises(UsageError):
            parse_lattice("2d:4")


class TestExitCodes:
    def test_unknown_flag_is_usage_error(self, capsys) -> None:
        assert main(["constants", "--bogus", "1"]) == 2

    def test_unknown_config_key_is_usage_error(self, tmp_path, capsys) -> None:
        config = tmp_path / "run.toml"
        config.write_text("wrongkey = 1\n")
        code = main(
            ["constants", "--Q", "0.45pi", "--kappa", "0.8",
             "--config", str(config)]
        )
        assert code == 2
        assert "wrongkey" in capsys.readouterr().err

    def test_missing_required_option(self, capsys) -> None:
        assert main(["constants", "--kappa", "0.8"]) == 2

    def test_missing_out_for_csv_command(self, capsys) -> None:
        assert main(["partition", "--Q", "0.45pi", "--kappa", "0.8"]) == 2

    def test_domain_error_is_exit_one(self, tmp_path, capsys) -> None:
        code = main(
            ["boson-spectrum", "--Q", "0.45pi", "--kappa", "0.8",
             "--V", "40", "--grid", "4",
             "--out", str(tmp_path / "x.csv")]
        )
        assert code == 1
        assert "unstable" in capsys.readouterr().err

    def test_non_integer_filling_is_usage_error(self, capsys) -> None:
        code = main(["ed", "--lattice", "1d:8", "--filling", "0.3"])
        assert code == 2


class TestConfigResolution:
    def test_cli_overrides_config_overrides_default(
        self, tmp_path, capsys
    ) -> None:
        config = tmp_path / "run.toml"
        config.write_text('kappa = 0.8\nV = 2.0\n')
        code, doc = run_json(
            capsys,
            ["constants", "--Q", "0.45pi", "--V", "3",
             "--config", str(config)],
        )
        assert code == 0
        assert doc["config"]["V"] == 3.0  # CLI wins
        assert doc["config"]["kappa"] == 0.8  # config fills the gap
        assert doc["config"]["t"] == 1.0  # default

    def test_threads_environment_fallback(self, monkeypatch, capsys) -> None:
        monkeypatch.setenv(cli.THREADS_ENV_VAR, "4")
        code, doc = run_json(
            capsys, ["constants", "--Q", "0.45pi", "--kappa", "0.8"]
        )
        assert code == 0
        assert doc["config"]["threads"] == 4

    def test_bad_threads_rejected(self, capsys) -> None:
        code = main(
            ["constants", "--Q", "0.45pi", "--kappa", "0.8",
             "--threads", "0"]
        )
        assert code == 2

    def test_json_out_file_matches_stdout(self, tmp_path, capsys) -> None:
        out = tmp_path / "constants.json"
        code = main(
            ["constants", "--Q", "0.45pi", "--kappa", "0.8",
             "--out", str(out)]
        )
        assert code == 0
        assert out.read_text() == capsys.readouterr().out


class TestSubcommands:
    def test_constants_derived_gamma(self, capsys) -> None:
        code, doc = run_json(
            capsys,
            ["constants", "--t", "1", "--V", "1",
             "--Q", "0.45pi", "--kappa", "0.8"],
        )
        assert code == 0
        gamma = doc["derived_constants"]["gamma"]
        assert abs(gamma - 0.031439) < 1e-6

    def test_ed_free_chain(self, capsys) -> None:
        code, doc = run_json(
            capsys,
            ["ed", "--lattice", "1d:8", "--t", "1", "--V", "0",
             "--filling", "0.5"],
        )
        assert code == 0
        assert abs(doc["ground_energy"] - (-5.226251859505506)) < 1e-10
        assert doc["dimension"] == 70
        assert doc["n_particles"] == 4

    def test_check_kronig_reports_pass(self, capsys) -> None:
        code = main(["check-kronig", "--dim", "1", "--M", "4"])
        out = capsys.readouterr().out
        assert code == 0
        assert out.startswith("check-kronig: PASS")
        doc = json.loads(out[out.index("{"):])
        assert doc["report"]["max_deviation"] == 0.0
        assert doc["report"]["status"] == "PASS"

    def test_check_anomaly_reports_pass(self, capsys) -> None:
        code = main(
            ["check-anomaly", "--dim", "1", "--M", "4",
             "--p", "1", "--pprime", "-1"]
        )
        out = capsys.readouterr().out
        assert code == 0
        assert out.startswith("check-anomaly: PASS")

    def test_partition_writes_wrapped_momenta(self, tmp_path, capsys) -> None:
        out = tmp_path / "regions.csv"
        code, doc = run_json(
            capsys,
            ["partition", "--Q", "0.45pi", "--kappa", "0.8",
             "--grid", "8", "--out", str(out)],
        )
        assert code == 0
        lines = out.read_bytes().split(b"\n")
        assert lines[0] == b"k1,k2,r,s"
        assert b"\r" not in out.read_bytes()
        rows = [line.split(b",") for line in lines[1:] if line]
        assert len(rows) == 64
        assert doc["n_points"] == 64
        for row in rows:
            k1, k2 = float(row[0]), float(row[1])
            assert abs(k1) <= math.pi + 1e-12
            assert abs(k2) <= math.pi + 1e-12
            assert int(row[2]) in (1, -1)
            assert int(row[3]) in (1, -1, 0, 2)

    def test_boson_spectrum_artifacts(self, tmp_path, capsys) -> None:
        out = tmp_path / "spectrum.csv"
        code, doc = run_json(
            capsys,
            ["boson-spectrum", "--Q", "0.45pi", "--kappa", "0.8",
             "--V", "2", "--grid", "8", "--T", "0.1", "--out", str(out)],
        )
        assert code == 0
        assert "E0_density" in doc
        assert "F_density" in doc
        assert doc["F_density"] < doc["E0_density"] <= 0.0
        lines = out.read_text().splitlines()
        assert lines[0] == "p_plus,p_minus,omega_1,omega_2"
        assert len(lines) == 65

    def test_meanfield_tv_mode(self, capsys) -> None:
        code, doc = run_json(
            capsys,
            ["meanfield", "--nu", "0.5", "--V", "2", "--grid", "64"],
        )
        assert code == 0
        assert doc["mode"] == "tV"
        assert doc["delta"] > 0.1

    def test_meanfield_antinodal_mode(self, capsys) -> None:
        code, doc = run_json(
            capsys,
            ["meanfield", "--antinodal", "--Q", "0.45pi",
             "--kappa", "0.8", "--V", "2", "--grid", "64"],
        )
        assert code == 0
        assert doc["gapped"] is True
        assert doc["gap"] > 0.1

    def test_meanfield_mode_requirements(self, capsys) -> None:
        assert main(["meanfield", "--V", "2"]) == 2
        assert main(["meanfield", "--antinodal", "--V", "2"]) == 2

    def test_correlator_artifacts(self, tmp_path, capsys) -> None:
        out = tmp_path / "corr.csv"
        code, doc = run_json(
            capsys,
            ["correlator", "--gamma", "0.3", "--L", "2000",
             "--eps", "0.5", "--out", str(out)],
        )
        assert code == 0
        analytic = doc["analytic_exponent"]
        assert abs(doc["exponent"] - analytic) / analytic < 0.02
        lines = out.read_text().splitlines()
        assert lines[0] == "x,G,G_free"
        first = lines[1].split(",")
        assert first[1] == first[2]  # normalized to the free value at x_min

    def test_phase_diagram_artifacts(self, tmp_path, capsys) -> None:
        out = tmp_path / "phases.csv"
        code, doc = run_json(
            capsys,
            ["phase-diagram", "--model", "tV2d", "--nu", "0:1:41",
             "--V", "0:2:21", "--grid", "32", "--out", str(out)],
        )
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "nu,V,label,delta,e"
        assert len(lines) == 1 + 41 * 21
        assert doc["n_cells"] == 41 * 21
        assert sum(doc["label_counts"].values()) == 41 * 21


class TestReproducibility:
    def test_identical_runs_and_thread_invariance(
        self, tmp_path, capsys
    ) -> None:
        argv_base = [
            "boson-spectrum", "--Q", "0.45pi", "--kappa", "0.8",
            "--V", "2", "--grid", "8",
        ]
        artifacts = []
        for i, threads in enumerate(("1", "1", "4")):
            out = tmp_path / f"run{i}.csv"
            code = main(argv_base + ["--threads", threads, "--out", str(out)])
            assert code == 0
            stdout = capsys.readouterr().out
            # the echoed thread count differs by design; numeric payload
            # and CSV bytes must not
            doc = json.loads(stdout)
            doc["config"].pop("threads")
            doc["config"].pop("out")
            artifacts.append((out.read_bytes(), json.dumps(doc, sort_keys=True)))
        assert artifacts[0] == artifacts[1] == artifacts[2]
