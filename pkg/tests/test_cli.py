"""Tests for CLI commands."""

import logging
import os
from pathlib import Path
from unittest.mock import MagicMock, patch

import numpy as np
import pytest
from click.testing import CliRunner

from tests.fixtures import MANIFEST_TEXT, random_image
from tvflow import __version__
from tvflow.cli import cli
from tvflow.exceptions import FlowFetchError
from tvflow.io import read_flo, write_flo, write_image
from tvflow.types import FlowField


@pytest.fixture
def runner():
    """Create a Click test runner."""
    return CliRunner()


@pytest.fixture(autouse=True)
def isolated(tmp_path, monkeypatch):
    """Run every command in an empty directory without TVFLOW_* settings."""
    for key in list(os.environ):
        if key.startswith("TVFLOW_"):
            monkeypatch.delenv(key)
    monkeypatch.setenv("HOME", str(tmp_path))
    monkeypatch.chdir(tmp_path)
    return tmp_path


class TestCliGroup:
    """Tests for the top-level group."""

    def test_version(self, runner):
        """Test --version."""
        result = runner.invoke(cli, ["--version"])
        assert result.exit_code == 0
        assert __version__ in result.output

    def test_invalid_setting(self, runner):
        """Test that a bad TVFLOW_* variable stops the command."""
        result = runner.invoke(cli, ["bench", "missing.env"], env={"TVFLOW_THREADS": "0"})
        assert result.exit_code == 2
        assert "Invalid configuration" in result.output

    def test_env_file_option(self, runner):
        """Test that --env-file feeds the settings."""
        Path("tvflow.env").write_text("TVFLOW_MAX_ITERS=3\n")
        write_image("a.png", random_image((8, 8)))
        write_image("b.png", random_image((8, 8), 1))
        result = runner.invoke(
            cli, ["--env-file", "tvflow.env", "estimate", "a.png", "b.png", "-o", "flow.flo"]
        )
        assert result.exit_code == 0
        assert "3 iterations" in result.output


class TestEstimateCommand:
    """Tests for 'tvflow estimate'."""

    def test_identical_frames(self, runner):
        """Test that identical frames give the zero flow."""
        write_image("a.png", random_image((8, 8)))
        result = runner.invoke(cli, ["estimate", "a.png", "a.png", "-o", "flow.flo"])
        assert result.exit_code == 0
        assert "Wrote flow.flo (l1-tv, 1 iterations)" in result.output
        flow = read_flo("flow.flo")
        assert np.all(flow.v1 == 0) and np.all(flow.v2 == 0)

    def test_color_output(self, runner):
        """Test --color."""
        write_image("a.png", random_image((8, 8)))
        write_image("b.png", random_image((8, 8), 1))
        result = runner.invoke(
            cli,
            ["estimate", "a.png", "b.png", "-o", "flow.flo", "--iters", "20", "--color", "c.png"],
        )
        assert result.exit_code == 0
        assert Path("c.png").is_file()

    def test_bregman_preset(self, runner):
        """Test that l2-tv with --bregman runs the Bregman preset."""
        write_image("a.png", random_image((8, 8)))
        write_image("b.png", random_image((8, 8), 1))
        result = runner.invoke(
            cli,
            ["estimate", "a.png", "b.png", "-o", "f.flo", "--model", "l2-tv", "--bregman", "2"]
            + ["--iters", "10", "--tol", "0"],
        )
        assert result.exit_code == 0
        assert "l2-tv-breg, 20 iterations" in result.output

    def test_bregman_with_l1_data(self, runner):
        """Test that Bregman iteration is refused for L1 data terms."""
        write_image("a.png", random_image((8, 8)))
        result = runner.invoke(
            cli, ["estimate", "a.png", "a.png", "-o", "f.flo", "--model", "l1-tv", "--bregman", "3"]
        )
        assert result.exit_code == 2
        assert "Estimation failed" in result.output
        assert not Path("f.flo").exists()

    def test_verbose_after_subcommand(self, runner):
        """Test that --verbose is also accepted on the estimate command."""
        write_image("a.png", random_image((8, 8)))
        write_image("b.png", random_image((8, 8), 1))
        result = runner.invoke(
            cli,
            ["estimate", "a.png", "b.png", "-o", "f.flo", "--iters", "5", "--tol", "0"]
            + ["--verbose"],
        )
        assert result.exit_code == 0
        assert "Wrote f.flo (l1-tv, 5 iterations)" in result.output
        assert logging.getLogger("tvflow").level == logging.INFO

    def test_size_mismatch(self, runner):
        """Test frames of different size."""
        write_image("a.png", random_image((8, 8)))
        write_image("b.png", random_image((8, 9)))
        result = runner.invoke(cli, ["estimate", "a.png", "b.png", "-o", "f.flo"])
        assert result.exit_code == 2
        assert "differ" in result.output

    def test_missing_frame(self, runner):
        """Test a missing input file."""
        write_image("a.png", random_image((8, 8)))
        result = runner.invoke(cli, ["estimate", "a.png", "nope.png", "-o", "f.flo"])
        assert result.exit_code == 3
        assert "nope.png" in result.output


class TestMetricsCommand:
    """Tests for 'tvflow metrics'."""

    def test_identical_flows(self, runner):
        """Test zero errors for identical files."""
        write_flo("a.flo", FlowField.constant((3, 3), 0.5, 0.25))
        result = runner.invoke(cli, ["metrics", "a.flo", "a.flo"])
        assert result.exit_code == 0
        assert "AEE 0.000000, AE 0.000000" in result.output

    def test_unit_velocity(self, runner):
        """Test (1, 0) against the zero flow."""
        write_flo("est.flo", FlowField.constant((2, 2), 1.0, 0.0))
        write_flo("gt.flo", FlowField.zeros((2, 2)))
        result = runner.invoke(cli, ["metrics", "est.flo", "gt.flo"])
        assert result.exit_code == 0
        assert "AEE 1.000000, AE 0.785398" in result.output

        result = runner.invoke(cli, ["metrics", "est.flo", "gt.flo", "--degrees"])
        assert "AE 45.000000 deg" in result.output

    def test_masked_pixels_reported(self, runner):
        """Test that unknown ground-truth pixels are counted."""
        v1 = np.zeros((2, 2))
        v1[0, 0] = 1e10
        valid = np.array([[False, True], [True, True]])
        write_flo("gt.flo", FlowField(v1, np.zeros((2, 2)), valid))
        write_flo("est.flo", FlowField.zeros((2, 2)))
        result = runner.invoke(cli, ["metrics", "est.flo", "gt.flo"])
        assert result.exit_code == 0
        assert "AEE 0.000000" in result.output
        assert "1 masked pixels excluded, 3 evaluated" in result.output

    def test_size_mismatch(self, runner):
        """Test flows of different size."""
        write_flo("a.flo", FlowField.zeros((2, 2)))
        write_flo("b.flo", FlowField.zeros((2, 3)))
        result = runner.invoke(cli, ["metrics", "a.flo", "b.flo"])
        assert result.exit_code == 2

    def test_bad_file(self, runner):
        """Test a file that is not a .flo file."""
        Path("bad.flo").write_bytes(b"garbage data here")
        write_flo("b.flo", FlowField.zeros((2, 2)))
        result = runner.invoke(cli, ["metrics", "bad.flo", "b.flo"])
        assert result.exit_code == 3
        assert "magic" in result.output


class TestBenchCommand:
    """Tests for 'tvflow bench'."""

    def test_writes_report(self, runner):
        """Test a small synthetic benchmark."""
        Path("bench.env").write_text(MANIFEST_TEXT)
        result = runner.invoke(cli, ["bench", "bench.env", "-o", "report.csv"])
        assert result.exit_code == 0
        assert "Averaged ranks" in result.output
        lines = Path("report.csv").read_text().splitlines()
        assert len(lines) == 3
        assert lines[1].startswith("l1-tv,translation,")
        assert lines[2].startswith("l2-l2,translation,")

    def test_same_seed_same_report(self, runner):
        """Test that noisy runs with the same seed are reproducible."""
        Path("bench.env").write_text(MANIFEST_TEXT)
        for name in ("one.csv", "two.csv"):
            result = runner.invoke(
                cli, ["bench", "bench.env", "--noise", "0.01", "--seed", "3", "-o", name]
            )
            assert result.exit_code == 0
        assert Path("one.csv").read_text() == Path("two.csv").read_text()

    def test_compare_gradients_and_plot(self, runner):
        """Test the gradient comparison mode with a figure."""
        Path("bench.env").write_text(MANIFEST_TEXT.replace("MODELS=l2-l2,l1-tv", "MODELS=l1-tv"))
        result = runner.invoke(
            cli, ["bench", "bench.env", "--compare-gradients", "-o", "r.csv", "--plot", "r.png"]
        )
        assert result.exit_code == 0
        assert "l1-tv[forward]" in Path("r.csv").read_text()
        assert Path("r.png").is_file()

    def test_partial_failure(self, runner):
        """Test that unknown datasets are listed and the rest still runs."""
        Path("bench.env").write_text(
            MANIFEST_TEXT.replace("synthetic:translation", "synthetic:translation,Atlantis")
        )
        result = runner.invoke(cli, ["bench", "bench.env", "-o", "r.csv"])
        assert result.exit_code == 0
        assert "Failures (1)" in result.output
        assert Path("r.csv").is_file()

    def test_nothing_succeeds(self, runner):
        """Test the exit code when every entry fails."""
        Path("bench.env").write_text("DATASETS=Atlantis\nMODELS=l1-tv\n")
        result = runner.invoke(cli, ["bench", "bench.env", "-o", "r.csv"])
        assert result.exit_code == 5
        assert "No benchmark entry succeeded" in result.output
        assert not Path("r.csv").exists()

    def test_bad_manifest(self, runner):
        """Test a manifest with an unknown model."""
        Path("bench.env").write_text("DATASETS=synthetic:translation\nMODELS=l9-tv\n")
        result = runner.invoke(cli, ["bench", "bench.env"])
        assert result.exit_code == 2
        assert "Benchmark failed" in result.output


class TestSynthCommand:
    """Tests for 'tvflow synth'."""

    def test_writes_dataset(self, runner):
        """Test the written dataset directory."""
        result = runner.invoke(cli, ["synth", "translating-block", "out", "--size", "16"])
        assert result.exit_code == 0
        for name in ("frame10.png", "frame11.png", "flow10.flo"):
            assert (Path("out") / name).is_file()
        flow = read_flo(Path("out") / "flow10.flo")
        assert flow.shape == (16, 16)
        assert flow.v1.max() == pytest.approx(0.8)

    def test_unknown_scene(self, runner):
        """Test that unknown scene names are rejected by click."""
        result = runner.invoke(cli, ["synth", "waterfall", "out"])
        assert result.exit_code == 2


class TestColorCommand:
    """Tests for 'tvflow color'."""

    def test_renders_png(self, runner):
        """Test rendering a .flo file."""
        write_flo("flow.flo", FlowField.constant((3, 3), 0.5, 0.5))
        result = runner.invoke(cli, ["color", "flow.flo", "flow.png", "--max-magnitude", "1"])
        assert result.exit_code == 0
        assert Path("flow.png").is_file()

    def test_missing_flow(self, runner):
        """Test a missing input file."""
        result = runner.invoke(cli, ["color", "missing.flo", "flow.png"])
        assert result.exit_code == 3
        assert "Rendering failed" in result.output


class TestSweepCommand:
    """Tests for 'tvflow sweep'."""

    def test_table(self, runner):
        """Test the sweep table for two magnitudes."""
        result = runner.invoke(cli, ["sweep", "--magnitude", "0.1", "--magnitude", "10"])
        assert result.exit_code == 0
        assert "0.010000" in result.output

    def test_plot(self, runner):
        """Test the sweep figure."""
        result = runner.invoke(cli, ["sweep", "--plot", "sweep.png"])
        assert result.exit_code == 0
        assert Path("sweep.png").is_file()


class TestFetchCommand:
    """Tests for 'tvflow fetch'."""

    @pytest.fixture
    def mock_client(self):
        """Create a mock Middlebury client."""
        client = MagicMock()
        client.__enter__.return_value = client
        client.fetch.return_value = [Path("data") / "Dimetrodon"]
        return client

    def test_fetch_named(self, runner, mock_client):
        """Test fetching one sequence into --dest."""
        with patch("tvflow.cli.MiddleburyClient", return_value=mock_client):
            result = runner.invoke(cli, ["fetch", "Dimetrodon", "--dest", "data"])
        assert result.exit_code == 0
        assert "Unpacked" in result.output
        mock_client.fetch.assert_called_once_with(["Dimetrodon"], Path("data"))
        mock_client.__exit__.assert_called_once()

    def test_fetch_all_into_data_dir(self, runner, mock_client):
        """Test that all sequences go to TVFLOW_DATA_DIR by default."""
        with patch("tvflow.cli.MiddleburyClient", return_value=mock_client):
            result = runner.invoke(cli, ["fetch"], env={"TVFLOW_DATA_DIR": "/data/flow"})
        assert result.exit_code == 0
        names, dest = mock_client.fetch.call_args.args
        assert len(names) == 8
        assert dest == Path("/data/flow")

    def test_fetch_failure(self, runner, mock_client):
        """Test a failed download."""
        mock_client.fetch.side_effect = FlowFetchError("Archive not found: x.zip", 404)
        with patch("tvflow.cli.MiddleburyClient", return_value=mock_client):
            result = runner.invoke(cli, ["fetch", "Venus"])
        assert result.exit_code == 3
        assert "Download failed" in result.output
