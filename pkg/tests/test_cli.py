"""
Tests for the command-line interface.
"""

import io

import numpy as np
import pytest
from rich.console import Console

from src.cli.main import EXIT_DIVERGED, EXIT_OK, EXIT_USAGE, create_parser, run
from src.config.settings import reset_settings
from src.core.io import read_volume


def _run(*argv):
    """Run the CLI with a captured console; returns (exit code, output)."""
    buffer = io.StringIO()
    code = run([str(a) for a in argv], console=Console(file=buffer, width=200))
    return code, buffer.getvalue()


def _simulate(directory, *extra):
    directory.mkdir(parents=True, exist_ok=True)
    paths = {"output": directory / "y.ivol", "mask": directory / "masks.ivol",
             "ground_truth": directory / "x.ivol"}
    code, _ = _run("simulate", "--output", paths["output"], "--mask", paths["mask"],
                   "--ground-truth", paths["ground_truth"], *extra)
    assert code == EXIT_OK
    return paths


class TestParser:
    """Test argument parsing."""

    def test_no_command(self):
        """Test that a bare invocation is a usage error."""
        code, _ = _run()
        assert code == EXIT_USAGE

    def test_config_flag_before_command(self):
        """Test the top-level --config flag."""
        args = create_parser().parse_args(["--config", "run.cfg", "info"])
        assert args.command == "info"
        assert str(args.config) == "run.cfg"

    def test_lambda_flag(self):
        """Test the --lambda spelling."""
        args = create_parser().parse_args(["reconstruct", "--lambda", "0.3"])
        assert args.lam == 0.3


class TestSimulate:
    """Test the simulate command."""

    def test_writes_files(self, tmp_path):
        """Test measurement, masks and ground truth for SCI."""
        paths = _simulate(tmp_path, "--modality", "sci", "--shape", "8x8x2", "--seed", "3")
        assert read_volume(paths["output"]).shape == (8, 8)
        assert read_volume(paths["mask"]).shape == (8, 8, 2)
        assert read_volume(paths["ground_truth"]).shape == (8, 8, 2)

    def test_default_companion_names(self, tmp_path):
        """Test <stem>_truth.ivol and <stem>_mask.ivol next to the output."""
        code, _ = _run("simulate", "--modality", "inpaint", "--shape", "8x8",
                       "--output", tmp_path / "y.ivol")
        assert code == EXIT_OK
        assert (tmp_path / "y_truth.ivol").exists()
        assert (tmp_path / "y_mask.ivol").exists()

    def test_deterministic(self, tmp_path):
        """Test that the same seed gives byte-identical files."""
        first = _simulate(tmp_path / "a", "--modality", "sci", "--shape", "8x8x2",
                          "--seed", "5", "--noise-sigma", "0.01")
        second = _simulate(tmp_path / "b", "--modality", "sci", "--shape", "8x8x2",
                           "--seed", "5", "--noise-sigma", "0.01")
        for role in first:
            assert first[role].read_bytes() == second[role].read_bytes()

    def test_output_required(self):
        """Test the missing-path error."""
        code, output = _run("simulate", "--modality", "identity", "--shape", "4x4")
        assert code == EXIT_USAGE
        assert "--output is required" in output

    def test_bad_shape(self, tmp_path):
        """Test that invalid config values are usage errors."""
        code, _ = _run("simulate", "--shape", "4xfour", "--output", tmp_path / "y.ivol")
        assert code == EXIT_USAGE

    def test_config_file(self, tmp_path):
        """Test values taken from a key=value file."""
        config = tmp_path / "run.cfg"
        config.write_text("# identity run\nmodality = identity\nshape = 6x4\n")
        code, _ = _run("--config", config, "simulate", "--output", tmp_path / "y.ivol")
        assert code == EXIT_OK
        assert read_volume(tmp_path / "y.ivol").shape == (6, 4)


class TestReconstruct:
    """Test the reconstruct command."""

    def test_gap_tv_round_trip(self, tmp_path):
        """Test GAP-TV on a simulated SCI snapshot, twice, with identical results."""
        paths = _simulate(tmp_path, "--modality", "sci", "--shape", "8x8x2", "--seed", "7")
        outputs = []
        for name in ("first", "second"):
            output, trace = tmp_path / f"{name}.ivol", tmp_path / f"{name}.csv"
            code, text = _run("reconstruct", "--modality", "sci", "--input", paths["output"],
                              "--mask", paths["mask"], "--ground-truth", paths["ground_truth"],
                              "--solver", "gap", "--prox", "tv", "--tau", "0.05", "--iters", "20",
                              "--output", output, "--trace", trace)
            assert code in (0, 2)
            assert "PSNR" in text
            assert trace.read_text().startswith("iter,fidelity,regularizer,objective")
            outputs.append(output.read_bytes())
        assert outputs[0] == outputs[1]

    def test_identity_recovers_measurement(self, tmp_path):
        """Test that ISTA with τ = 0 on a denoising problem returns y and converges."""
        paths = _simulate(tmp_path, "--modality", "identity", "--shape", "8x8")
        output = tmp_path / "xhat.ivol"
        code, _ = _run("reconstruct", "--modality", "identity", "--input", paths["output"],
                       "--ground-truth", paths["ground_truth"], "--solver", "ista",
                       "--prox", "l1", "--output", output)
        assert code == EXIT_OK
        assert np.array_equal(read_volume(output), read_volume(paths["ground_truth"]))

    def test_unknown_solver(self, tmp_path):
        """Test that an unknown solver name is a usage error."""
        paths = _simulate(tmp_path, "--modality", "identity", "--shape", "4x4")
        code, output = _run("reconstruct", "--modality", "identity", "--input", paths["output"],
                            "--solver", "nope", "--output", tmp_path / "xhat.ivol")
        assert code == EXIT_USAGE
        assert "unknown solver" in output

    def test_missing_mask(self, tmp_path):
        """Test that SCI reconstruction needs --mask."""
        paths = _simulate(tmp_path, "--modality", "sci", "--shape", "4x4x2")
        code, _ = _run("reconstruct", "--modality", "sci", "--input", paths["output"],
                       "--output", tmp_path / "xhat.ivol")
        assert code == EXIT_USAGE

    def test_prox_with_denoiser_solver(self, tmp_path):
        """Test the solver/regularizer pairing check."""
        paths = _simulate(tmp_path, "--modality", "identity", "--shape", "4x4")
        code, output = _run("reconstruct", "--modality", "identity", "--input", paths["output"],
                            "--solver", "red_gd", "--prox", "l1", "--output", tmp_path / "x.ivol")
        assert code == EXIT_USAGE
        assert "denoiser" in output

    def test_divergence_exit_code(self, tmp_path):
        """Test exit code 3 and the partial trace when the step is too large."""
        paths = _simulate(tmp_path, "--modality", "deblur", "--shape", "8x8")
        trace = tmp_path / "trace.csv"
        code, output = _run("reconstruct", "--modality", "deblur", "--input", paths["output"],
                            "--solver", "ista", "--prox", "l1", "--gamma", "5", "--iters", "300",
                            "--output", tmp_path / "xhat.ivol", "--trace", trace)
        assert code == EXIT_DIVERGED
        assert "diverged" in output
        assert trace.exists()
        assert not (tmp_path / "xhat.ivol").exists()


class TestBench:
    """Test the bench command."""

    def test_report_csv(self, tmp_path):
        """Test one row per (instance, solver) in the saved report."""
        report = tmp_path / "bench.csv"
        code, _ = _run("bench", "--solvers", "ista,fista", "--instances", "deblur-8",
                       "--output", report)
        assert code == EXIT_OK

        lines = report.read_text().splitlines()
        assert lines[0].startswith("instance,solver,psnr")
        rows = [line.split(",") for line in lines[1:]]
        assert [(row[0], row[1]) for row in rows] == [("deblur-8", "fista"), ("deblur-8", "ista")]
        assert all(row[-1] == "" for row in rows)

    def test_report_is_byte_identical_across_runs(self, tmp_path):
        """Test that two bench runs with the same seeds write the same bytes."""
        first, second = tmp_path / "first.csv", tmp_path / "second.csv"
        for report in (first, second):
            code, output = _run("bench", "--solvers", "ista,fista",
                                "--instances", "deblur-8,sci-16", "--output", report)
            assert code == EXIT_OK

        assert first.read_bytes() == second.read_bytes()
        assert "wall_time" not in first.read_text()
        assert "wall_time" in output

    def test_unknown_instance(self):
        """Test the instance name check."""
        code, output = _run("bench", "--instances", "deblur-99")
        assert code == EXIT_USAGE
        assert "deblur-8" in output


class TestVerifyAndInfo:
    """Test the verify and info commands."""

    def test_verify_passes(self):
        """Test that every oracle check passes at the default scale."""
        code, output = _run("verify")
        assert code == EXIT_OK
        assert "adjoint:sci" in output

    def test_verify_scale_too_large(self, monkeypatch):
        """Test the oracle cap on the verify scale."""
        monkeypatch.setenv("ORACLE_MAX_UNKNOWNS", "64")
        reset_settings()
        code, _ = _run("verify", "--scale", "3")
        assert code == EXIT_USAGE

    @pytest.mark.parametrize("name", ["gap", "fista", "primal_dual", "red_admm"])
    def test_info_lists_solvers(self, name):
        """Test the solver table."""
        code, output = _run("info")
        assert code == EXIT_OK
        assert name in output
