"""Tests for logging, hashing, random-stream helpers and project metadata."""

import json
import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path

import numpy as np

from latent_force_mpc.utils.hashing import calculate_file_sha256, calculate_sha256
from latent_force_mpc.utils.logging import JSONFormatter, TextFormatter, get_logger, setup_logging
from latent_force_mpc.utils.rng import Stream, derive_rng


def make_record(fields=None):
    record = logging.LogRecord("latent_force_mpc.test", logging.INFO, __file__, 10, "Step %d", (3,), None)
    if fields is not None:
        record.fields = fields
    return record


class TestFormatters:
    """Test structured log formatting."""

    def test_json_formatter(self):
        """Test the JSON payload carries the message and structured fields."""
        line = JSONFormatter().format(make_record({"u": np.array([0.5, -0.1]), "ess": np.float64(12.0)}))
        payload = json.loads(line)
        assert payload["message"] == "Step 3"
        assert payload["level"] == "INFO"
        assert payload["fields"]["u"] == [0.5, -0.1]
        assert payload["fields"]["ess"] == 12.0

    def test_json_without_fields(self):
        """Test records without fields omit the key."""
        payload = json.loads(JSONFormatter().format(make_record()))
        assert "fields" not in payload

    def test_text_formatter(self):
        """Test fields are appended as key=value pairs."""
        line = TextFormatter().format(make_record({"step": 3}))
        assert line.endswith("| step=3")


class TestSetupLogging:
    """Test logger configuration."""

    def test_single_console_handler(self):
        """Test repeated setup does not stack handlers."""
        setup_logging("latent_force_mpc.test_setup", "DEBUG")
        logger = setup_logging("latent_force_mpc.test_setup", "WARNING", format_type="text")
        assert len(logger.handlers) == 1
        assert logger.level == logging.WARNING
        assert isinstance(logger.handlers[0].formatter, TextFormatter)

    def test_file_handler(self, temp_out_dir):
        """Test a log directory adds a rotating file handler."""
        logger = setup_logging("latent_force_mpc.test_file", "INFO", log_dir=str(temp_out_dir / "logs"))
        assert len(logger.handlers) == 2
        assert (temp_out_dir / "logs").exists()
        for handler in logger.handlers:
            handler.close()
        logger.handlers = []

    def test_environment(self, monkeypatch):
        """Test get_logger reads level and format from the environment."""
        monkeypatch.setenv("LFMPC_LOG_LEVEL", "ERROR")
        monkeypatch.setenv("LFMPC_LOG_FORMAT", "text")
        monkeypatch.delenv("LFMPC_LOG_DIR", raising=False)
        logger = get_logger("latent_force_mpc.test_env")
        assert logger.level == logging.ERROR
        assert isinstance(logger.handlers[0].formatter, TextFormatter)


class TestHashing:
    """Test content hashes."""

    def test_known_digest(self):
        """Test the SHA-256 of "abc"."""
        expected = "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        assert calculate_sha256("abc") == expected
        assert calculate_sha256(b"abc") == expected

    def test_file_digest(self, temp_out_dir):
        """Test file and in-memory hashes agree."""
        path = temp_out_dir / "data.bin"
        path.write_bytes(b"latent force")
        assert calculate_file_sha256(path) == calculate_sha256(b"latent force")


class TestDeriveRng:
    """Test random-stream derivation."""

    def test_reproducible(self):
        """Test the same key gives the same draws."""
        first = derive_rng(42, Stream.SCENARIOS, 7).standard_normal(5)
        second = derive_rng(42, Stream.SCENARIOS, 7).standard_normal(5)
        np.testing.assert_array_equal(first, second)

    def test_streams_independent(self):
        """Test different streams, steps and seeds give different draws."""
        base = derive_rng(42, Stream.SCENARIOS, 7).standard_normal(5)
        assert not np.array_equal(base, derive_rng(42, Stream.MEASUREMENT, 7).standard_normal(5))
        assert not np.array_equal(base, derive_rng(42, Stream.SCENARIOS, 8).standard_normal(5))
        assert not np.array_equal(base, derive_rng(43, Stream.SCENARIOS, 7).standard_normal(5))


class TestPytestMarkers:
    """Test the registered pytest markers."""

    def test_markers_parse(self):
        """Test pyproject.toml parses and registers both markers with their deselect hint."""
        with open(Path(__file__).resolve().parents[1] / "pyproject.toml", "rb") as f:
            markers = tomllib.load(f)["tool"]["pytest"]["ini_options"]["markers"]
        assert markers == [
            "integration: marks tests as integration (deselect with '-m \"not integration\"')",
            "slow: marks tests as slow (deselect with '-m \"not slow\"')",
        ]
