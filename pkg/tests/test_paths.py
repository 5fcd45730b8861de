"""Tests for environment-driven defaults."""

import os
from pathlib import Path
from unittest.mock import patch

from src.paths import OUTPUT_DIR_ENV, WORKERS_ENV, default_workers, get_output_dir


class TestGetOutputDir:
    """Tests for get_output_dir function."""

    def test_reads_environment_variable(self):
        """ASAPPP_OUTPUT_DIR overrides the default."""
        with patch.dict(os.environ, {OUTPUT_DIR_ENV: "/fake/figures"}, clear=True):
            assert get_output_dir() == Path("/fake/figures")

    def test_fallback_is_local_output(self):
        """Falls back to ./output when unset."""
        with patch.dict(os.environ, {}, clear=True):
            assert get_output_dir() == Path("./output")

    def test_empty_value_uses_fallback(self):
        """An empty variable counts as unset."""
        with patch.dict(os.environ, {OUTPUT_DIR_ENV: ""}, clear=True):
            assert get_output_dir() == Path("./output")


class TestDefaultWorkers:
    """Tests for default_workers function."""

    def test_reads_environment_variable(self):
        """ASAPPP_WORKERS sets the worker count."""
        with patch.dict(os.environ, {WORKERS_ENV: "8"}, clear=True):
            assert default_workers() == 8

    def test_unset_is_one(self):
        """Single worker when unset."""
        with patch.dict(os.environ, {}, clear=True):
            assert default_workers() == 1

    def test_invalid_values_fall_back(self):
        """Non-integer and non-positive values fall back to one worker."""
        for value in ("many", "0", "-3"):
            with patch.dict(os.environ, {WORKERS_ENV: value}, clear=True):
                assert default_workers() == 1
