"""Tests for asappp-sir."""
