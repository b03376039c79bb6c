"""Tests for freqband."""
