"""Affinity tests."""
