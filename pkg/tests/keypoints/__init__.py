"""Keypoint tests."""
