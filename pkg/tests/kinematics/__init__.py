"""Kinematics tests."""
