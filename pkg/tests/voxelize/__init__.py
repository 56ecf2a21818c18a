"""Voxelization tests."""
