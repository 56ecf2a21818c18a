"""Test suite for skeleton_discovery."""
