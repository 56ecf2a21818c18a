"""Skeleton tests."""
