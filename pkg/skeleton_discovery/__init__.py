"""
Skeleton discovery package.

Turns point-cloud sequences of an articulated body into keypoint tracks, a
rooted skeleton tree and a fitted motion, and evaluates the result.
"""

from __future__ import annotations

__all__: tuple[str, ...] = ("__version__",)

__version__ = "0.1.0"
