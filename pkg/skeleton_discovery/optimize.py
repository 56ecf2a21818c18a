"""Monotone gradient descent with backtracking line search.

Every optimizer in the package (keypoint placement, affinity regression and
pose fitting) goes through :func:`minimize`, so all of them share the same
guarantee: an accepted step never increases the objective.
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from skeleton_discovery.errors import ConfigError, NumericalError

logger = logging.getLogger(__name__)

Objective = Callable[[np.ndarray], tuple[float, np.ndarray]]


@dataclass(frozen=True)
class DescentSettings:
    """Budget and line-search parameters for :func:`minimize`."""

    max_iterations: int = 200
    initial_step: float = 1.0
    backtrack: float = 0.5
    max_halvings: int = 20
    tolerance: float = 1e-12

    def __post_init__(self) -> None:
        if self.max_iterations < 0:
            raise ConfigError("max_iterations must be >= 0")
        if self.initial_step <= 0.0:
            raise ConfigError("initial_step must be > 0")
        if not 0.0 < self.backtrack < 1.0:
            raise ConfigError("backtrack must lie in (0, 1)")
        if self.max_halvings < 0:
            raise ConfigError("max_halvings must be >= 0")
        if self.tolerance < 0.0:
            raise ConfigError("tolerance must be >= 0")


@dataclass
class DescentResult:
    x: np.ndarray
    value: float
    initial_value: float
    iterations: int
    converged: bool
    history: list[float] = field(default_factory=list)


def _evaluate(objective: Objective, x: np.ndarray) -> tuple[float, np.ndarray]:
    value, gradient = objective(x)
    return float(value), np.asarray(gradient, dtype=np.float64)


def minimize(
    objective: Objective,
    x0: np.ndarray,
    settings: DescentSettings | None = None,
) -> DescentResult:
    """Minimize ``objective`` starting from ``x0``.

    ``objective`` returns ``(value, gradient)`` with the gradient shaped like
    its argument. The trial step length is the Barzilai-Borwein estimate from
    the previous accepted move and is multiplied by ``backtrack`` until the
    objective does not increase. Non-finite trial values count as increases.
    """

    cfg = settings or DescentSettings()
    x = np.array(x0, dtype=np.float64, copy=True)
    value, gradient = _evaluate(objective, x)
    if not np.isfinite(value):
        raise NumericalError("objective is not finite at the starting point")
    initial_value = value
    history = [value]
    step = cfg.initial_step
    converged = False
    iterations = 0

    for iterations in range(1, cfg.max_iterations + 1):
        if not np.any(gradient):
            converged = True
            break
        trial_step = step
        accepted = False
        for _ in range(cfg.max_halvings + 1):
            candidate = x - trial_step * gradient
            candidate_value, candidate_gradient = _evaluate(objective, candidate)
            if np.isfinite(candidate_value) and candidate_value <= value:
                accepted = True
                break
            trial_step *= cfg.backtrack
        if not accepted:
            converged = True
            break

        move = candidate - x
        change = candidate_gradient - gradient
        curvature = float(np.vdot(move, change))
        if curvature > 0.0:
            step = float(np.vdot(move, move)) / curvature
        else:
            step = trial_step / cfg.backtrack

        decrease = value - candidate_value
        x, value, gradient = candidate, candidate_value, candidate_gradient
        history.append(value)
        if decrease <= cfg.tolerance * max(1.0, abs(value)):
            converged = True
            break

    if not converged:
        logger.debug("descent stopped at iteration budget %d", cfg.max_iterations)
    return DescentResult(
        x=x,
        value=value,
        initial_value=initial_value,
        iterations=iterations,
        converged=converged,
        history=history,
    )
