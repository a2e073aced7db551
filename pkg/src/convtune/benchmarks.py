"""Analytic test functions for validating the optimizers."""

from __future__ import annotations

import numpy as np

from .optimizers import SearchSpace


def sphere(x) -> float:
    """Sum of squares; global minimum 0 at the origin."""
    x = np.asarray(x)
    return float((x * x).sum())


def rosenbrock(x) -> float:
    """Banana valley; global minimum 0 at (1, ..., 1)."""
    x = np.asarray(x)
    return float((100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (1.0 - x[:-1]) ** 2).sum())


SPHERE_SPACE = SearchSpace(lower=(-5.0, -5.0, -5.0), upper=(5.0, 5.0, 5.0))
ROSENBROCK_SPACE = SearchSpace(lower=(-2.0, -2.0, -2.0), upper=(2.0, 2.0, 2.0))

FUNCTIONS = {
    "sphere": (sphere, SPHERE_SPACE, (0.0, 0.0, 0.0)),
    "rosenbrock": (rosenbrock, ROSENBROCK_SPACE, (1.0, 1.0, 1.0)),
}
