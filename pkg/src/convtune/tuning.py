"""Total-error fitness and the weight-tuning entry point.

The fitness of a weight vector is the sum over the three rails of the
mean absolute relative output error, measured in a window ahead of each
scenario's final snapshot (after the disturbance has hit), averaged
across the tuning scenarios.  Optimizers search the [0,1]^3 box; every
candidate is normalized onto the weight simplex before evaluation, and
the uniform vector is injected into each initial population so a tuned
result can never be worse than the constant-weight baseline.
"""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np

from .loop import LoopConfig, SimTrace, WeightVector, run_closed_loop
from .optimizers import ALGORITHMS, OptResult, SearchSpace
from .power_stage import ConverterParams, DivergenceError

WEIGHT_SPACE = SearchSpace(lower=(0.0, 0.0, 0.0), upper=(1.0, 1.0, 1.0))


def window_error_sum(trace: SimTrace, t_end: float, window: float) -> float:
    """Sum over rails of the mean absolute relative error in the window."""
    mask = trace.window_mask(t_end, window)
    if not mask.any():
        raise ValueError("measurement window lies outside the trace")
    return float(np.abs(trace.rel_errors()[mask]).mean(axis=0).sum())


def total_error_fitness(weights: WeightVector, scenarios, params: ConverterParams,
                loop: LoopConfig, controller="fuzzy") -> float:
    """Scenario-averaged total absolute relative error of the three rails.

    Simulation divergence rejects the candidate with +inf instead of
    raising.
    """
    total = 0.0
    for sc in scenarios:
        t_end = max(sc.snapshot_times)
        run_cfg = replace(loop, sim_duration=t_end)
        try:
            trace = run_closed_loop(params, weights, controller,
                                    list(sc.events), run_cfg, v_in=sc.v_in_initial)
        except DivergenceError:
            return math.inf
        total += window_error_sum(trace, t_end, sc.window)
    return total / len(scenarios)


def normalize_position(position) -> WeightVector:
    """Map a raw [0,1]^3 search point onto the weight simplex."""
    p = [max(0.0, float(x)) for x in position]
    s = sum(p)
    if s < 1e-12:
        return WeightVector.uniform()
    return WeightVector((p[0] / s, p[1] / s, p[2] / s))


def tune_weights(algo: str, scenarios, params: ConverterParams, loop: LoopConfig,
                 seed: int, *, controller="fuzzy", config=None,
                 workers: int | None = None) -> tuple[WeightVector, OptResult]:
    """Search the weight simplex with the chosen algorithm.

    `config` overrides the algorithm's default configuration; the seed
    argument always wins over the config's seed field.  Returns the
    normalized best weights together with the run record (whose
    best_position is the raw search-space point).
    """
    if algo not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algo!r}; expected one of {sorted(ALGORITHMS)}")
    cfg_cls, runner = ALGORITHMS[algo]
    cfg = config if config is not None else cfg_cls()
    if not isinstance(cfg, cfg_cls):
        raise TypeError(f"{algo} expects a {cfg_cls.__name__}")
    cfg = replace(cfg, seed=seed)

    scenarios = list(scenarios)

    def fit(position):
        return total_error_fitness(normalize_position(position), scenarios, params,
                           loop, controller)

    uniform = (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)
    result = runner(WEIGHT_SPACE, cfg, fit, inject=[uniform], workers=workers)
    return normalize_position(result.best_position), result
