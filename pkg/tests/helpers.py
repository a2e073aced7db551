"""Shared test fixtures: independent oracles and a cheap test plant."""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from convtune.fuzzy import FuzzyConfig
from convtune.loop import LoopConfig
from convtune.power_stage import ConverterParams, ConverterState, LoadScale, derive_default_params
from convtune.scenarios import Scenario


def solve_equilibrium(params: ConverterParams, duty: float, v_in: float,
                      damping: float = 0.5, iters: int = 4000) -> ConverterState:
    """Equilibrium by damped fixed-point iteration, independent of the integrator.

    Fixed point of: i_L = (duty*n*v_eff - v_out) / r_series resolved
    against v_out = i_L * r_load (zero capacitor current), with v_eff
    recomputed from the currents each sweep.
    """
    n = [o.turns_ratio for o in params.outputs]
    rl = [o.r_load for o in params.outputs]
    rs = params.r_series
    rp = params.r_d + params.r_primary
    i = [0.0, 0.0, 0.0]
    for _ in range(iters):
        v_eff = v_in - rp * sum(n[j] * i[j] for j in range(3))
        for j in range(3):
            target = duty * n[j] * v_eff / (rl[j] + rs[j])
            i[j] = i[j] + damping * (target - i[j])
    v_c = [i[j] * rl[j] for j in range(3)]
    return ConverterState(i_l=tuple(i), v_c=tuple(v_c), t=0.0)


def second_order_step(t: np.ndarray, zeta: float, wn: float) -> np.ndarray:
    """Unit step response of a standard underdamped second-order system."""
    wd = wn * np.sqrt(1.0 - zeta * zeta)
    phi = np.arccos(zeta)
    return 1.0 - np.exp(-zeta * wn * t) / np.sqrt(1.0 - zeta * zeta) * np.sin(wd * t + phi)


def fast_params() -> ConverterParams:
    """Default plant slowed to a 2.5 kHz switching rate.

    At 400 us control periods the stock LC filters settle within a few
    dozen periods, so a full closed-loop run costs ~400 integrator steps,
    cheap enough for brute-force weight grids.
    """
    return replace(derive_default_params(), f_sw=2.5e3)


def fast_loop() -> LoopConfig:
    return LoopConfig(control_period=400e-6, dt=40e-6, initial_duty=0.3,
                      sim_duration=16e-3)


def fast_controller() -> FuzzyConfig:
    # g_de rescaled for the 20x longer control period
    return FuzzyConfig(g_de=10.0, g_dd=0.01)


def fast_scenario() -> Scenario:
    return Scenario("fast_load5", 28.0,
                    (LoadScale(8e-3, output_index=1, factor=0.5),),
                    snapshot_times=(6e-3, 16e-3), window=2e-3, duration=16e-3)


def simplex_grid(n: int):
    """All weight triples (i/n, j/n, 1-i/n-j/n) with non-negative parts."""
    pts = []
    for i in range(n + 1):
        for j in range(n + 1 - i):
            k3 = 1.0 - i / n - j / n
            pts.append((i / n, j / n, max(0.0, k3)))
    return pts
