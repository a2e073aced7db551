"""Closed-loop engine: weighted error feedback driving one shared duty cycle.

One controller update per switching period (the PWM semantics without the
carrier): sample the outputs, form the weighted total relative error, feed
the controller, clamp the duty, then hold it while the integrator substeps
across the period.  Runs are pure functions of their inputs, so identical
inputs give bit-identical traces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fuzzy import FuzzyConfig, FuzzyController, PIDGains, PidController
from .power_stage import (
    ConverterParams,
    DisturbanceEvent,
    _check_finite,
    _flat_consts,
    _rk4_hold,
    apply_event,
)


@dataclass(frozen=True)
class WeightVector:
    """The three error weighting factors, normalized onto the unit simplex."""

    k: tuple[float, float, float]

    def __post_init__(self):
        if any(v < 0 for v in self.k):
            raise ValueError("weights must be non-negative")
        if abs(sum(self.k) - 1.0) > 1e-9:
            raise ValueError("weights must sum to 1; use WeightVector.normalized")

    @classmethod
    def normalized(cls, values) -> "WeightVector":
        v = [float(x) for x in values]
        if len(v) != 3:
            raise ValueError("exactly three weights required")
        if any(x < 0 for x in v):
            raise ValueError("weights must be non-negative")
        s = sum(v)
        if s <= 0:
            raise ValueError("weights must not all be zero")
        return cls((v[0] / s, v[1] / s, v[2] / s))

    @classmethod
    def uniform(cls) -> "WeightVector":
        return cls((1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0))


@dataclass(frozen=True)
class LoopConfig:
    """Timing and duty limits of the control loop."""

    control_period: float = 20e-6
    dt: float = 2e-6
    duty_min: float = 0.02
    duty_max: float = 0.45
    initial_duty: float = 0.20  # soft start below the ~0.35 operating duty
    sim_duration: float = 20e-3
    sample_stride: int = 1

    def __post_init__(self):
        if not (0.0 <= self.duty_min < self.duty_max <= 0.5):
            raise ValueError("duty limits must satisfy 0 <= min < max <= 0.5")
        if not self.duty_min <= self.initial_duty <= self.duty_max:
            raise ValueError("initial_duty outside duty limits")
        if self.dt <= 0 or self.control_period <= 0 or self.sim_duration <= 0:
            raise ValueError("times must be positive")
        if self.sample_stride < 1:
            raise ValueError("sample_stride must be >= 1")
        n = round(self.control_period / self.dt)
        if n < 1 or abs(n * self.dt - self.control_period) > 1e-12 * self.control_period:
            raise ValueError("control_period must be an integer multiple of dt")

    @property
    def substeps(self) -> int:
        return round(self.control_period / self.dt)


@dataclass
class SimTrace:
    """Sampled closed-loop trajectory (one row per control period x stride)."""

    t: np.ndarray           # (n,)
    v_out: np.ndarray       # (n, 3) signed volts
    i_l: np.ndarray         # (n, 3) amperes
    duty: np.ndarray        # (n,)
    e_total: np.ndarray     # (n,) weighted total relative error
    v_ref: tuple[float, float, float]

    def __len__(self) -> int:
        return len(self.t)

    def window_mask(self, t_end: float, window: float) -> np.ndarray:
        """Samples in [t_end - window, t_end]."""
        eps = 1e-12
        return (self.t >= t_end - window - eps) & (self.t <= t_end + eps)

    def rel_errors(self) -> np.ndarray:
        """Per-rail signed relative errors (positive when under-magnitude)."""
        refs = np.array(self.v_ref)
        return (np.abs(refs) - np.sign(refs) * self.v_out) / np.abs(refs)

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("t,v1,v2,v3,iL1,iL2,iL3,duty,E\n")
            for i in range(len(self.t)):
                row = (self.t[i], *self.v_out[i], *self.i_l[i],
                       self.duty[i], self.e_total[i])
                fh.write(",".join(f"{x:.9g}" for x in row) + "\n")


def weighted_error(v_out, v_ref, weights: WeightVector) -> float:
    """Total weighted relative error, sign-preserving per rail.

    Each rail's error is positive when the output magnitude is below its
    reference magnitude, so dividing by the signed reference handles the
    negative rail.
    """
    total = 0.0
    for k, vo, vr in zip(weights.k, v_out, v_ref):
        total += k * (vr - vo) / vr
    return total


def make_controller(controller):
    """Resolve a controller spec: name, config object, or step-capable object."""
    if isinstance(controller, str):
        if controller == "fuzzy":
            return FuzzyController()
        if controller == "pid":
            return PidController()
        raise ValueError(f"unknown controller {controller!r}")
    if isinstance(controller, FuzzyConfig):
        return FuzzyController(controller)
    if isinstance(controller, PIDGains):
        return PidController(controller)
    if hasattr(controller, "step"):
        return controller
    raise TypeError(f"cannot build a controller from {type(controller).__name__}")


def run_closed_loop(params: ConverterParams, weights: WeightVector, controller,
                    events: list[DisturbanceEvent], loop: LoopConfig,
                    v_in: float | None = None) -> SimTrace:
    """Simulate the weighted-error control loop from zero state.

    Events are applied at the control-period boundary at (or immediately
    after) their timestamp.  The error difference at the first period is
    zero (no earlier sample exists).
    """
    if v_in is None:
        v_in = params.v_in_nominal
    if loop.dt > 1.0 / (10.0 * params.f_sw) + 1e-18:
        raise ValueError("integrator dt must not exceed a tenth of the switching period")
    period = loop.control_period
    n_periods = round(loop.sim_duration / period)
    if any(events[i + 1].t_event < events[i].t_event for i in range(len(events) - 1)):
        raise ValueError("events must be sorted by time")
    event_at: dict[int, list[DisturbanceEvent]] = {}
    for ev in events:
        idx = math.ceil(ev.t_event / period - 1e-9)
        if idx > n_periods:
            raise ValueError(f"event at t={ev.t_event} falls beyond sim_duration")
        event_at.setdefault(idx, []).append(ev)

    ctl = make_controller(controller)
    if hasattr(ctl, "reset"):
        ctl.reset()
    refs = params.v_refs
    signs = tuple(1.0 if r > 0 else -1.0 for r in refs)
    consts = _flat_consts(params)
    n_sub = loop.substeps
    stride = loop.sample_stride
    n_samples = n_periods // stride + 1
    ts = np.empty(n_samples)
    vs = np.empty((n_samples, 3))
    ils = np.empty((n_samples, 3))
    duties = np.empty(n_samples)
    errs = np.empty(n_samples)

    i1 = i2 = i3 = v1 = v2 = v3 = 0.0
    duty = loop.initial_duty
    prev_e = None
    row = 0
    for k in range(n_periods + 1):
        t_k = k * period
        if k in event_at:
            for ev in event_at[k]:
                params, v_in = apply_event(params, v_in, ev)
            consts = _flat_consts(params)
        rl1, rl2, rl3 = (params.outputs[0].r_load, params.outputs[1].r_load,
                         params.outputs[2].r_load)
        rc1, rc2, rc3 = params.r_c
        o1 = (v1 + rc1 * i1) * rl1 / (rl1 + rc1)
        o2 = (v2 + rc2 * i2) * rl2 / (rl2 + rc2)
        o3 = (v3 + rc3 * i3) * rl3 / (rl3 + rc3)
        vo = (signs[0] * o1, signs[1] * o2, signs[2] * o3)
        e = weighted_error(vo, refs, weights)
        de = 0.0 if prev_e is None else e - prev_e
        prev_e = e
        duty = ctl.step(e, de, period, duty)
        if duty < loop.duty_min:
            duty = loop.duty_min
        elif duty > loop.duty_max:
            duty = loop.duty_max
        if k % stride == 0:
            ts[row] = t_k
            vs[row, 0], vs[row, 1], vs[row, 2] = vo
            ils[row, 0], ils[row, 1], ils[row, 2] = i1, i2, i3
            duties[row] = duty
            errs[row] = e
            row += 1
        if k < n_periods:
            i1, i2, i3, v1, v2, v3 = _rk4_hold(i1, i2, i3, v1, v2, v3,
                                               duty, v_in, loop.dt, n_sub, consts)
            _check_finite((i1, i2, i3, v1, v2, v3), t_k + period)

    return SimTrace(t=ts[:row], v_out=vs[:row], i_l=ils[:row],
                    duty=duties[:row], e_total=errs[:row], v_ref=refs)
