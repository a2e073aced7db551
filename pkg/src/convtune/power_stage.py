"""State-space averaged model of a three-output forward DC-DC converter.

The power stage is the 5V/50W, +15V/45W, -15V/15W forward topology running
at 50 kHz from a nominal 28 V bus (18-40 V range).  Each output is an LC
filter fed through the transformer during the on-time; averaging over a
switching period gives, per rail (all rails in magnitude coordinates, the
negative rail's sign is restored by :func:`output_voltages`):

    d(i_L)/dt = (D * n * v_in_eff - v_out - i_L * r_series) / L
    d(v_C)/dt = (i_L - i_load) / C

with v_out = (v_C + r_c * i_L) * r_load / (r_load + r_c) solving the ESR
divider algebraically, and v_in_eff = v_in - (r_d + r_primary) * sum(n_i *
i_L_i) accounting for the conduction-time drop of the total reflected
primary current.  Sub-switching-period effects (leakage commutation,
ripple) are outside the model; leakage inductances are lumped into
r_series as an effective drop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace


class DivergenceError(RuntimeError):
    """Integrator produced a non-finite state component."""

    def __init__(self, component: str, t: float):
        super().__init__(f"state component {component!r} became non-finite at t={t:.6e} s")
        self.component = component
        self.t = t


@dataclass(frozen=True)
class OutputSpec:
    """Ratings and transformer ratio of one output rail."""

    v_ref: float        # volts, signed (rail 3 is the negative rail)
    p_rated: float      # watts
    r_load: float       # ohms
    turns_ratio: float  # secondary/primary

    def __post_init__(self):
        if self.p_rated <= 0:
            raise ValueError("p_rated must be positive")
        if self.r_load <= 0:
            raise ValueError("r_load must be positive")
        if self.v_ref == 0:
            raise ValueError("v_ref must be nonzero")
        if self.turns_ratio <= 0:
            raise ValueError("turns_ratio must be positive")

    @classmethod
    def from_ratings(cls, v_ref: float, p_rated: float, turns_ratio: float) -> "OutputSpec":
        """Build a spec with r_load = v_ref^2 / p_rated (full rated load)."""
        return cls(v_ref=v_ref, p_rated=p_rated,
                   r_load=v_ref * v_ref / p_rated, turns_ratio=turns_ratio)


@dataclass(frozen=True)
class ConverterParams:
    """Component values, ratings and parasitics of the converter."""

    v_in_nominal: float
    v_in_min: float
    v_in_max: float
    f_sw: float
    outputs: tuple[OutputSpec, OutputSpec, OutputSpec]
    l: tuple[float, float, float]         # filter inductances, H
    c: tuple[float, float, float]         # filter capacitances, F
    r_c: tuple[float, float, float]       # capacitor ESR, ohm
    r_series: tuple[float, float, float]  # lumped secondary winding + diode + leakage, ohm
    r_d: float                            # source resistance, ohm
    r_primary: float                      # primary winding + both switch on-resistances, ohm

    def __post_init__(self):
        if not (self.v_in_min <= self.v_in_nominal <= self.v_in_max):
            raise ValueError("v_in_nominal must lie within [v_in_min, v_in_max]")
        if self.f_sw <= 0:
            raise ValueError("f_sw must be positive")
        if len(self.outputs) != 3:
            raise ValueError("exactly three outputs required")
        for name in ("l", "c"):
            if any(v <= 0 for v in getattr(self, name)):
                raise ValueError(f"all {name} values must be positive")
        for name in ("r_c", "r_series"):
            if any(v < 0 for v in getattr(self, name)):
                raise ValueError(f"{name} values must be non-negative")
        if self.r_d < 0 or self.r_primary < 0:
            raise ValueError("r_d and r_primary must be non-negative")

    @property
    def v_refs(self) -> tuple[float, float, float]:
        return tuple(o.v_ref for o in self.outputs)  # type: ignore[return-value]


@dataclass(frozen=True)
class ConverterState:
    """Inductor currents and capacitor voltages (magnitude coordinates)."""

    i_l: tuple[float, float, float]  # A
    v_c: tuple[float, float, float]  # V
    t: float = 0.0                   # s

    @classmethod
    def zero(cls) -> "ConverterState":
        return cls(i_l=(0.0, 0.0, 0.0), v_c=(0.0, 0.0, 0.0), t=0.0)


@dataclass(frozen=True)
class LoadScale:
    """Load power on one output changes to `factor` times the rated power.

    Halving the load (factor 0.5) at fixed voltage doubles the load
    resistance, so r_load is divided by `factor`.
    """

    t_event: float
    output_index: int  # 1-based rail index
    factor: float


@dataclass(frozen=True)
class InputStep:
    """Input bus voltage steps to a new value."""

    t_event: float
    new_v_in: float


DisturbanceEvent = LoadScale | InputStep

# Defaults below are declared, not recovered: the reference plant's L, C and
# parasitics were never published.  Magnitudes are typical for a 50 kHz
# three-output forward converter with millisecond-scale settling.
_DEFAULT_L = (100e-6, 100e-6, 100e-6)
_DEFAULT_C = (1000e-6, 470e-6, 470e-6)
_DEFAULT_R_C = (0.030, 0.030, 0.030)
# The 10 A rail gets a low-resistance secondary; the series drops set how far
# the rails' preferred duties spread under load steps, and these values keep
# the spread inside the regulation budget.
_DEFAULT_R_SERIES = (0.012, 0.040, 0.040)
_DEFAULT_R_D = 0.020
_DEFAULT_R_PRIMARY = 0.060

# Turns ratios place all three rails on their references at a shared duty of
# about 0.35 at v_in = 28 V and rated load, compensating the series drops.
# The two 15 V rails share one ratio (a physical transformer constraint), so
# their unequal load currents leave a small, genuinely irreducible
# cross-regulation spread; the 5 V ratio is backed off 0.2% so the uniform
# weighting is near, but not at, the total-error optimum.
_DEFAULT_TURNS = (0.5395, 1.5923, 1.5923)


def derive_default_params() -> ConverterParams:
    """Default plant: ratings from the 5V/50W, 15V/45W, -15V/15W design."""
    outputs = (
        OutputSpec.from_ratings(5.0, 50.0, _DEFAULT_TURNS[0]),
        OutputSpec.from_ratings(15.0, 45.0, _DEFAULT_TURNS[1]),
        OutputSpec.from_ratings(-15.0, 15.0, _DEFAULT_TURNS[2]),
    )
    return ConverterParams(
        v_in_nominal=28.0,
        v_in_min=18.0,
        v_in_max=40.0,
        f_sw=50e3,
        outputs=outputs,
        l=_DEFAULT_L,
        c=_DEFAULT_C,
        r_c=_DEFAULT_R_C,
        r_series=_DEFAULT_R_SERIES,
        r_d=_DEFAULT_R_D,
        r_primary=_DEFAULT_R_PRIMARY,
    )


def _flat_consts(params: ConverterParams) -> tuple[float, ...]:
    """Flatten the parameters used by the integrator into one tuple."""
    o = params.outputs
    return (
        o[0].turns_ratio, o[1].turns_ratio, o[2].turns_ratio,
        params.l[0], params.l[1], params.l[2],
        params.c[0], params.c[1], params.c[2],
        params.r_c[0], params.r_c[1], params.r_c[2],
        params.r_series[0], params.r_series[1], params.r_series[2],
        o[0].r_load, o[1].r_load, o[2].r_load,
        params.r_d + params.r_primary,
    )


def _derivative(i1, i2, i3, v1, v2, v3, duty, v_in, k):
    """Time derivatives of the six-state averaged model (magnitudes)."""
    (n1, n2, n3, l1, l2, l3, c1, c2, c3,
     rc1, rc2, rc3, rs1, rs2, rs3, rl1, rl2, rl3, rp) = k
    v_eff = v_in - rp * (n1 * i1 + n2 * i2 + n3 * i3)
    o1 = (v1 + rc1 * i1) * rl1 / (rl1 + rc1)
    o2 = (v2 + rc2 * i2) * rl2 / (rl2 + rc2)
    o3 = (v3 + rc3 * i3) * rl3 / (rl3 + rc3)
    return (
        (duty * n1 * v_eff - o1 - i1 * rs1) / l1,
        (duty * n2 * v_eff - o2 - i2 * rs2) / l2,
        (duty * n3 * v_eff - o3 - i3 * rs3) / l3,
        (i1 - o1 / rl1) / c1,
        (i2 - o2 / rl2) / c2,
        (i3 - o3 / rl3) / c3,
    )


def _rk4_hold(i1, i2, i3, v1, v2, v3, duty, v_in, dt, n_steps, k):
    """Advance the six states by n_steps fixed RK4 steps at constant duty.

    Inductor currents are clamped at zero after every step: the output
    rectifier blocks reverse conduction, so the averaged current cannot
    go negative.
    """
    h2 = 0.5 * dt
    h6 = dt / 6.0
    for _ in range(n_steps):
        a1, a2, a3, a4, a5, a6 = _derivative(i1, i2, i3, v1, v2, v3, duty, v_in, k)
        b1, b2, b3, b4, b5, b6 = _derivative(
            i1 + h2 * a1, i2 + h2 * a2, i3 + h2 * a3,
            v1 + h2 * a4, v2 + h2 * a5, v3 + h2 * a6, duty, v_in, k)
        c1_, c2_, c3_, c4_, c5_, c6_ = _derivative(
            i1 + h2 * b1, i2 + h2 * b2, i3 + h2 * b3,
            v1 + h2 * b4, v2 + h2 * b5, v3 + h2 * b6, duty, v_in, k)
        d1, d2, d3, d4, d5, d6 = _derivative(
            i1 + dt * c1_, i2 + dt * c2_, i3 + dt * c3_,
            v1 + dt * c4_, v2 + dt * c5_, v3 + dt * c6_, duty, v_in, k)
        i1 += h6 * (a1 + 2.0 * (b1 + c1_) + d1)
        i2 += h6 * (a2 + 2.0 * (b2 + c2_) + d2)
        i3 += h6 * (a3 + 2.0 * (b3 + c3_) + d3)
        v1 += h6 * (a4 + 2.0 * (b4 + c4_) + d4)
        v2 += h6 * (a5 + 2.0 * (b5 + c5_) + d5)
        v3 += h6 * (a6 + 2.0 * (b6 + c6_) + d6)
        if i1 < 0.0:
            i1 = 0.0
        if i2 < 0.0:
            i2 = 0.0
        if i3 < 0.0:
            i3 = 0.0
    return i1, i2, i3, v1, v2, v3


_STATE_NAMES = ("i_L1", "i_L2", "i_L3", "v_C1", "v_C2", "v_C3")


def _check_finite(values, t: float) -> None:
    for name, v in zip(_STATE_NAMES, values):
        if not math.isfinite(v):
            raise DivergenceError(name, t)


def output_voltages(state: ConverterState, params: ConverterParams) -> tuple[float, float, float]:
    """Signed output voltages including the ESR drop (negative rail restored)."""
    out = []
    for idx in range(3):
        rl = params.outputs[idx].r_load
        rc = params.r_c[idx]
        v = (state.v_c[idx] + rc * state.i_l[idx]) * rl / (rl + rc)
        out.append(-v if params.outputs[idx].v_ref < 0 else v)
    return tuple(out)  # type: ignore[return-value]


def state_derivative(state: ConverterState, params: ConverterParams,
                     duty: float, v_in: float) -> tuple[float, ...]:
    """d/dt of (i_L1..3, v_C1..3) at the given operating point.

    Raises DivergenceError on a non-finite input state and ValueError on a
    duty outside the forward converter's [0, 0.5] reset-constrained range.
    """
    _check_finite(state.i_l + state.v_c, state.t)
    if not 0.0 <= duty <= 0.5:
        raise ValueError(f"duty {duty} outside [0, 0.5]")
    return _derivative(*state.i_l, *state.v_c, duty, v_in, _flat_consts(params))


def integrate_step(state: ConverterState, params: ConverterParams,
                   duty: float, v_in: float, dt: float) -> ConverterState:
    """One fixed RK4 step; i_L clamped at zero afterwards."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if dt > 1.0 / (10.0 * params.f_sw):
        raise ValueError("dt must not exceed a tenth of the switching period")
    if not 0.0 <= duty <= 0.5:
        raise ValueError(f"duty {duty} outside [0, 0.5]")
    _check_finite(state.i_l + state.v_c, state.t)
    nxt = _rk4_hold(*state.i_l, *state.v_c, duty, v_in, dt, 1, _flat_consts(params))
    _check_finite(nxt, state.t + dt)
    return ConverterState(i_l=nxt[:3], v_c=nxt[3:], t=state.t + dt)


def apply_event(params: ConverterParams, v_in: float,
                event: DisturbanceEvent) -> tuple[ConverterParams, float]:
    """Return the (params, v_in) pair after a disturbance event."""
    if isinstance(event, LoadScale):
        if event.output_index not in (1, 2, 3):
            raise ValueError(f"output_index {event.output_index} out of range")
        if event.factor <= 0:
            raise ValueError("load factor must be positive")
        idx = event.output_index - 1
        outputs = list(params.outputs)
        outputs[idx] = replace(outputs[idx], r_load=outputs[idx].r_load / event.factor)
        return replace(params, outputs=tuple(outputs)), v_in
    if isinstance(event, InputStep):
        if not params.v_in_min <= event.new_v_in <= params.v_in_max:
            raise ValueError(
                f"v_in {event.new_v_in} outside [{params.v_in_min}, {params.v_in_max}]")
        return params, event.new_v_in
    raise TypeError(f"unknown event type {type(event).__name__}")
