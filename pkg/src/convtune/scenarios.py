"""Disturbance experiments, regulation percentages and time-response metrics.

The three built-in experiments are a half-load step on the +5 V output, a
20% load increase on the +15 V output, and an input step from 30 V to
35 V, each at t = 10 ms with snapshots at 6 ms (pre-disturbance) and
16 ms.  Regulation percent is the windowed-mean relative deviation from
the reference, a definition robust against residual ripple.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .loop import LoopConfig, SimTrace, WeightVector, run_closed_loop
from .power_stage import ConverterParams, DisturbanceEvent, InputStep, LoadScale


@dataclass(frozen=True)
class Scenario:
    """One disturbance experiment: initial bus voltage, events and timing."""

    name: str
    v_in_initial: float
    events: tuple[DisturbanceEvent, ...]
    snapshot_times: tuple[float, ...] = (6e-3, 16e-3)
    window: float = 2e-3
    duration: float = 20e-3

    def __post_init__(self):
        if any(not 0 < t <= self.duration for t in self.snapshot_times):
            raise ValueError("snapshot times must lie within the duration")
        if self.window > min(self.snapshot_times):
            raise ValueError("window must not reach before t=0 at the earliest snapshot")
        if any(ev.t_event > self.duration for ev in self.events):
            raise ValueError("events must lie within the duration")


def builtin_scenarios() -> tuple[Scenario, Scenario, Scenario]:
    """The three experiments: +5 V half load, +15 V load +20%, 30->35 V input."""
    return (
        Scenario("load5_half", 28.0, (LoadScale(10e-3, output_index=1, factor=0.5),)),
        Scenario("load15_up20", 28.0, (LoadScale(10e-3, output_index=2, factor=1.2),)),
        Scenario("vin_30to35", 30.0, (InputStep(10e-3, new_v_in=35.0),)),
    )


def named_scenarios() -> dict[str, Scenario]:
    """Built-ins plus a no-event run and the doubled-load +15 V variant."""
    byname = {sc.name: sc for sc in builtin_scenarios()}
    byname["load15_double"] = Scenario(
        "load15_double", 28.0, (LoadScale(10e-3, output_index=2, factor=2.0),))
    byname["nominal"] = Scenario("nominal", 28.0, ())
    return byname


def run_scenario(scenario: Scenario, params: ConverterParams, weights: WeightVector,
                 controller, loop: LoopConfig) -> SimTrace:
    """Closed-loop run of one scenario at its own duration and bus voltage."""
    cfg = replace(loop, sim_duration=scenario.duration)
    return run_closed_loop(params, weights, controller, list(scenario.events),
                           cfg, v_in=scenario.v_in_initial)


def regulation_percent(trace: SimTrace, rail: int, t_snap: float, window: float) -> float:
    """100 * |mean(v_out over [t_snap - window, t_snap]) - v_ref| / |v_ref|."""
    mask = trace.window_mask(t_snap, window)
    if not mask.any() or t_snap - window < trace.t[0] - 1e-12 or t_snap > trace.t[-1] + 1e-12:
        raise ValueError(f"window [{t_snap - window}, {t_snap}] outside the trace")
    ref = trace.v_ref[rail]
    return 100.0 * abs(float(trace.v_out[mask, rail].mean()) - ref) / abs(ref)


@dataclass(frozen=True)
class TimeResponseMetrics:
    overshoot: float       # percent of final value
    settling_time: float   # seconds from t_start
    ss_error: float        # percent of reference
    settled: bool


def time_response(trace: SimTrace, rail: int, t_start: float,
                  window: float = 2e-3, band: float = 0.02) -> TimeResponseMetrics:
    """Overshoot, +-band settling time and steady-state error from t_start.

    The final value is the mean over the trace's last `window`; overshoot
    is the peak magnitude excursion beyond it; settling time is measured
    to the instant after which the signal never leaves the band again.
    A signal still outside the band at the end is flagged unsettled with
    settling_time equal to the analysed span.
    """
    sel = trace.t >= t_start - 1e-12
    if not sel.any():
        raise ValueError("t_start beyond the trace")
    t = trace.t[sel]
    v = np.abs(trace.v_out[sel, rail])
    final = float(np.abs(trace.v_out[trace.window_mask(trace.t[-1], window), rail]).mean())
    if final == 0.0:
        raise ValueError(f"rail {rail} settles at zero; response metrics undefined")
    overshoot = 100.0 * max(0.0, float(v.max()) - final) / abs(final)
    out_of_band = np.abs(v - final) > band * abs(final)
    if not out_of_band.any():
        settling, settled = 0.0, True
    else:
        last_out = int(np.nonzero(out_of_band)[0][-1])
        if last_out == len(t) - 1:
            settling, settled = float(t[-1] - t[0]), False
        else:
            settling, settled = float(t[last_out + 1] - t[0]), True
    ss_error = 100.0 * abs(final - abs(trace.v_ref[rail])) / abs(trace.v_ref[rail])
    return TimeResponseMetrics(overshoot=overshoot, settling_time=settling,
                               ss_error=ss_error, settled=settled)


RAIL_LABELS = ("+5V", "+15V", "-15V")
BASELINE_LABEL = "constant"


@dataclass(frozen=True)
class RegulationReport:
    """Per-rail regulation of one method on one scenario at each snapshot."""

    method: str
    scenario: str
    regulation: tuple[tuple[float, ...], ...]  # [snapshot][rail] percents
    snapshot_times: tuple[float, ...]

    @property
    def totals(self) -> tuple[float, ...]:
        return tuple(sum(rails) for rails in self.regulation)


@dataclass(frozen=True)
class ConvergenceRow:
    method: str
    scenario: str
    convergence_iter: int | None
    total_regulation_pct: float


@dataclass(frozen=True)
class MethodComparison:
    reports: tuple[RegulationReport, ...]
    convergence: tuple[ConvergenceRow, ...]
    flags: tuple[str, ...]
    weights: dict[tuple[str, str], tuple[float, float, float]]

    def regulation_rows(self):
        for rep in self.reports:
            for s_idx, t_snap in enumerate(rep.snapshot_times):
                for r_idx, label in enumerate(RAIL_LABELS):
                    yield {"method": rep.method, "scenario": rep.scenario,
                           "snapshot_ms": t_snap * 1e3, "rail": label,
                           "regulation_pct": rep.regulation[s_idx][r_idx]}

    def regulation_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("method,scenario,snapshot_ms,rail,regulation_pct\n")
            for row in self.regulation_rows():
                fh.write("{method},{scenario},{snapshot_ms:.9g},{rail},"
                         "{regulation_pct:.9g}\n".format(**row))

    def convergence_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("method,scenario,convergence_iter,total_regulation_pct\n")
            for row in self.convergence:
                ci = "" if row.convergence_iter is None else row.convergence_iter
                fh.write(f"{row.method},{row.scenario},{ci},"
                         f"{row.total_regulation_pct:.9g}\n")

    def to_json_obj(self) -> dict:
        return {
            "regulation": list(self.regulation_rows()),
            "convergence": [{"method": r.method, "scenario": r.scenario,
                             "convergence_iter": r.convergence_iter,
                             "total_regulation_pct": r.total_regulation_pct}
                            for r in self.convergence],
            "flags": list(self.flags),
            "weights": {f"{m}/{s}": list(w) for (m, s), w in sorted(self.weights.items())},
        }


def compare_methods(methods, scenarios, params: ConverterParams,
                    loop: LoopConfig) -> MethodComparison:
    """Run each method on each scenario and tabulate regulation.

    `methods` holds (label, weights_or_tuner, controller) triples, where
    the second element is either a WeightVector or a callable
    tuner(scenario) -> (WeightVector, OptResult).  A constant
    uniform-weight baseline row is always included.  Rows come out sorted
    by (method, scenario), so the result is independent of method order.
    """
    entries = list(methods)
    if not entries or not scenarios:
        raise ValueError("methods and scenarios must be nonempty")
    if not any(label == BASELINE_LABEL for label, *_ in entries):
        entries.append((BASELINE_LABEL, WeightVector.uniform(), entries[0][2]))

    reports = []
    convergence = []
    weights_used: dict[tuple[str, str], tuple[float, float, float]] = {}
    totals_at_last: dict[tuple[str, str], float] = {}
    for label, policy, controller in sorted(entries, key=lambda m: m[0]):
        for sc in sorted(scenarios, key=lambda s: s.name):
            conv_iter = None
            if callable(policy):
                weights, record = policy(sc)
                conv_iter = record.convergence_iter
            else:
                weights = policy
            trace = run_scenario(sc, params, weights, controller, loop)
            reg = tuple(tuple(regulation_percent(trace, r, t_snap, sc.window)
                              for r in range(3))
                        for t_snap in sc.snapshot_times)
            rep = RegulationReport(method=label, scenario=sc.name,
                                   regulation=reg, snapshot_times=sc.snapshot_times)
            reports.append(rep)
            weights_used[(label, sc.name)] = weights.k
            totals_at_last[(label, sc.name)] = rep.totals[-1]
            convergence.append(ConvergenceRow(
                method=label, scenario=sc.name, convergence_iter=conv_iter,
                total_regulation_pct=rep.totals[-1]))

    flags = []
    for (label, sc_name), total in sorted(totals_at_last.items()):
        if label == BASELINE_LABEL:
            continue
        base = totals_at_last.get((BASELINE_LABEL, sc_name))
        if base is not None and abs(total - base) < 1e-9:
            flags.append(f"{label}/{sc_name}: total regulation equals the "
                         f"constant baseline ({total:.6g}%)")
    return MethodComparison(reports=tuple(reports), convergence=tuple(convergence),
                            flags=tuple(flags), weights=weights_used)
