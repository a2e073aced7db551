"""Mamdani fuzzy duty-cycle controller and the PID baseline.

Seven uniformly spaced triangular linguistic terms (NB..PB) cover the
normalized universe [-1, 1] for both inputs (scaled error and error
difference) and the output (scaled duty increment).  Rules fire by min,
combine per consequent by max, and the clipped consequents aggregate
pointwise; the crisp output is the center of gravity of the aggregate,
evaluated by midpoint quadrature on a fixed 201-point grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

LINGUISTIC_TERMS = ("NB", "NM", "NS", "ZE", "PS", "PM", "PB")
TERM_INDEX = {name: i for i, name in enumerate(LINGUISTIC_TERMS)}

# Midpoint-rule grid: 201 equal cells over [-1, 1], sampled at cell centers.
DEFUZZ_POINTS = 201
DEFUZZ_GRID = -1.0 + (np.arange(DEFUZZ_POINTS) + 0.5) * (2.0 / DEFUZZ_POINTS)


@dataclass(frozen=True)
class TriangularMF:
    """Triangular membership function with breakpoints a <= b <= c.

    Degenerate shoulders (a == b or b == c) give the saturating edge
    terms NB and PB.
    """

    a: float
    b: float
    c: float

    def __post_init__(self):
        if not self.a <= self.b <= self.c:
            raise ValueError("breakpoints must satisfy a <= b <= c")

    def membership(self, x: float) -> float:
        if x < self.a or x > self.c:
            return 0.0
        if x < self.b:
            return (x - self.a) / (self.b - self.a)
        if x > self.b:
            return (self.c - x) / (self.c - self.b)
        return 1.0

    def profile(self, grid: np.ndarray) -> np.ndarray:
        """Membership evaluated on a grid (vectorized)."""
        up = np.zeros_like(grid) if self.a == self.b else (grid - self.a) / (self.b - self.a)
        down = np.zeros_like(grid) if self.b == self.c else (self.c - grid) / (self.c - self.b)
        mu = np.where(grid < self.b, up, down)
        mu[grid == self.b] = 1.0
        return np.clip(mu, 0.0, 1.0)


@dataclass(frozen=True)
class MembershipSet:
    """The seven term MFs over [-1, 1], indexed NB..PB."""

    mfs: tuple[TriangularMF, ...]

    def __post_init__(self):
        if len(self.mfs) != 7:
            raise ValueError("a membership set has exactly 7 terms")

    @classmethod
    def standard(cls) -> "MembershipSet":
        """Centers at k/3 for k = -3..3, half-width 1/3, saturating edges."""
        third = 1.0 / 3.0
        mfs = []
        for k in range(-3, 4):
            center = k * third
            a = max(-1.0, center - third)
            c = min(1.0, center + third)
            mfs.append(TriangularMF(a, center, c))
        return cls(tuple(mfs))

    def grades(self, x: float) -> np.ndarray:
        return np.array([mf.membership(x) for mf in self.mfs])


# Rule consequents, rows = error term NB..PB, columns = error-difference
# term NB..PB.  The table saturates along anti-diagonals: both inputs
# strongly negative demand the largest duty cut, and symmetrically.
_RULE_TABLE = (
    ("NB", "NB", "NB", "NB", "NM", "NS", "ZE"),
    ("NB", "NB", "NB", "NM", "NS", "ZE", "PS"),
    ("NB", "NB", "NM", "NS", "ZE", "PS", "PM"),
    ("NB", "NM", "NS", "ZE", "PS", "PM", "PB"),
    ("NM", "NS", "ZE", "PS", "PM", "PB", "PB"),
    ("NS", "ZE", "PS", "PM", "PB", "PB", "PB"),
    ("ZE", "PS", "PM", "PB", "PB", "PB", "PB"),
)


@dataclass(frozen=True)
class FuzzyRuleBase:
    """7x7 map from (error term, error-difference term) to an output term."""

    table: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        if len(self.table) != 7 or any(len(row) != 7 for row in self.table):
            raise ValueError("rule base must be a 7x7 table")
        for row in self.table:
            for cell in row:
                if cell not in TERM_INDEX:
                    raise ValueError(f"unknown term mnemonic {cell!r}")

    @classmethod
    def default(cls) -> "FuzzyRuleBase":
        return cls(_RULE_TABLE)

    @classmethod
    def from_text(cls, text: str) -> "FuzzyRuleBase":
        """Parse a whitespace-separated 7x7 grid of term mnemonics.

        Lines starting with '#' are comments.
        """
        rows = []
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            rows.append(tuple(line.split()))
        if len(rows) != 7:
            raise ValueError(f"expected 7 rule rows, got {len(rows)}")
        return cls(tuple(rows))

    @classmethod
    def from_file(cls, path) -> "FuzzyRuleBase":
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read())

    def output_index(self, e_idx: int, de_idx: int) -> int:
        return TERM_INDEX[self.table[e_idx][de_idx]]


def packaged_rule_base() -> FuzzyRuleBase:
    """Rule base loaded from the plain-text grid shipped with the package."""
    text = resources.files("convtune").joinpath("data/rule_base.txt").read_text("utf-8")
    return FuzzyRuleBase.from_text(text)


def fuzzify(x: float, ms: MembershipSet) -> np.ndarray:
    """Membership grades of x (clamped to [-1, 1]) in all seven terms."""
    if x < -1.0:
        x = -1.0
    elif x > 1.0:
        x = 1.0
    return ms.grades(x)


def infer(mu_e: np.ndarray, mu_de: np.ndarray, rb: FuzzyRuleBase,
          out_profiles: np.ndarray | None = None) -> np.ndarray:
    """Max-min inference: aggregated output membership on the defuzz grid.

    Each rule fires at min(mu_e[i], mu_de[j]); per output term the firing
    strengths combine by max; the aggregate is the pointwise max of the
    clipped output MFs.
    """
    if out_profiles is None:
        out_profiles = _STD_OUT_PROFILES
    strengths = np.zeros(7)
    for i in np.nonzero(mu_e)[0]:
        ge = mu_e[i]
        for j in np.nonzero(mu_de)[0]:
            w = min(ge, mu_de[j])
            k = rb.output_index(i, j)
            if w > strengths[k]:
                strengths[k] = w
    if not strengths.any():
        return np.zeros(DEFUZZ_POINTS)
    return np.max(np.minimum(strengths[:, None], out_profiles), axis=0)


def defuzzify_centroid(aggregate: np.ndarray) -> tuple[float, bool]:
    """Center of gravity of the aggregate; (0.0, False) when nothing fired."""
    den = float(aggregate.sum())
    if den == 0.0:
        return 0.0, False
    return float((DEFUZZ_GRID * aggregate).sum() / den), True


@dataclass(frozen=True)
class FuzzyConfig:
    """Scaling gains mapping physical signals onto the normalized universe.

    g_e saturates the error input at 1/g_e per-unit (20% relative error at
    the default), g_de scales the per-period error difference (the
    derivative action that damps the LC resonance), and g_dd converts the
    crisp output into a duty increment per control period (the integral
    strength; too high and the loop limit-cycles against the filter poles).
    """

    g_e: float = 5.0
    g_de: float = 200.0
    g_dd: float = 0.01
    membership: MembershipSet = field(default_factory=MembershipSet.standard)
    rules: FuzzyRuleBase = field(default_factory=FuzzyRuleBase.default)

    def __post_init__(self):
        for name in ("g_e", "g_de", "g_dd"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and positive")


def flc_step(e: float, de: float, cfg: FuzzyConfig) -> float:
    """Duty increment for one control period from (error, error difference)."""
    mu_e = fuzzify(cfg.g_e * e, cfg.membership)
    mu_de = fuzzify(cfg.g_de * de, cfg.membership)
    agg = infer(mu_e, mu_de, cfg.rules, _out_profiles(cfg.membership))
    crisp, _ = defuzzify_centroid(agg)
    return cfg.g_dd * crisp


_STD_MEMBERSHIP = MembershipSet.standard()
_STD_OUT_PROFILES = np.stack([mf.profile(DEFUZZ_GRID) for mf in _STD_MEMBERSHIP.mfs])
_PROFILE_CACHE: dict[tuple, np.ndarray] = {}


def _out_profiles(ms: MembershipSet) -> np.ndarray:
    key = tuple((mf.a, mf.b, mf.c) for mf in ms.mfs)
    cached = _PROFILE_CACHE.get(key)
    if cached is None:
        cached = np.stack([mf.profile(DEFUZZ_GRID) for mf in ms.mfs])
        _PROFILE_CACHE[key] = cached
    return cached


class FuzzyController:
    """Incremental (velocity-form) controller: D(t) = D(t-1) + dD."""

    def __init__(self, cfg: FuzzyConfig | None = None):
        self.cfg = cfg or FuzzyConfig()
        # hot-path copies of the inference tables
        self._profiles = _out_profiles(self.cfg.membership)
        self._rules = self.cfg.rules

    def reset(self) -> None:
        pass  # stateless between runs; dE is supplied by the loop

    def step(self, e: float, de: float, dt: float, duty: float) -> float:
        cfg = self.cfg
        mu_e = fuzzify(cfg.g_e * e, cfg.membership)
        mu_de = fuzzify(cfg.g_de * de, cfg.membership)
        agg = infer(mu_e, mu_de, self._rules, self._profiles)
        crisp, _ = defuzzify_centroid(agg)
        return duty + cfg.g_dd * crisp


@dataclass(frozen=True)
class PIDGains:
    """Positional PID on the total weighted error, in per-unit error terms."""

    kp: float = 0.05
    ki: float = 100.0     # 1/s
    kd: float = 2e-4      # s
    bias: float = 0.25    # starting duty; the integral carries the rest
    integral_min: float = -0.004
    integral_max: float = 0.004
    duty_min: float = 0.02
    duty_max: float = 0.45

    def __post_init__(self):
        if not (0.0 <= self.duty_min < self.duty_max <= 0.5):
            raise ValueError("duty limits must satisfy 0 <= min < max <= 0.5")
        if self.integral_min > self.integral_max:
            raise ValueError("integral clamp bounds are inverted")


@dataclass
class PidState:
    """Mutable per-run PID state: clamped integral and the last error."""

    integral: float = 0.0
    last_e: float | None = None


def _pid_output(e: float, de: float, dt: float, gains: PIDGains, integral: float) -> float:
    out = gains.bias + gains.kp * e + gains.ki * integral + gains.kd * de / dt
    return min(gains.duty_max, max(gains.duty_min, out))


def pid_step(e: float, dt: float, gains: PIDGains, state: PidState) -> float:
    """One positional PID update; derivative is the first difference of e."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    de = 0.0 if state.last_e is None else e - state.last_e
    state.last_e = e
    state.integral = min(gains.integral_max,
                         max(gains.integral_min, state.integral + e * dt))
    return _pid_output(e, de, dt, gains, state.integral)


class PidController:
    """Loop adapter around pid_step; the loop supplies the error difference."""

    def __init__(self, gains: PIDGains | None = None):
        self.gains = gains or PIDGains()
        self.state = PidState()

    def reset(self) -> None:
        self.state = PidState()

    def step(self, e: float, de: float, dt: float, duty: float) -> float:
        g = self.gains
        self.state.last_e = e
        self.state.integral = min(g.integral_max,
                                  max(g.integral_min, self.state.integral + e * dt))
        return _pid_output(e, de, dt, g, self.state.integral)
