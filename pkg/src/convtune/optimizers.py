"""Population metaheuristics behind one contract: PSO, ICA and ACO-R.

All three minimize a scalar fitness over a box-bounded continuous space
and return an OptResult with the best-so-far fitness history.  Runs are
deterministic in (config, seed, fitness): every stochastic move of
candidate i at iteration t draws from its own generator stream keyed by
(seed, t, i), and fitness evaluations are batched after the serial update
phase, so evaluating candidates concurrently cannot change the result.
A fitness may return math.inf to reject a candidate (for example on
simulation divergence); rejected candidates never become bests.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SearchSpace:
    """Box bounds of the decision space."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        if len(self.lower) != len(self.upper) or not self.lower:
            raise ValueError("lower and upper must be same nonzero length")
        if any(lo >= hi for lo, hi in zip(self.lower, self.upper)):
            raise ValueError("lower bound must be strictly below upper bound")

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def lo(self) -> np.ndarray:
        return np.array(self.lower)

    @property
    def hi(self) -> np.ndarray:
        return np.array(self.upper)

    @property
    def range(self) -> np.ndarray:
        return self.hi - self.lo

    def clip(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lo, self.hi)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return self.lo + rng.random(self.dim) * self.range


@dataclass(frozen=True)
class PsoConfig:
    pop_size: int = 50
    max_iter: int = 100
    c1: float = 2.0
    c2: float = 2.0
    inertia: float = 0.72   # the literal printed update has no inertia; w=1 recovers it
    v_max_frac: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.pop_size < 2:
            raise ValueError("pop_size must be >= 2")
        if self.c1 < 0 or self.c2 < 0:
            raise ValueError("c1 and c2 must be non-negative")
        if not 0 < self.v_max_frac <= 1:
            raise ValueError("v_max_frac must be in (0, 1]")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass(frozen=True)
class IcaConfig:
    n_colonies: int = 50
    n_imperialists: int = 20
    max_iter: int = 100
    beta: float = 2.0
    revolution_prob: float = 0.1
    zeta: float = 0.02
    seed: int = 0

    def __post_init__(self):
        if self.n_imperialists < 1:
            raise ValueError("n_imperialists must be >= 1")
        if self.n_colonies < self.n_imperialists:
            raise ValueError("n_colonies must be >= n_imperialists")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass(frozen=True)
class AcorConfig:
    archive_size: int = 10
    n_ants: int = 50
    locality: float = 0.1         # q: smaller focuses sampling on top ranks
    deviation_ratio: float = 0.85  # xi: kernel width as a fraction of archive spread
    max_iter: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.archive_size < 2:
            raise ValueError("archive_size must be >= 2")
        if self.n_ants < 1:
            raise ValueError("n_ants must be >= 1")
        if self.locality <= 0 or self.deviation_ratio <= 0:
            raise ValueError("locality and deviation_ratio must be positive")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass(frozen=True)
class OptResult:
    """Run record: best point, best-so-far history, and evaluation counts."""

    best_position: tuple[float, ...]
    best_fitness: float
    history: tuple[float, ...]       # best-so-far after init and each iteration
    eval_history: tuple[int, ...]    # cumulative evaluations, aligned with history
    convergence_iter: int
    evaluations: int

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("iter,best_fitness,evals\n")
            for i, (f, n) in enumerate(zip(self.history, self.eval_history)):
                fh.write(f"{i},{f:.9g},{n}\n")


def convergence_iteration(history) -> int:
    """First index whose best fitness is within 1% of the final value."""
    final = history[-1]
    for i, f in enumerate(history):
        if f <= final * 1.01:
            return i
    return len(history) - 1


def _candidate_rng(seed: int, iteration: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, iteration, index])


def _evaluate(fitness, positions, workers: int | None) -> list[float]:
    """Fitness of each position, reduced in candidate order."""
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            return [float(f) for f in ex.map(fitness, positions)]
    return [float(fitness(p)) for p in positions]


def _roulette(weights: np.ndarray, rng: np.random.Generator) -> int:
    """Index drawn proportionally to non-negative weights (uniform if all zero)."""
    total = weights.sum()
    if not math.isfinite(total) or total <= 0:
        return int(rng.integers(len(weights)))
    idx = int(np.searchsorted(np.cumsum(weights) / total, rng.random(), side="right"))
    return min(idx, len(weights) - 1)


def _powers(costs: np.ndarray) -> np.ndarray:
    """Selection powers from costs: finite max minus cost, inf mapped to zero."""
    finite = costs[np.isfinite(costs)]
    if finite.size == 0:
        return np.zeros_like(costs)
    top = finite.max()
    p = np.where(np.isfinite(costs), top - costs, 0.0)
    return np.maximum(p, 0.0)


def _initial_positions(space: SearchSpace, n: int, seed: int, inject) -> np.ndarray:
    pos = np.empty((n, space.dim))
    for i in range(n):
        pos[i] = space.sample(_candidate_rng(seed, 0, i))
    if inject:
        for i, p in enumerate(inject[:n]):
            pos[i] = space.clip(np.asarray(p, dtype=float))
    return pos


def _result(best_pos, best_fit, history, eval_history) -> OptResult:
    return OptResult(
        best_position=tuple(float(x) for x in best_pos),
        best_fitness=float(best_fit),
        history=tuple(history),
        eval_history=tuple(eval_history),
        convergence_iter=convergence_iteration(history),
        evaluations=eval_history[-1],
    )


def pso_run(space: SearchSpace, cfg: PsoConfig, fitness, *,
            inject=None, workers: int | None = None) -> OptResult:
    """Particle swarm with inertia, velocity clamp and bound clipping.

    v <- w*v + c1*R1*(pbest - x) + c2*R2*(gbest - x), then x <- x + v,
    with R1, R2 uniform per dimension and bests updated on strict
    improvement.
    """
    dim = space.dim
    v_max = cfg.v_max_frac * space.range
    x = _initial_positions(space, cfg.pop_size, cfg.seed, inject)
    v = np.empty_like(x)
    for i in range(cfg.pop_size):
        v[i] = (2.0 * _candidate_rng(cfg.seed, 0, cfg.pop_size + i).random(dim) - 1.0) * v_max

    fits = np.array(_evaluate(fitness, list(x), workers))
    evals = cfg.pop_size
    pbest = x.copy()
    pbest_fit = fits.copy()
    g = int(np.argmin(fits))
    gbest = x[g].copy()
    gbest_fit = float(fits[g])
    history = [gbest_fit]
    eval_history = [evals]

    for t in range(1, cfg.max_iter + 1):
        for i in range(cfg.pop_size):
            rng = _candidate_rng(cfg.seed, t, i)
            r1 = rng.random(dim)
            r2 = rng.random(dim)
            v[i] = (cfg.inertia * v[i]
                    + cfg.c1 * r1 * (pbest[i] - x[i])
                    + cfg.c2 * r2 * (gbest - x[i]))
            np.clip(v[i], -v_max, v_max, out=v[i])
            x[i] = space.clip(x[i] + v[i])
        fits = np.array(_evaluate(fitness, list(x), workers))
        evals += cfg.pop_size
        for i in range(cfg.pop_size):
            if fits[i] < pbest_fit[i]:
                pbest_fit[i] = fits[i]
                pbest[i] = x[i]
                if fits[i] < gbest_fit:
                    gbest_fit = float(fits[i])
                    gbest = x[i].copy()
        history.append(gbest_fit)
        eval_history.append(evals)

    return _result(gbest, gbest_fit, history, eval_history)


def ica_run(space: SearchSpace, cfg: IcaConfig, fitness, *,
            inject=None, workers: int | None = None,
            inspect=None) -> OptResult:
    """Imperialist competition over n_imperialists + n_colonies countries.

    Colonies assimilate toward their imperialist by a per-dimension step
    uniform in (0, beta * distance), occasionally revolt to a fresh random
    position, and swap roles with their imperialist when they beat it.
    Empire cost is imperialist cost + zeta * mean colony cost; each
    iteration the weakest empire loses its weakest colony by roulette, and
    empires stripped of colonies are absorbed.  Stops at max_iter or when
    a single empire remains.  `inspect(t, n_empires, n_countries)` is
    called after each iteration when provided.
    """
    n_total = cfg.n_imperialists + cfg.n_colonies
    pos = _initial_positions(space, n_total, cfg.seed, inject)
    cost = np.array(_evaluate(fitness, list(pos), workers))
    evals = n_total

    order = np.argsort(cost, kind="stable")
    is_imp = np.zeros(n_total, dtype=bool)
    is_imp[order[: cfg.n_imperialists]] = True
    imp_indices = [int(i) for i in order[: cfg.n_imperialists]]
    empire_of = np.full(n_total, -1, dtype=int)
    for i in imp_indices:
        empire_of[i] = i

    init_rng = _candidate_rng(cfg.seed, 0, n_total)
    imp_powers = _powers(cost[imp_indices])
    for c in order[cfg.n_imperialists:]:
        empire_of[c] = imp_indices[_roulette(imp_powers, init_rng)]

    best_fit = float(cost[order[0]])
    best_pos = pos[order[0]].copy()
    history = [best_fit]
    eval_history = [evals]

    for t in range(1, cfg.max_iter + 1):
        colonies = [i for i in range(n_total) if not is_imp[i]]
        for c in colonies:
            rng = _candidate_rng(cfg.seed, t, c)
            imp = empire_of[c]
            pos[c] = space.clip(pos[c] + cfg.beta * rng.random(space.dim) * (pos[imp] - pos[c]))
            if rng.random() < cfg.revolution_prob:
                pos[c] = space.sample(rng)
        new_costs = _evaluate(fitness, [pos[c] for c in colonies], workers)
        evals += len(colonies)
        for c, f in zip(colonies, new_costs):
            cost[c] = f
            if f < best_fit:
                best_fit = float(f)
                best_pos = pos[c].copy()

        empires = [i for i in range(n_total) if is_imp[i]]
        for imp in empires:
            members = [c for c in colonies if empire_of[c] == imp]
            if not members:
                continue
            b = min(members, key=lambda c: (cost[c], c))
            if cost[b] < cost[imp]:
                pos[b], pos[imp] = pos[imp].copy(), pos[b].copy()
                cost[b], cost[imp] = float(cost[imp]), float(cost[b])

        totals = []
        for imp in empires:
            members = [c for c in colonies if empire_of[c] == imp]
            mean_c = float(np.mean([cost[c] for c in members])) if members else 0.0
            totals.append(cost[imp] + cfg.zeta * mean_c)
        totals = np.asarray(totals)

        if len(empires) > 1:
            w = int(np.argmax(totals))
            weakest = empires[w]
            others = [e for e in empires if e != weakest]
            rng_t = _candidate_rng(cfg.seed, t, n_total)
            dest = others[_roulette(_powers(np.delete(totals, w)), rng_t)]
            members = [c for c in colonies if empire_of[c] == weakest]
            if members:
                worst = max(members, key=lambda c: (cost[c], -c))
                empire_of[worst] = dest
                members.remove(worst)
            if not members:
                is_imp[weakest] = False
                empire_of[weakest] = dest

        history.append(best_fit)
        eval_history.append(evals)
        n_empires = int(is_imp.sum())
        if inspect is not None:
            inspect(t, n_empires, n_total)
        if n_empires <= 1:
            break

    return _result(best_pos, best_fit, history, eval_history)


def acor_run(space: SearchSpace, cfg: AcorConfig, fitness, *,
             inject=None, workers: int | None = None) -> OptResult:
    """Continuous ACO with a ranked solution archive.

    The archive's entries carry Gaussian kernels: ants pick a kernel by
    rank-weighted roulette (locality q) and sample each dimension around
    it with deviation xi * mean absolute distance to the other entries,
    so sampling density concentrates where good solutions accumulate.
    Each generation is merged into the archive, which keeps the k best.
    """
    k = cfg.archive_size
    arch = _initial_positions(space, k, cfg.seed, inject)
    arch_fit = np.array(_evaluate(fitness, list(arch), workers))
    evals = k
    order = np.argsort(arch_fit, kind="stable")
    arch, arch_fit = arch[order], arch_fit[order]

    ranks = np.arange(k)
    kernel_w = np.exp(-(ranks ** 2) / (2.0 * (cfg.locality * k) ** 2))
    kernel_w /= kernel_w.sum()
    kernel_cdf = np.cumsum(kernel_w)

    best_fit = float(arch_fit[0])
    best_pos = arch[0].copy()
    history = [best_fit]
    eval_history = [evals]

    for t in range(1, cfg.max_iter + 1):
        ants = np.empty((cfg.n_ants, space.dim))
        for a in range(cfg.n_ants):
            rng = _candidate_rng(cfg.seed, t, a)
            j = int(np.searchsorted(kernel_cdf, rng.random(), side="right"))
            j = min(j, k - 1)
            sigma = cfg.deviation_ratio * np.abs(arch - arch[j]).sum(axis=0) / (k - 1)
            ants[a] = space.clip(arch[j] + sigma * rng.standard_normal(space.dim))
        ant_fit = np.array(_evaluate(fitness, list(ants), workers))
        evals += cfg.n_ants

        merged = np.vstack([arch, ants])
        merged_fit = np.concatenate([arch_fit, ant_fit])
        order = np.argsort(merged_fit, kind="stable")[:k]
        arch, arch_fit = merged[order], merged_fit[order]
        if arch_fit[0] < best_fit:
            best_fit = float(arch_fit[0])
            best_pos = arch[0].copy()
        history.append(best_fit)
        eval_history.append(evals)

    return _result(best_pos, best_fit, history, eval_history)


ALGORITHMS = {"pso": (PsoConfig, pso_run), "ica": (IcaConfig, ica_run),
              "aco": (AcorConfig, acor_run)}
