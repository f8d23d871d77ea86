"""Population metrics over a metagame tensor: Mean, replicator Fitness, deviation ratings.

Everything here is deterministic; no random numbers are drawn.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .tournament import MetagameTensor

SIMPLEX_TOL = 1e-9
TIE_TOL = 1e-7
MAX_KINDS = 12


@dataclass(frozen=True)
class PopulationState:
    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("population must be a non-empty vector")
        if np.any(p < -SIMPLEX_TOL) or abs(p.sum() - 1.0) > SIMPLEX_TOL:
            raise ValueError(f"population {p} is not on the simplex")
        p = np.clip(p, 0.0, None)
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @classmethod
    def uniform(cls, k: int) -> "PopulationState":
        return cls(np.full(k, 1.0 / k))


@dataclass(frozen=True)
class ReplicatorConfig:
    steps: int = 1000
    learning_rate: float = 0.1

    def __post_init__(self):
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError(f"steps must be a positive integer, got {self.steps}")
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")


def _seat_views(means: np.ndarray) -> list[np.ndarray]:
    """Per seat, the payoff array with that seat's kind axis moved to the front."""
    return [np.moveaxis(means[..., s], s, 0) for s in range(means.shape[-1])]


def _fitness(views: list[np.ndarray], p: np.ndarray) -> np.ndarray:
    """Seat-averaged expected payoff per kind, other seats i.i.d. from ``p``."""
    total = np.zeros(p.size)
    for x in views:
        for _ in range(x.ndim - 1):
            x = x @ p
        total += x
    return total / len(views)


def fitness_vector(tensor: MetagameTensor, pop: PopulationState) -> np.ndarray:
    """Seat-averaged expected payoff of every kind against ``pop``."""
    tensor.require_complete()
    if pop.probs.size != len(tensor.kinds):
        raise ValueError("population size does not match the roster")
    return _fitness(_seat_views(tensor.means), pop.probs)


def population_fitness(tensor: MetagameTensor, pop: PopulationState, kind) -> float:
    return float(fitness_vector(tensor, pop)[tensor.index(kind)])


def _step(views: list[np.ndarray], p: np.ndarray, eta: float) -> np.ndarray:
    f = _fitness(views, p)
    # Shifting by the max leaves the update unchanged and keeps exp() bounded.
    w = p * np.exp(eta * (f - f.max()))
    return w / w.sum()


def replicator_step(tensor: MetagameTensor, pop: PopulationState,
                    config: ReplicatorConfig = ReplicatorConfig()) -> PopulationState:
    tensor.require_complete()
    return PopulationState(_step(_seat_views(_centered(tensor.means)), pop.probs, config.learning_rate))


def _centered(means: np.ndarray) -> np.ndarray:
    # Removing a common constant first makes trajectories invariant to payoff shifts.
    return means - means.min()


@dataclass
class FitnessResult:
    fitness: np.ndarray
    final: PopulationState
    trajectory: np.ndarray  # (steps + 1, K), starting from uniform


def fitness_metric(tensor: MetagameTensor, config: ReplicatorConfig = ReplicatorConfig()
                   ) -> FitnessResult:
    """Run replicator dynamics from uniform; report each kind's fitness against the end state."""
    tensor.require_complete()
    k = len(tensor.kinds)
    views = _seat_views(_centered(tensor.means))
    traj = np.empty((config.steps + 1, k))
    p = PopulationState.uniform(k).probs
    traj[0] = p
    for t in range(config.steps):
        p = _step(views, p, config.learning_rate)
        traj[t + 1] = p
    final = PopulationState(p)
    return FitnessResult(fitness_vector(tensor, final), final, traj)


def mean_metric(tensor: MetagameTensor) -> tuple[np.ndarray, np.ndarray]:
    """Uniform-population fitness per kind with standard errors propagated linearly."""
    tensor.require_complete()
    k, n = len(tensor.kinds), tensor.num_seats
    values = fitness_vector(tensor, PopulationState.uniform(k))
    # Each (assignment, seat) cell enters kind i's mean with weight 1/(n k^(n-1)) per
    # occurrence of i in that seat; accumulate squared weights times squared errors.
    var = np.zeros(k)
    w = 1.0 / (n * k ** (n - 1))
    se2 = np.nan_to_num(tensor.stderr) ** 2
    for s in range(n):
        var += np.moveaxis(se2[..., s], s, 0).reshape(k, -1).sum(axis=1) * w * w
    return values, np.sqrt(var)


@dataclass
class DeviationRatingResult:
    kinds: tuple[str, ...]
    ratings: np.ndarray
    ranks: np.ndarray
    distribution: np.ndarray  # joint over assignments, shape (K,) * n
    strictness: list[float]
    tiers: list[list[int]] = field(default_factory=list)


def deviation_gain_matrix(means: np.ndarray) -> np.ndarray:
    """``G[k, a]``: seat-averaged gain from switching to kind ``k`` at assignment ``a``.

    A joint distribution ``sigma`` over assignments has expected gains ``G @ sigma``.
    """
    n = means.shape[-1]
    k = means.shape[0]
    out = np.zeros((k,) + means.shape[:-1])
    for s in range(n):
        u = means[..., s]
        for j in range(k):
            idx = [slice(None)] * n
            idx[s] = slice(j, j + 1)
            # u_s(j, a_-s) broadcast over seat s's own axis
            out[j] += np.broadcast_to(u[tuple(idx)], u.shape) - u
    return (out / n).reshape(k, -1)


def _solve(c, a_ub, b_ub, a_eq, b_eq, m):
    bounds = [(0, None)] * m + [(None, None)]
    res = linprog(c, A_ub=a_ub if len(b_ub) else None, b_ub=b_ub if len(b_ub) else None,
                  A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if res.status != 0:
        raise AssertionError(f"deviation-rating LP failed: {res.message}")
    return res


def _tier_program(G, frozen: dict[int, float], free: list[int]):
    m = G.shape[1]
    a_eq = [np.append(np.ones(m), 0.0)] + [np.append(G[j], 0.0) for j in frozen]
    b_eq = [1.0] + [frozen[j] for j in frozen]
    a_ub = [np.append(G[j], 1.0) for j in free]
    return np.array(a_ub), np.zeros(len(free)), np.array(a_eq), np.array(b_eq)


def deviation_ratings(tensor: MetagameTensor, tol: float = TIE_TOL) -> DeviationRatingResult:
    """Iterated most-strict coarse correlated equilibrium ratings.

    Each tier maximizes the smallest deviation slack ``eps`` over joint
    distributions, with kinds frozen in earlier tiers held at their gains. Kinds
    whose constraint is tight in every optimal solution of the tier get rating
    ``-eps`` and are frozen. Higher rating is better; rank 1 is best.
    """
    tensor.require_complete()
    k = len(tensor.kinds)
    if k > MAX_KINDS:
        raise ValueError(f"deviation ratings support at most {MAX_KINDS} kinds, got {k}")
    G = deviation_gain_matrix(tensor.means)
    m = G.shape[1]
    frozen: dict[int, float] = {}
    ratings = np.full(k, np.nan)
    strictness: list[float] = []
    tiers: list[list[int]] = []
    sigma = None
    while len(frozen) < k:
        free = [j for j in range(k) if j not in frozen]
        a_ub, b_ub, a_eq, b_eq = _tier_program(G, frozen, free)
        c = np.zeros(m + 1)
        c[-1] = -1.0
        res = _solve(c, a_ub, b_ub, a_eq, b_eq, m)
        eps = float(res.x[-1]) + 0.0  # no negative zero
        sigma = res.x[:m]
        # Which free constraints can be slackened beyond eps while keeping the optimum?
        a_ub_fixed = np.array([np.append(G[j], 0.0) for j in free])
        b_ub_fixed = np.full(len(free), -eps)
        best_slack = {}
        for j in free:
            cj = np.append(G[j], 0.0)
            r = _solve(cj, a_ub_fixed, b_ub_fixed, a_eq, b_eq, m)
            best_slack[j] = -float(r.fun)
        tier = [j for j in free if best_slack[j] <= eps + tol]
        if not tier:
            tier = [min(free, key=lambda j: best_slack[j])]
        for j in tier:
            frozen[j] = -eps
            ratings[j] = 0.0 - eps
        strictness.append(eps)
        tiers.append(tier)
    return DeviationRatingResult(tuple(tensor.kinds), ratings, rank_with_ties(ratings, tol),
                                 sigma.reshape((k,) * tensor.num_seats), strictness, tiers)


def rank_with_ties(values: np.ndarray, tol: float = TIE_TOL) -> np.ndarray:
    """Rank 1 for the largest value; values within ``tol`` of a neighbour share the mean rank."""
    values = np.asarray(values, dtype=np.float64)
    order = sorted(range(len(values)), key=lambda i: -values[i])
    ranks = np.empty(len(values))
    start = 0
    while start < len(order):
        end = start + 1
        while end < len(order) and values[order[end - 1]] - values[order[end]] <= tol:
            end += 1
        for i in order[start:end]:
            ranks[i] = (start + 1 + end) / 2
        start = end
    return ranks


def kind_table(tensor: MetagameTensor, values, errors=None) -> dict[str, tuple[float, float]]:
    errors = [0.0] * len(values) if errors is None else errors
    return {name: (float(v), float(e)) for name, v, e in zip(tensor.kinds, values, errors)}
