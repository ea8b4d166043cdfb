"""Gradient-free optimizers over box-bounded real vectors.

The grasshopper algorithm moves each agent by a sum of pairwise social
forces (short-range repulsion, long-range attraction) around the best
solution found so far, with a linearly decaying coefficient shifting the
swarm from exploration to exploitation. A standard global-best particle
swarm is provided as the comparison baseline.

Both optimizers evaluate the objective exactly population * (iterations + 1)
times and are bitwise reproducible for a fixed seed: all random draws happen
in fixed-shape blocks before any objective evaluation, so evaluation order
cannot perturb the random sequence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InvalidCount, NonFiniteCost

DEFAULT_DISTANCE_CLIP = (1.0, 4.0)


@dataclass(frozen=True)
class Objective:
    """A cost function over real vectors of fixed arity; lower is better.

    ``evaluate`` must be deterministic: any stochasticity has to be fixed by
    seed before optimization starts.
    """

    arity: int
    evaluate: Callable[[np.ndarray], float]


def _as_bounds(lower, upper, arity: int) -> tuple[np.ndarray, np.ndarray]:
    lb = np.asarray(lower, dtype=float)
    ub = np.asarray(upper, dtype=float)
    if lb.shape != (arity,) or ub.shape != (arity,):
        raise InvalidCount(f"bounds must have shape ({arity},)")
    if np.any(lb >= ub):
        raise InvalidCount("every lower bound must be strictly below its upper bound")
    return lb, ub


@dataclass(frozen=True)
class GoaConfig:
    """Grasshopper swarm hyperparameters and search box."""

    lower_bounds: np.ndarray
    upper_bounds: np.ndarray
    population: int = 100
    iterations: int = 150
    c_max: float = 1.0
    c_min: float = 1e-5
    f: float = 0.5
    l: float = 1.5
    distance_clip: tuple[float, float] = DEFAULT_DISTANCE_CLIP
    seed: int = 0

    def __post_init__(self):
        lb = np.asarray(self.lower_bounds, dtype=float)
        ub = np.asarray(self.upper_bounds, dtype=float)
        object.__setattr__(self, "lower_bounds", lb)
        object.__setattr__(self, "upper_bounds", ub)
        object.__setattr__(self, "distance_clip", tuple(float(v) for v in self.distance_clip))
        if self.population < 2:
            raise InvalidCount(f"population must be >= 2, got {self.population}")
        if self.iterations < 1:
            raise InvalidCount(f"iterations must be >= 1, got {self.iterations}")
        if not self.c_max > self.c_min > 0:
            raise InvalidCount("need c_max > c_min > 0")
        if self.f <= 0 or self.l <= 0:
            raise InvalidCount("social-force parameters f and l must be > 0")
        if lb.ndim != 1 or lb.shape != ub.shape or np.any(lb >= ub):
            raise InvalidCount("bounds must be 1-D with lower < upper everywhere")
        lo, hi = self.distance_clip
        if not 0 < lo <= hi:
            raise InvalidCount(f"distance_clip must satisfy 0 < lo <= hi, got {self.distance_clip}")

    @property
    def arity(self) -> int:
        return self.lower_bounds.shape[0]

    def to_dict(self) -> dict:
        return {
            "population": self.population,
            "iterations": self.iterations,
            "c_max": self.c_max,
            "c_min": self.c_min,
            "f": self.f,
            "l": self.l,
            "distance_clip": list(self.distance_clip),
            "lower_bounds": self.lower_bounds.tolist(),
            "upper_bounds": self.upper_bounds.tolist(),
            "seed": self.seed,
        }


@dataclass(frozen=True)
class PsoConfig:
    """Global-best PSO hyperparameters and search box."""

    lower_bounds: np.ndarray
    upper_bounds: np.ndarray
    population: int = 100
    iterations: int = 150
    inertia: float = 0.7298
    cognitive: float = 1.49618
    social: float = 1.49618
    seed: int = 0

    def __post_init__(self):
        lb = np.asarray(self.lower_bounds, dtype=float)
        ub = np.asarray(self.upper_bounds, dtype=float)
        object.__setattr__(self, "lower_bounds", lb)
        object.__setattr__(self, "upper_bounds", ub)
        if self.population < 2:
            raise InvalidCount(f"population must be >= 2, got {self.population}")
        if self.iterations < 1:
            raise InvalidCount(f"iterations must be >= 1, got {self.iterations}")
        if self.inertia < 0 or self.cognitive < 0 or self.social < 0:
            raise InvalidCount("PSO coefficients must be non-negative")
        if lb.ndim != 1 or lb.shape != ub.shape or np.any(lb >= ub):
            raise InvalidCount("bounds must be 1-D with lower < upper everywhere")

    @property
    def arity(self) -> int:
        return self.lower_bounds.shape[0]

    def to_dict(self) -> dict:
        return {
            "population": self.population,
            "iterations": self.iterations,
            "inertia": self.inertia,
            "cognitive": self.cognitive,
            "social": self.social,
            "lower_bounds": self.lower_bounds.tolist(),
            "upper_bounds": self.upper_bounds.tolist(),
            "seed": self.seed,
        }


@dataclass
class SwarmState:
    """Positions plus the best solution seen so far."""

    positions: np.ndarray
    costs: np.ndarray
    best_position: np.ndarray
    best_cost: float
    iteration: int = 0


@dataclass(frozen=True)
class OptimizerRun:
    """Result of one optimization: best point, curve, evaluation count."""

    best_position: np.ndarray
    best_cost: float
    convergence: np.ndarray  # best-so-far cost, index 0 = after initialization
    evaluations: int

    def to_dict(self) -> dict:
        return {
            "best_position": self.best_position.tolist(),
            "best_cost": float(self.best_cost),
            "convergence": self.convergence.tolist(),
            "evaluations": self.evaluations,
        }


def social_force(r, f: float = 0.5, l: float = 1.5):
    """Pairwise interaction strength s(r) = f*e^(-r/l) - e^(-r).

    Negative values repel (inside the comfort distance), positive values
    attract. With the defaults the zero crossing sits at r = 3*ln 2.
    """
    r = np.asarray(r, dtype=float)
    out = f * np.exp(-r / l) - np.exp(-r)
    if out.ndim == 0:
        return float(out)
    return out


def comfort_coefficient(t: int, t_max: int, c_max: float = 1.0, c_min: float = 1e-5) -> float:
    """Linearly decaying movement coefficient: c_max at t=0, c_min at t=t_max."""
    if t_max < 1:
        raise InvalidCount(f"t_max must be >= 1, got {t_max}")
    if not 0 <= t <= t_max:
        raise InvalidCount(f"t must be in [0, {t_max}], got {t}")
    return c_max - t * (c_max - c_min) / t_max


def _evaluate_population(objective: Objective, positions: np.ndarray) -> np.ndarray:
    costs = np.empty(positions.shape[0])
    for i in range(positions.shape[0]):
        value = float(objective.evaluate(positions[i]))
        if not math.isfinite(value):
            raise NonFiniteCost(f"objective returned {value!r} at agent {i}")
        costs[i] = value
    return costs


def _update_best(state: SwarmState) -> None:
    idx = int(np.argmin(state.costs))
    if state.costs[idx] < state.best_cost:
        state.best_cost = float(state.costs[idx])
        state.best_position = state.positions[idx].copy()


def goa_step(
    state: SwarmState, config: GoaConfig, c: float, objective: Objective
) -> SwarmState:
    """One grasshopper update at comfort coefficient ``c``.

    New position per dimension d:
        c * sum_{j != i} [ c * (ub_d - lb_d)/2 * s(clip(d_ij)) * (P_j^d - P_i^d)/d_ij ]
        + best_d
    where d_ij is the pairwise Euclidean distance, clipped into
    ``config.distance_clip`` before entering the social-force kernel.
    Positions are clamped to the bounds, then evaluated.
    """
    P = state.positions
    n = P.shape[0]
    lb, ub = config.lower_bounds, config.upper_bounds

    if n > 1:
        gram = P @ P.T
        gram = 0.5 * (gram + gram.T)
        sq_norms = np.diag(gram)
        dist_sq = sq_norms[:, None] + sq_norms[None, :] - 2.0 * gram
        dist = np.sqrt(np.maximum(dist_sq, 0.0))
        clipped = np.clip(dist, *config.distance_clip)
        # Scalar coefficient per (i, j) pair: s(clipped) over the raw distance.
        # Coincident agents exert no force on each other.
        coef = social_force(clipped, config.f, config.l) / np.maximum(dist, 1e-12)
        coef[dist <= 1e-12] = 0.0
        # sum_j coef_ij * (P_j - P_i), expressed with two matmul-shaped terms
        social = coef @ P - coef.sum(axis=1, keepdims=True) * P
        social *= 0.5 * (ub - lb)
        new_positions = c * c * social + state.best_position
    else:
        new_positions = np.broadcast_to(state.best_position, P.shape).copy()

    new_positions = np.clip(new_positions, lb, ub)
    costs = _evaluate_population(objective, new_positions)
    new_state = SwarmState(
        positions=new_positions,
        costs=costs,
        best_position=state.best_position,
        best_cost=state.best_cost,
        iteration=state.iteration + 1,
    )
    _update_best(new_state)
    return new_state


def _init_positions(rng: np.random.Generator, config) -> np.ndarray:
    span = config.upper_bounds - config.lower_bounds
    return config.lower_bounds + span * rng.uniform(
        size=(config.population, config.arity)
    )


def goa_optimize(objective: Objective, config: GoaConfig) -> OptimizerRun:
    """Full grasshopper run: seeded init, then ``iterations`` comfort-scheduled steps."""
    if objective.arity != config.arity:
        raise InvalidCount(
            f"objective arity {objective.arity} != bounds length {config.arity}"
        )
    rng = np.random.default_rng(config.seed)
    positions = _init_positions(rng, config)
    costs = _evaluate_population(objective, positions)
    best = int(np.argmin(costs))
    state = SwarmState(
        positions=positions,
        costs=costs,
        best_position=positions[best].copy(),
        best_cost=float(costs[best]),
    )
    convergence = [state.best_cost]
    for t in range(1, config.iterations + 1):
        c = comfort_coefficient(t, config.iterations, config.c_max, config.c_min)
        state = goa_step(state, config, c, objective)
        convergence.append(state.best_cost)
    return OptimizerRun(
        best_position=state.best_position,
        best_cost=state.best_cost,
        convergence=np.asarray(convergence),
        evaluations=config.population * (config.iterations + 1),
    )


def pso_optimize(objective: Objective, config: PsoConfig) -> OptimizerRun:
    """Global-best PSO with zero initial velocity and bound clamping."""
    if objective.arity != config.arity:
        raise InvalidCount(
            f"objective arity {objective.arity} != bounds length {config.arity}"
        )
    rng = np.random.default_rng(config.seed)
    positions = _init_positions(rng, config)
    velocities = np.zeros_like(positions)
    costs = _evaluate_population(objective, positions)

    pbest_positions = positions.copy()
    pbest_costs = costs.copy()
    gbest = int(np.argmin(costs))
    gbest_position = positions[gbest].copy()
    gbest_cost = float(costs[gbest])

    convergence = [gbest_cost]
    lb, ub = config.lower_bounds, config.upper_bounds
    for _ in range(config.iterations):
        r_cognitive = rng.uniform(size=positions.shape)
        r_social = rng.uniform(size=positions.shape)
        velocities = (
            config.inertia * velocities
            + config.cognitive * r_cognitive * (pbest_positions - positions)
            + config.social * r_social * (gbest_position - positions)
        )
        positions = np.clip(positions + velocities, lb, ub)
        costs = _evaluate_population(objective, positions)

        improved = costs < pbest_costs
        pbest_positions[improved] = positions[improved]
        pbest_costs[improved] = costs[improved]
        best = int(np.argmin(pbest_costs))
        if pbest_costs[best] < gbest_cost:
            gbest_cost = float(pbest_costs[best])
            gbest_position = pbest_positions[best].copy()
        convergence.append(gbest_cost)

    return OptimizerRun(
        best_position=gbest_position,
        best_cost=gbest_cost,
        convergence=np.asarray(convergence),
        evaluations=config.population * (config.iterations + 1),
    )
