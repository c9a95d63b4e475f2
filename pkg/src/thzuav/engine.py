"""Outer loop coordinating the three optimization blocks.

One iteration of the full optimizer runs, in order: band assignment +
power control, then the flight-path update (slot-wise surrogate search),
then per-slot surface phase updates.  The min average user rate is
re-evaluated after each iteration and the loop stops when its relative
change falls below the outer tolerance (or at the iteration cap).

Ablation modes replace exactly one block:

  proposed       all three blocks run
  pwch_fixed     power/band block skipped; band ownership and per-slot
                 power splits are redrawn at random each iteration
  traject_fixed  flight path stays on its initial circle
  theta_fixed    phase block skipped; phases are redrawn uniformly at
                 random each iteration

Every run is a pure function of (scenario, mode, seed): all randomness
flows from one generator seeded up front.  The proposed and traject_fixed
modes have non-decreasing rate traces (every block is monotone); for the
randomized baselines only the best-so-far envelope is monotone.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import allocation, channel, phases as phase_block, trajectory

MODES = ("proposed", "pwch_fixed", "theta_fixed", "traject_fixed")

MAX_ITERATIONS = 100
_TWO_PI = 2.0 * np.pi


@dataclass
class WorldState:
    """Full mutable optimizer state for one run."""
    scenario: object
    geom: channel.Geometry
    rng: np.random.Generator
    trajectory: np.ndarray   # (T, 2) UAV ground-projected positions
    phases: np.ndarray       # (T, N) surface phases per slot
    band_ue: np.ndarray      # (I,) owner user of each band
    power: np.ndarray        # (T, I) transmit power per slot and band
    weights: np.ndarray      # (U,) rate-balancing weights


@dataclass
class IterationRecord:
    """One outer iteration: headline numbers plus a state snapshot deep
    enough to recompute the exact objective independently."""
    iteration: int
    min_rate: float
    rel_change: float
    user_rates: np.ndarray
    wall_time_s: float
    trajectory: np.ndarray
    phases: np.ndarray
    band_ue: np.ndarray
    power: np.ndarray


@dataclass
class RunTrace:
    mode: str
    seed: int
    initial_min_rate: float
    records: list[IterationRecord] = field(default_factory=list)
    user_rates: np.ndarray | None = None
    converged: bool = False
    world: WorldState | None = None

    @property
    def min_rates(self) -> list[float]:
        return [r.min_rate for r in self.records]

    @property
    def best_so_far(self) -> np.ndarray:
        """Non-decreasing envelope of the min-rate trace."""
        return np.maximum.accumulate(np.asarray(self.min_rates))

    @property
    def trajectory_history(self) -> list[np.ndarray]:
        return [r.trajectory for r in self.records]

    @property
    def iterations(self) -> int:
        return len(self.records)

    @property
    def final_min_rate(self) -> float:
        return self.records[-1].min_rate if self.records else self.initial_min_rate


def initialize(scenario, seed: int | None = None) -> WorldState:
    """Deterministic starting state: circle path, random phases, uniform
    power, round-robin band ownership (every user holds at least one band)."""
    if seed is None:
        seed = scenario.seed
    rng = np.random.default_rng(seed)
    geom = channel.Geometry(scenario)
    num_slots = scenario.uav.num_slots
    traj = trajectory.initial_circle_trajectory(scenario)
    phase_rows = rng.uniform(0.0, _TWO_PI, size=(num_slots, scenario.irs.num_elements))
    band_ue = np.arange(scenario.num_bands) % scenario.num_users
    power = np.full((num_slots, scenario.num_bands),
                    scenario.uav.max_power_w / scenario.num_bands)
    weights = np.full(scenario.num_users, 1.0 / scenario.num_users)
    return WorldState(scenario=scenario, geom=geom, rng=rng, trajectory=traj,
                      phases=phase_rows, band_ue=band_ue, power=power,
                      weights=weights)


def user_average_rates(world: WorldState) -> np.ndarray:
    """Exact per-user average rates (U,) for the current state."""
    matrix = channel.user_rate_matrix(world.geom, world.trajectory,
                                      world.phases, world.power,
                                      world.band_ue)
    return matrix.sum(axis=0) / world.scenario.uav.num_slots


def exact_min_avg_rate(world: WorldState) -> float:
    """The objective: worst user's average rate."""
    return float(user_average_rates(world).min())


def _random_power_split(world: WorldState) -> np.ndarray:
    """Random per-slot power split summing to the budget in every slot."""
    draw = world.rng.random(world.power.shape) + 1e-12
    return draw * (world.scenario.uav.max_power_w
                   / draw.sum(axis=1, keepdims=True))


def _run_iteration(world: WorldState, mode: str, rate_target: float) -> None:
    if mode == "pwch_fixed":
        world.band_ue = world.rng.integers(
            0, world.scenario.num_users, size=world.scenario.num_bands)
        world.power = _random_power_split(world)
    else:
        plan = allocation.solve_allocation(world, rate_target)
        world.band_ue = plan.band_ue
        world.power = plan.power
        world.weights = plan.weights

    if mode != "traject_fixed":
        trajectory.car_optimize(world)

    if mode == "theta_fixed":
        world.phases = world.rng.uniform(
            0.0, _TWO_PI, size=world.phases.shape)
    else:
        for t in range(world.scenario.uav.num_slots):
            world.phases[t] = phase_block.optimize_phases_slot(world, t)


def run(scenario, mode: str = "proposed", seed: int | None = None,
        max_iterations: int = MAX_ITERATIONS) -> RunTrace:
    """Run the optimizer end to end and return its trace."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    world = initialize(scenario, seed=seed)
    used_seed = scenario.seed if seed is None else seed
    rate_prev = exact_min_avg_rate(world)
    trace = RunTrace(mode=mode, seed=used_seed, initial_min_rate=rate_prev)
    tol = scenario.tolerances.outer_rel

    for it in range(1, max_iterations + 1):
        started = time.perf_counter()
        _run_iteration(world, mode, rate_prev)
        rates = user_average_rates(world)
        rate_new = float(rates.min())
        rel = abs(rate_new - rate_prev) / max(abs(rate_prev), 1e-300)
        trace.records.append(IterationRecord(
            iteration=it, min_rate=rate_new, rel_change=rel,
            user_rates=rates, wall_time_s=time.perf_counter() - started,
            trajectory=world.trajectory.copy(), phases=world.phases.copy(),
            band_ue=world.band_ue.copy(), power=world.power.copy()))
        rate_prev = rate_new
        if rel <= tol:
            trace.converged = True
            break

    trace.user_rates = user_average_rates(world)
    trace.world = world
    return trace
