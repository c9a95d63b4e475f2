"""Sub-band assignment and power control for a fixed flight path and phases.

The block nests two loops over a fixed gain field:

  inner   for a fixed band-to-user assignment, tune the user weights by a
          diminishing projected-subgradient step (users short of the rate
          target gain weight) with weighted water-filling as the power
          oracle -- power is continuous here, so the dual iterates settle
          and the best one recovers a near-max-min power split;
  outer   propose new assignments at the tuned weights (the weighted
          argmax reassignment, plus single-band moves toward the current
          worst user), keep the best exact-evaluated candidate, retune.

Every candidate is scored with one shared rate routine and the incoming
plan seeds the best-so-far, so the caller never receives a worse plan
than it supplied.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import channel

INNER_ROUNDS = 50
INNER_PATIENCE = 10
OUTER_ROUNDS = 8
MAX_WEIGHT_ROUNDS = 200        # total weight updates across all tuning phases
_STEP0 = 0.5
# Relative improvement below this is stagnation (and is the margin required
# to replace a best-so-far plan -- far above float noise, so accepted plans
# survive re-evaluation elsewhere).
_IMPROVE_REL = 1e-6


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of v onto {w : w >= 0, sum w = 1}."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    rho = np.flatnonzero(u * np.arange(1, v.size + 1) > css - 1.0)[-1]
    theta = (css[rho] - 1.0) / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def assign_bands(weights: np.ndarray, user_totals: np.ndarray) -> np.ndarray:
    """Band-to-user map maximizing weight * total uniform-power rate.

    user_totals: (I, U) summed-over-slots rate of band i if user u held it.
    Ties go to the lowest user index.
    """
    return np.argmax(weights[None, :] * user_totals, axis=1)


def waterfill(snr_per_watt: np.ndarray, band_weights: np.ndarray,
              p_max: float) -> tuple[np.ndarray, float]:
    """Split p_max over bands maximizing sum_i wb_i log2(1 + p_i g_i).

    KKT gives p_i = max(0, wb_i * mu - 1/g_i) with mu chosen so the powers
    sum to p_max; mu is found by bisection (monotone in the total).  Bands
    with zero gain or zero weight get zero power.  Returns (powers, mu).
    """
    g = np.asarray(snr_per_watt, dtype=float)
    wb = np.asarray(band_weights, dtype=float)
    inv_g = np.where(g > 0.0, 1.0 / np.where(g > 0.0, g, 1.0), np.inf)
    live = (wb > 0.0) & np.isfinite(inv_g)
    if not live.any():
        return np.zeros_like(g), 0.0
    lo = 0.0
    hi = (p_max + inv_g[live].sum()) / wb[live].sum()
    for _ in range(100):
        mu = 0.5 * (lo + hi)
        total = np.maximum(0.0, mu * wb - np.where(live, inv_g, np.inf)).sum()
        if abs(total - p_max) < 1e-12 * p_max:
            break
        if total > p_max:
            hi = mu
        else:
            lo = mu
    mu = 0.5 * (lo + hi)
    return np.maximum(0.0, mu * wb - np.where(live, inv_g, np.inf)), mu


def waterfill_batch(snr_per_watt: np.ndarray, band_weights: np.ndarray,
                    p_max: float) -> np.ndarray:
    """Row-wise waterfill: snr_per_watt (T, I) -> powers (T, I)."""
    g = np.asarray(snr_per_watt, dtype=float)
    wb = np.asarray(band_weights, dtype=float)
    inv_g = np.where(g > 0.0, 1.0 / np.where(g > 0.0, g, 1.0), np.inf)
    live = (wb[None, :] > 0.0) & np.isfinite(inv_g)
    inv_eff = np.where(live, inv_g, np.inf)
    live_w = np.where(live, wb[None, :], 0.0).sum(axis=1)
    dead_rows = live_w <= 0.0
    lo = np.zeros(g.shape[0])
    hi = ((p_max + np.where(live, inv_g, 0.0).sum(axis=1))
          / np.where(dead_rows, 1.0, live_w))
    for _ in range(100):
        mu = 0.5 * (lo + hi)
        total = np.maximum(0.0, wb[None, :] * mu[:, None] - inv_eff).sum(axis=1)
        above = total > p_max
        hi = np.where(above, mu, hi)
        lo = np.where(above, lo, mu)
    mu = np.where(dead_rows, 0.0, 0.5 * (lo + hi))
    return np.maximum(0.0, wb[None, :] * mu[:, None] - inv_eff)


def waterfill_slot(world, t: int, band_ue: np.ndarray,
                   weights: np.ndarray) -> np.ndarray:
    """Power split for one slot of the given plan (thin exact wrapper)."""
    geom = world.geom
    gains = channel.assigned_gains(geom, world.trajectory[t],
                                   world.phases[t], band_ue)
    snr_w = gains / (geom.noise_psd * geom.bandwidth)
    powers, _ = waterfill(snr_w, weights[band_ue], world.scenario.uav.max_power_w)
    return powers


@dataclass
class AllocationPlan:
    band_ue: np.ndarray
    power: np.ndarray          # (T, I)
    weights: np.ndarray        # (U,)
    user_rates: np.ndarray     # (U,) average rates under this plan
    min_rate: float
    trace: list = field(default_factory=list)   # min rate per inner round


def _plan_rates(geom, snr_w, power, band_ue, num_slots):
    """Average user rates for powers (T, I) on snr_w (T, I, idx by band_ue)."""
    picked = np.take_along_axis(
        snr_w, band_ue[None, :, None], axis=2)[:, :, 0]     # (T, I)
    rate = geom.bandwidth[None, :] * np.log2(1.0 + power * picked)
    totals = np.bincount(band_ue, weights=rate.sum(axis=0),
                         minlength=snr_w.shape[2])
    return totals / num_slots


def _waterfill_plan(geom, snr_w, band_ue, weights, p_max, num_slots):
    """Waterfilled powers and rates of one assignment at given weights."""
    picked = np.take_along_axis(
        snr_w, band_ue[None, :, None], axis=2)[:, :, 0]     # (T, I)
    power = waterfill_batch(picked, weights[band_ue], p_max)
    rates = _plan_rates(geom, snr_w, power, band_ue, num_slots)
    return power, rates


def _tune_weights(geom, snr_w, band_ue, weights0, p_max, num_slots,
                  rate_target, trace, round_budget):
    """Inner dual loop for a fixed assignment.

    Returns the best (weights, power, rates, min_rate) iterate; `weights`
    are the ones that produced `power` (pre-update), so re-waterfilling at
    them reproduces the plan.  Runs at most min(INNER_ROUNDS, round_budget)
    rounds.
    """
    weights = weights0.copy()
    best = None
    stale = 0
    for j in range(1, min(INNER_ROUNDS, round_budget) + 1):
        power, rates = _waterfill_plan(geom, snr_w, band_ue, weights,
                                       p_max, num_slots)
        min_rate = float(rates.min())
        trace.append(min_rate)
        if best is None or min_rate > best[3] + _IMPROVE_REL * max(best[3], 1.0):
            best = (weights.copy(), power, rates, min_rate)
            stale = 0
        else:
            stale += 1
            if stale >= INNER_PATIENCE:
                break
        grad = (rate_target - rates) / rates.max()
        weights = project_simplex(weights + (_STEP0 / j) * grad)
    return best


def solve_allocation(world, rate_target: float | None = None) -> AllocationPlan:
    """Optimize band ownership, per-slot powers, and user weights.

    rate_target anchors the weight subgradient (shortfall below it adds
    weight, surplus sheds it); it defaults to the incoming plan's worst
    average rate.
    """
    geom = world.geom
    scn = world.scenario
    num_slots = scn.uav.num_slots
    p_max = scn.uav.max_power_w

    # Gain field is fixed inside this block: precompute per-slot SNR-per-watt
    # tables and the uniform-power assignment totals.
    snr_w = np.empty((num_slots, geom.num_bands, geom.num_users))
    for t in range(num_slots):
        snr_w[t] = channel.gain_table(geom, world.trajectory[t],
                                      world.phases[t])
    snr_w /= (geom.noise_psd * geom.bandwidth)[None, :, None]
    p_uniform = p_max / geom.num_bands
    user_totals = (geom.bandwidth[None, :, None]
                   * np.log2(1.0 + p_uniform * snr_w)).sum(axis=0)   # (I, U)

    # Seed the best plan with the incoming one so the block is monotone.
    inc_rates = _plan_rates(geom, snr_w, world.power, world.band_ue, num_slots)
    best = AllocationPlan(band_ue=world.band_ue.copy(),
                          power=world.power.copy(),
                          weights=world.weights.copy(),
                          user_rates=inc_rates,
                          min_rate=float(inc_rates.min()))
    if rate_target is None:
        rate_target = best.min_rate

    trace = []
    for _ in range(OUTER_ROUNDS):
        budget = MAX_WEIGHT_ROUNDS - len(trace)
        if budget <= 0:
            break
        weights, power, rates, min_rate = _tune_weights(
            geom, snr_w, best.band_ue, best.weights, p_max, num_slots,
            rate_target, trace, budget)
        tuned_improved = min_rate > best.min_rate + _IMPROVE_REL * max(best.min_rate, 1.0)
        if tuned_improved:
            best = AllocationPlan(band_ue=best.band_ue.copy(), power=power,
                                  weights=weights.copy(), user_rates=rates,
                                  min_rate=min_rate)

        # Assignment candidates, all scored at the tuned weights: the
        # weighted argmax reassignment plus every single-band move toward
        # the current worst user.
        worst = int(np.argmin(best.user_rates))
        candidates = [assign_bands(weights, user_totals)]
        for i in np.flatnonzero(best.band_ue != worst):
            trial = best.band_ue.copy()
            trial[i] = worst
            candidates.append(trial)
        margin = _IMPROVE_REL * max(best.min_rate, 1.0)
        chosen = None
        chosen_min = best.min_rate + margin
        for trial in candidates:
            if np.array_equal(trial, best.band_ue):
                continue
            power, rates = _waterfill_plan(geom, snr_w, trial, weights,
                                           p_max, num_slots)
            min_rate = float(rates.min())
            if min_rate > chosen_min:
                chosen_min = min_rate
                chosen = AllocationPlan(band_ue=trial, power=power,
                                        weights=weights.copy(),
                                        user_rates=rates, min_rate=min_rate)
        if chosen is not None:
            best = chosen
        elif not tuned_improved:
            break                      # assignment and weights both stable

    best.trace = trace
    return best
