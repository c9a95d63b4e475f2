"""UAV trajectory block: per-slot convex-surrogate search with rate repair.

One call to :func:`car_optimize` sweeps the interior slots (endpoints are
pinned to the launch anchor) in ascending order.  For each slot the channel
gain of every assigned band is linearized around the current position via
the frozen surrogate, and the resulting worst-user slot objective is
maximized over the intersection of the two travel discs by a deterministic
polar-grid search plus coordinate refinement.  Because the linearization is
only an under-estimator when the frozen cross term is non-negative, a
candidate position is re-checked against the *true* gains; users whose
average rate would fall below the current worst rate get their residual
rates tightened by the shortfall and the slot is re-solved.  If the repair
loop cannot produce a strictly safe improvement, the UAV stays put, which
makes the exact worst-user rate non-decreasing across accepted updates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels, channel, surrogate

# Search shape: radii x angles candidates around the current position,
# then pattern refinement that halves its step after each failed round.
GRID_RADII = 8
GRID_ANGLES = 16
REFINE_ROUNDS = 20
MAX_REFINE_MOVES = 200
# Repair rounds per slot before falling back to staying in place, and a
# safety cap on full sweeps.
REPAIR_ROUNDS = 8
MAX_SWEEPS = 50

_FEAS_SLACK = 1e-12


def initial_circle_trajectory(scenario) -> np.ndarray:
    """Closed circular tour through the launch anchor, (T, 2).

    The circle has radius min(10 m, largest radius whose chord steps fit the
    per-slot travel budget) and its center sits toward the user centroid, so
    the anchor lies on the circle; slots 1 and T coincide with the anchor
    exactly.
    """
    uav = scenario.uav
    num_slots = uav.num_slots
    start = np.array(uav.start_xy_m, dtype=float)
    if num_slots == 2:
        return np.vstack([start, start])
    budget = uav.travel_budget_m
    rho_budget = budget / (2.0 * math.sin(math.pi / (num_slots - 1)))
    rho = min(10.0, rho_budget * (1.0 - 1e-12))
    centroid = np.asarray(scenario.users_xy_m, dtype=float).mean(axis=0)
    towards = centroid - start
    norm = math.hypot(*towards)
    direction = towards / norm if norm > 1e-9 else np.array([1.0, 0.0])
    center = start + rho * direction
    ang0 = math.atan2(start[1] - center[1], start[0] - center[0])
    angles = ang0 + 2.0 * np.pi * np.arange(num_slots) / (num_slots - 1)
    traj = center + rho * np.column_stack([np.cos(angles), np.sin(angles)])
    traj[0] = start
    traj[-1] = start
    return traj


def check_trajectory(trajectory, uav, tol: float = 1e-9):
    """Raise unless endpoints are pinned and every step fits the budget."""
    start = np.asarray(uav.start_xy_m, dtype=float)
    if not (np.array_equal(trajectory[0], start)
            and np.array_equal(trajectory[-1], start)):
        raise ValueError("trajectory endpoints must equal the start anchor")
    steps = np.linalg.norm(np.diff(trajectory, axis=0), axis=1)
    budget = uav.travel_budget_m
    if np.any(steps > budget + tol):
        raise ValueError(
            f"trajectory step {steps.max():.6g} m exceeds the per-slot "
            f"travel budget {budget:.6g} m")


@dataclass
class SlotSubproblem:
    """Frozen per-slot search problem (see surrogate_slot_objective)."""

    slot: int
    center_xy: np.ndarray   # current position l'(t)
    prev_xy: np.ndarray
    next_xy: np.ndarray
    budget: float
    num_slots: int
    band_ue: np.ndarray     # (I,)
    slope_ue: np.ndarray    # (I,) tangent slopes vs the user distance
    slope_irs: np.ndarray   # (I,) tangent slopes vs the anchor distance
    offset: np.ndarray      # (I,)
    snr_scale: np.ndarray   # (I,) p_i / (noise_i * bw_i)
    bandwidth: np.ndarray   # (I,)
    resid_hat: np.ndarray   # (U,) (possibly tightened) residual rates
    ue_xy: np.ndarray       # (U, 2)
    alt_sq: float
    irs_x: float
    irs_dz_sq: float


def _make_subproblem(world, t: int, resid_hat) -> SlotSubproblem:
    geom = world.geom
    scn = world.scenario
    l_ref = world.trajectory[t]
    inc = geom.incidence_base(l_ref)
    r_ref = geom.uav_irs_dist(l_ref)
    d_all = geom.uav_ue_dists(l_ref)
    band_ue = world.band_ue

    num_bands = geom.num_bands
    array_power = np.empty(num_bands)
    cross_mix = np.empty(num_bands)
    cascade_amp = np.empty(num_bands)
    for u in np.unique(band_ue):
        sel = np.flatnonzero(band_ue == u)
        base = np.ascontiguousarray(inc + geom.depart_base[u])
        s = _kernels.phase_sums(base, np.ascontiguousarray(world.phases[t]),
                                np.ascontiguousarray(geom.wavenumber[sel]))
        detour = (r_ref + geom.irs_ue_dist[u]) - d_all[u]
        rot = np.exp(-1j * geom.wavenumber[sel] * detour)
        array_power[sel] = np.abs(s) ** 2
        cascade_amp[sel] = geom.cascade_amp[sel, u]
        cross_mix[sel] = (geom.direct_amp[sel] * geom.cascade_amp[sel, u]
                          * (rot * s).real)

    slope_ue, slope_irs, offset = surrogate.taylor_arrays(
        d_all[band_ue], r_ref, array_power, cross_mix,
        geom.direct_amp, cascade_amp, geom.absorb)

    return SlotSubproblem(
        slot=t,
        center_xy=l_ref.copy(),
        prev_xy=world.trajectory[t - 1].copy(),
        next_xy=world.trajectory[t + 1].copy(),
        budget=scn.uav.travel_budget_m,
        num_slots=scn.uav.num_slots,
        band_ue=band_ue,
        slope_ue=slope_ue,
        slope_irs=slope_irs,
        offset=offset,
        snr_scale=world.power[t] / (geom.noise_psd * geom.bandwidth),
        bandwidth=geom.bandwidth.copy(),
        resid_hat=np.asarray(resid_hat, dtype=float),
        ue_xy=geom.ue_xy,
        alt_sq=geom.altitude**2,
        irs_x=geom.anchor_x,
        irs_dz_sq=(geom.altitude - geom.anchor_z) ** 2,
    )


def _feasible_mask(cand, sub: SlotSubproblem):
    lim = (sub.budget + _FEAS_SLACK) ** 2
    dp = cand - sub.prev_xy
    dn = cand - sub.next_xy
    return ((dp[:, 0] ** 2 + dp[:, 1] ** 2 <= lim)
            & (dn[:, 0] ** 2 + dn[:, 1] ** 2 <= lim))


def _clip_to_discs(cand, sub: SlotSubproblem):
    """Alternately project candidates onto the two travel discs.

    Both discs are convex, so a few alternating radial clips land (very
    nearly) on the nearest point of their intersection; this lets the
    refinement slide along the feasible boundary instead of stalling when
    a straight probe step exits the discs.
    """
    out = cand.copy()
    for _ in range(6):
        for anchor in (sub.prev_xy, sub.next_xy):
            delta = out - anchor
            dist = np.hypot(delta[:, 0], delta[:, 1])
            over = dist > sub.budget
            if np.any(over):
                scale = sub.budget / dist[over]
                out[over] = anchor + delta[over] * scale[:, None]
    return out


def _score(cand, sub: SlotSubproblem):
    return _kernels.candidate_scores(
        np.ascontiguousarray(cand, dtype=float), sub.ue_xy, sub.alt_sq,
        sub.irs_x, sub.irs_dz_sq,
        np.ascontiguousarray(sub.band_ue, dtype=np.int64),
        sub.slope_ue, sub.slope_irs, sub.offset, sub.snr_scale,
        sub.bandwidth, sub.resid_hat)


def surrogate_slot_objective(l_xy, sub: SlotSubproblem) -> float:
    """Worst-user average-rate bound at candidate position l_xy, bit/s."""
    cand = np.asarray(l_xy, dtype=float).reshape(1, 2)
    if not _feasible_mask(cand, sub)[0]:
        raise ValueError("candidate violates the per-slot travel budget")
    return float(_score(cand, sub)[0]) / sub.num_slots


def solve_slot_subproblem(sub: SlotSubproblem) -> np.ndarray:
    """Deterministic search over the travel-disc intersection.

    The current position is always a candidate (and wins ties), so the
    returned position never scores below staying put.
    """
    radii = sub.budget * np.arange(1, GRID_RADII + 1) / GRID_RADII
    angles = 2.0 * np.pi * np.arange(GRID_ANGLES) / GRID_ANGLES
    ring = np.column_stack([np.cos(angles), np.sin(angles)])
    grid = (sub.center_xy[None, :]
            + (radii[:, None, None] * ring[None, :, :]).reshape(-1, 2))
    cand = np.vstack([sub.center_xy[None, :], grid])
    cand = cand[_feasible_mask(cand, sub)]   # row 0 (center) always survives
    scores = _score(cand, sub)
    best_idx = int(np.argmax(scores))        # first max -> center wins ties
    best = cand[best_idx].copy()
    best_score = scores[best_idx]

    diag = 1.0 / math.sqrt(2.0)
    directions = np.array(
        [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0],
         [diag, diag], [diag, -diag], [-diag, diag], [-diag, -diag]])
    step = sub.budget / GRID_RADII
    shrinks = moves = 0
    while shrinks < REFINE_ROUNDS and moves < MAX_REFINE_MOVES:
        probes = _clip_to_discs(best[None, :] + step * directions, sub)
        probes = probes[_feasible_mask(probes, sub)]
        improved = False
        if probes.shape[0]:
            ps = _score(probes, sub)
            j = int(np.argmax(ps))
            if ps[j] > best_score:
                best = probes[j].copy()
                best_score = ps[j]
                improved = True
                moves += 1
        if not improved:       # keep the step while it pays; halve on a miss
            step *= 0.5
            shrinks += 1
    return best


def _slot_user_totals_at(world, t: int, l_xy) -> np.ndarray:
    """(U,) exact per-user rate totals of slot t if the UAV were at l_xy."""
    geom = world.geom
    gains = channel.assigned_gains(geom, l_xy, world.phases[t], world.band_ue)
    return channel.slot_user_totals(geom, world.power[t], gains, world.band_ue)


def residual_rate(world, t: int) -> np.ndarray:
    """(U,) rate totals over every slot except t (recomputed from state)."""
    matrix = channel.user_rate_matrix(
        world.geom, world.trajectory, world.phases, world.power,
        world.band_ue)
    return matrix.sum(axis=0) - matrix[t]


def compute_delta(world, t: int, l_xy, r_th: float) -> np.ndarray:
    """Per-user slack of the average-rate target at candidate position l_xy.

    delta_u = (exact slot-t rate total at l_xy) + (rate total of the other
    slots) - T * r_th; negative entries mark users whose average rate would
    fall below the target.
    """
    return (_slot_user_totals_at(world, t, l_xy) + residual_rate(world, t)
            - world.scenario.uav.num_slots * r_th)


def car_optimize(world, accepted_trace=None) -> np.ndarray:
    """Sweep all interior slots until no position moves more than the
    configured tolerance; mutates and returns world.trajectory.

    When ``accepted_trace`` is a list, the exact worst-user average rate
    (recomputed from scratch) is appended after every accepted slot update.
    """
    scn = world.scenario
    num_slots = scn.uav.num_slots
    move_tol = scn.tolerances.trajectory_m
    traj = world.trajectory
    geom = world.geom

    # Per-slot per-user exact rate totals; kept in sync with accepted moves.
    slot_totals = channel.user_rate_matrix(
        geom, traj, world.phases, world.power, world.band_ue)

    for _ in range(MAX_SWEEPS):
        max_move = 0.0
        for t in range(1, num_slots - 1):
            totals = slot_totals.sum(axis=0)
            target_total = totals.min()     # T * (current worst average rate)
            margin = 1e-9 * max(target_total, 1.0)
            resid = totals - slot_totals[t]

            sub = _make_subproblem(world, t, resid)
            accepted = None
            for _round in range(REPAIR_ROUNDS):
                cand = solve_slot_subproblem(sub)
                if np.array_equal(cand, sub.center_xy):
                    break                    # cannot improve: stay in place
                slot_true = _slot_user_totals_at(world, t, cand)
                delta = slot_true + resid - target_total
                violators = delta < -margin
                if violators.any():
                    resid_hat = resid.copy()
                    resid_hat[violators] += delta[violators]
                    sub.resid_hat = resid_hat
                    continue
                if delta.min() >= margin:
                    accepted = (cand, slot_true)
                break                        # safe but below margin: stay

            if accepted is not None:
                cand, slot_true = accepted
                max_move = max(max_move,
                               math.hypot(*(cand - traj[t])))
                traj[t] = cand
                slot_totals[t] = slot_true
                if accepted_trace is not None:
                    fresh = channel.user_rate_matrix(
                        geom, traj, world.phases, world.power, world.band_ue)
                    accepted_trace.append(fresh.sum(axis=0).min() / num_slots)
        if max_move <= move_tol:
            break
    return traj
