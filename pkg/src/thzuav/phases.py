"""Surface phase-shift block: closed-form element updates with pricing.

For one slot, each assigned band contributes an exact gain in the phase form

    U_i(s) = G_i + F_i |s|^2 + Re{Q_i s},    s = sum_n v_{i,n} e^{j phi_n},

which is convex in s, so at any reference point s~ it dominates its tangent:
U_i(s) >= U_i(s~) + Re{Upsilon_i (s - s~)} with Upsilon_i = 2 F_i conj(s~) + Q_i
(slack F_i |s - s~|^2 >= 0).  Requiring the tangent to clear the gain floor
H_i yields the linear constraint Re{Upsilon_i s} >= chi_i.  The weighted
penalty sum over bands is separable per element, hence the closed-form
update phi_n = angle(Xi_n) with Xi_n = sum_i rho_i conj(Upsilon_i)
conj(v_{i,n}); the pricing factors rho are lowered/raised by a diminishing
subgradient step on the constraint surpluses.

The slot keeps the incoming phases unless some iterate's exact gain vector
dominates the incoming one (its worst band strictly improves on the floor
it started from) -- so the update is a per-band Pareto step, and every
user's rate is non-decreasing through this block.
"""

from __future__ import annotations

import numpy as np

from . import channel

_TWO_PI = 2.0 * np.pi
# Minimum relative exact-gain improvement of the worst allocated band for
# replacing the incoming phase row; below this, improvements are
# indistinguishable from rounding noise at rate scale.
_ACCEPT_REL = 1e-9


def effective_scalar(steering, phases) -> complex:
    """s = sum_n v_n e^{j phi_n} for one band's steering row."""
    return complex(np.sum(np.asarray(steering) * np.exp(1j * np.asarray(phases))))


def surrogate_value(s, direct_power, cascade_power, cross_phasor) -> float:
    """Exact phase-form gain G + F |s|^2 + Re{Q s} at element sum s."""
    s = complex(s)
    return float(direct_power + cascade_power * abs(s) ** 2
                 + (cross_phasor * s).real)


def minorant_coefficients(s_ref, direct_power, cascade_power, cross_phasor,
                          floor):
    """Tangent coefficients (Upsilon, chi) of the gain-floor constraint.

    Re{Upsilon s} >= chi  <=>  U(s_ref) + Re{Upsilon (s - s_ref)} >= floor.
    chi simplifies exactly to F |s_ref|^2 - G + floor.
    """
    s_ref = complex(s_ref)
    upsilon = 2.0 * cascade_power * s_ref.conjugate() + cross_phasor
    chi = cascade_power * abs(s_ref) ** 2 - direct_power + floor
    return upsilon, float(chi)


def closed_form_phases(pricing, upsilon, steering) -> np.ndarray:
    """Element-wise maximizer of the priced penalty sum, phases in [0, 2pi).

    pricing: (I,), upsilon: (I,) complex, steering: (I, N) complex.
    Elements whose aggregate coefficient vanishes get phase 0.
    """
    xi = (np.asarray(pricing) * np.conj(upsilon)) @ np.conj(steering)   # (N,)
    phases = np.mod(np.angle(xi), _TWO_PI)
    phases[phases >= _TWO_PI] = 0.0   # mod can round up to exactly 2*pi
    return phases


def pricing_update(pricing, step, surplus) -> np.ndarray:
    """rho <- max(0, rho - step * surplus), element-wise."""
    return np.maximum(0.0, np.asarray(pricing) - step * np.asarray(surplus))


def _circular_dist(a, b):
    d = np.abs(a - b) % _TWO_PI
    return np.minimum(d, _TWO_PI - d)


def optimize_phases_slot(world, t: int) -> np.ndarray:
    """Optimize the phase row of slot t; returns the row to install.

    The gain floors of the priced constraints are the exact gains under the
    incoming phases, so an iterate is acceptable only when every allocated
    band's exact gain clears its floor; the iterate whose worst band clears
    it by the largest relative margin wins, and if none reaches _ACCEPT_REL
    the incoming row is returned unchanged.
    """
    geom = world.geom
    scn = world.scenario
    band_ue = world.band_ue
    l_xy = world.trajectory[t]
    incoming = np.array(world.phases[t], dtype=float)

    # Phase-form pieces per band at the current UAV position.
    inc = geom.incidence_base(l_xy)
    r = geom.uav_irs_dist(l_xy)
    d_all = geom.uav_ue_dists(l_xy)
    num_bands = geom.num_bands
    steering = np.empty((num_bands, geom.num_elements), dtype=complex)
    direct_power = np.empty(num_bands)
    cascade_power = np.empty(num_bands)
    cross_phasor = np.empty(num_bands, dtype=complex)
    for u in np.unique(band_ue):
        sel = np.flatnonzero(band_ue == u)
        base = inc + geom.depart_base[u]
        k = geom.wavenumber[sel]
        steering[sel] = np.exp(-1j * k[:, None] * base[None, :])
        d = d_all[u]
        amp_a = geom.direct_amp[sel]
        amp_b = geom.cascade_amp[sel, u]
        k_abs = geom.absorb[sel]
        direct_power[sel] = (amp_a / d) ** 2 * np.exp(-k_abs * d)
        cascade_power[sel] = (amp_b / r) ** 2 * np.exp(-k_abs * r)
        detour = (r + geom.irs_ue_dist[u]) - d
        cross_phasor[sel] = (2.0 * amp_a * amp_b / (d * r)
                             * np.exp(-0.5 * k_abs * (r + d))
                             * np.exp(-1j * k * detour))

    floors = channel.assigned_gains(geom, l_xy, incoming, band_ue)
    floor_scale = np.maximum(floors, 1e-300)

    rho = np.full(num_bands, scn.pricing.initial_factor, dtype=float)
    phi = incoming
    s = steering @ np.exp(1j * phi)
    best_phi = None
    best_rel = _ACCEPT_REL
    step_base = None

    for it in range(1, scn.pricing.inner_iterations + 1):
        upsilon = 2.0 * cascade_power * np.conj(s) + cross_phasor
        chi = cascade_power * np.abs(s) ** 2 - direct_power + floors
        phi_new = closed_form_phases(rho, upsilon, steering)
        s_new = steering @ np.exp(1j * phi_new)
        surplus = (upsilon * s_new).real - chi
        if step_base is None:
            step_base = 1.0 / (np.abs(surplus).max() + 1e-300)
        rho = pricing_update(rho, step_base / np.sqrt(it), surplus)

        gains = channel.assigned_gains(geom, l_xy, phi_new, band_ue)
        worst_rel = float(((gains - floors) / floor_scale).min())
        if worst_rel >= best_rel:
            best_rel = worst_rel
            best_phi = phi_new.copy()

        moved = _circular_dist(phi_new, phi).max()
        phi = phi_new
        s = s_new
        if moved <= scn.tolerances.phase_rad:
            break

    return best_phi if best_phi is not None else incoming
