"""THz link model: direct UAV-user gain, reflected cascade, and rates.

Geometry convention (meters): user u at (x_u, y_u, 0); UAV at (x, y, H);
surface anchor (first element) at (a, 0, c) on the wall plane y = 0, the
array extending along +x and +z.  For sub-band i with carrier f and
absorption coefficient K:

direct     h = c0/(4 pi f d) * exp(-j 2 pi f d / c0) * exp(-K d / 2)
cascade    g = gt * sum_n exp(-j theta_n) exp(j phi_n) exp(-j vartheta_n)
           gt = c0/(8 sqrt(pi^3) f r_u r) * exp(-j 2 pi f (r + r_u)/c0)
                * exp(-K (r + r_u)/2)

with d the UAV-user range, r the UAV-anchor range, r_u the anchor-user
range, theta/vartheta the per-element incidence/departure phases of the
planar array, and phi the applied phase shifts.

The squared magnitude |h + g|^2 admits two exact regroupings used by the
optimizer blocks and cross-checked against the direct form in the tests:

* distance form   (A/d)^2 e^{-Kd} + (B/r)^2 e^{-Kr} C + (2D/(dr)) e^{-K(r+d)/2}
* phase form      G + F |s|^2 + Re{Q s},  s = sum_n v_n e^{j phi_n}
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .constants import SPEED_OF_LIGHT as C0
from .scenario import IrsGeometry, Scenario, SubBand

_CASCADE_DENOM = 8.0 * math.sqrt(math.pi**3)


@dataclass(frozen=True)
class LinkDistances:
    uav_ue: float   # d: UAV to user
    uav_irs: float  # r: UAV to surface anchor
    irs_ue: float   # r_u: surface anchor to user


@dataclass(frozen=True)
class GainDecomposition:
    """All pieces of the two exact |h + g|^2 regroupings at one (l, i, u).

    ``array_power`` and ``cross_mix`` are the phase-dependent terms of the
    distance form (they get frozen by the trajectory surrogate);
    ``direct_power``/``cascade_power``/``cross_phasor``/``steering`` are the
    phase form around which the phase-shift block builds its minorant.
    """

    dist: LinkDistances
    direct_amp: float        # A = c0 / (4 pi f)
    cascade_amp: float       # B = c0 e^{-K r_u / 2} / (8 sqrt(pi^3) f r_u)
    absorb: float            # K
    array_power: float       # C = |s|^2
    cross_mix: float         # D = A B Re{e^{-j w ((r + r_u) - d)} s}
    direct_power: float      # G = (A/d)^2 e^{-K d}
    cascade_power: float     # F = (B/r)^2 e^{-K r}
    cross_phasor: complex    # Q = (2AB/(dr)) e^{-K(r+d)/2} e^{-j w ((r+r_u)-d)}
    steering: np.ndarray     # v_n = e^{-j (theta_n + vartheta_n)}, shape (N,)


# =====================================================================
# Scalar reference operations
# =====================================================================

def distances(scenario: Scenario, l, u: int) -> LinkDistances:
    """Ranges of the three legs for UAV position l = (x, y, z) and user u."""
    x, y, z = float(l[0]), float(l[1]), float(l[2])
    ux, uy = scenario.users_xy_m[u]
    ax, _, az = scenario.irs.anchor_m
    return LinkDistances(
        uav_ue=math.sqrt((x - ux) ** 2 + (y - uy) ** 2 + z**2),
        uav_irs=math.sqrt((x - ax) ** 2 + y**2 + (z - az) ** 2),
        irs_ue=math.sqrt((ux - ax) ** 2 + uy**2 + az**2),
    )


def incidence_phase(l, irs: IrsGeometry, f_hz: float, n_x: int, n_z: int) -> float:
    """Per-element phase of the UAV->surface leg (n_x, n_z are 1-based)."""
    x, y, z = float(l[0]), float(l[1]), float(l[2])
    ax, _, az = irs.anchor_m
    r = math.sqrt((x - ax) ** 2 + y**2 + (z - az) ** 2)
    return (2.0 * math.pi * f_hz) / (r * C0) * (
        (ax - x) * (n_x - 1) * irs.spacing_x_m
        + (az - z) * (n_z - 1) * irs.spacing_z_m)


def departure_phase(ue_xy, irs: IrsGeometry, f_hz: float, n_x: int, n_z: int) -> float:
    """Per-element phase of the surface->user leg (n_x, n_z are 1-based)."""
    ux, uy = float(ue_xy[0]), float(ue_xy[1])
    ax, _, az = irs.anchor_m
    r_u = math.sqrt((ux - ax) ** 2 + uy**2 + az**2)
    return (2.0 * math.pi * f_hz) / (r_u * C0) * (
        (ux - ax) * (n_x - 1) * irs.spacing_x_m
        - az * (n_z - 1) * irs.spacing_z_m)


def direct_gain(l, band: SubBand, ue_xy) -> complex:
    """Complex gain of the line-of-sight UAV->user link."""
    x, y, z = float(l[0]), float(l[1]), float(l[2])
    d = math.sqrt((x - ue_xy[0]) ** 2 + (y - ue_xy[1]) ** 2 + z**2)
    amp = C0 / (4.0 * math.pi * band.center_hz * d)
    w = 2.0 * math.pi * band.center_hz / C0
    return amp * np.exp(-1j * w * d) * math.exp(-0.5 * band.absorb_per_m * d)


def _element_phase_bases(irs: IrsGeometry, l, ue_xy):
    """Incidence and departure phase angles per element, divided by the
    wavenumber 2 pi f / c0 (i.e. in meters), plus the two ranges."""
    offs = irs.element_offsets()           # (N, 2): (dx, dz)
    x, y, z = float(l[0]), float(l[1]), float(l[2])
    ux, uy = float(ue_xy[0]), float(ue_xy[1])
    ax, _, az = irs.anchor_m
    r = math.sqrt((x - ax) ** 2 + y**2 + (z - az) ** 2)
    r_u = math.sqrt((ux - ax) ** 2 + uy**2 + az**2)
    inc = ((ax - x) * offs[:, 0] + (az - z) * offs[:, 1]) / r
    dep = ((ux - ax) * offs[:, 0] - az * offs[:, 1]) / r_u
    return inc, dep, r, r_u


def cascaded_gain(l, phases_row, band: SubBand, irs: IrsGeometry, ue_xy) -> complex:
    """Complex gain of the UAV->surface->user cascade (term-wise sum)."""
    inc, dep, r, r_u = _element_phase_bases(irs, l, ue_xy)
    w = 2.0 * math.pi * band.center_hz / C0
    s = np.sum(np.exp(-1j * w * inc) * np.exp(1j * np.asarray(phases_row))
               * np.exp(-1j * w * dep))
    amp = C0 / (_CASCADE_DENOM * band.center_hz * r_u * r)
    gt = amp * np.exp(-1j * w * (r + r_u)) \
        * math.exp(-0.5 * band.absorb_per_m * (r + r_u))
    return gt * s


def combined_gain_power(l, phases_row, band: SubBand, irs: IrsGeometry, ue_xy) -> float:
    """|h + g|^2 -- the exact channel power gain of the combined link."""
    h = direct_gain(l, band, ue_xy)
    g = cascaded_gain(l, phases_row, band, irs, ue_xy)
    return float(abs(h + g) ** 2)


def decompose_gain(l, phases_row, band: SubBand, irs: IrsGeometry, ue_xy) -> GainDecomposition:
    """Evaluate every coefficient of the two |h + g|^2 regroupings."""
    inc, dep, r, r_u = _element_phase_bases(irs, l, ue_xy)
    x, y, z = float(l[0]), float(l[1]), float(l[2])
    d = math.sqrt((x - ue_xy[0]) ** 2 + (y - ue_xy[1]) ** 2 + z**2)
    f = band.center_hz
    k_abs = band.absorb_per_m
    w = 2.0 * math.pi * f / C0

    amp_a = C0 / (4.0 * math.pi * f)
    amp_b = C0 / (_CASCADE_DENOM * f * r_u) * math.exp(-0.5 * k_abs * r_u)
    steering = np.exp(-1j * w * (inc + dep))
    s = complex(np.sum(steering * np.exp(1j * np.asarray(phases_row))))
    detour_rot = np.exp(-1j * w * ((r + r_u) - d))

    return GainDecomposition(
        dist=LinkDistances(uav_ue=d, uav_irs=r, irs_ue=r_u),
        direct_amp=amp_a,
        cascade_amp=amp_b,
        absorb=k_abs,
        array_power=abs(s) ** 2,
        cross_mix=amp_a * amp_b * (detour_rot * s).real,
        direct_power=(amp_a / d) ** 2 * math.exp(-k_abs * d),
        cascade_power=(amp_b / r) ** 2 * math.exp(-k_abs * r),
        cross_phasor=complex(2.0 * amp_a * amp_b / (d * r)
                             * math.exp(-0.5 * k_abs * (r + d)) * detour_rot),
        steering=steering,
    )


def gain_from_distance_form(dec: GainDecomposition) -> float:
    """|h + g|^2 reassembled from the distance-form coefficients."""
    d, r = dec.dist.uav_ue, dec.dist.uav_irs
    k = dec.absorb
    return ((dec.direct_amp / d) ** 2 * math.exp(-k * d)
            + (dec.cascade_amp / r) ** 2 * math.exp(-k * r) * dec.array_power
            + 2.0 * dec.cross_mix / (d * r) * math.exp(-0.5 * k * (r + d)))


def gain_from_phase_form(dec: GainDecomposition, phases_row) -> float:
    """|h + g|^2 reassembled from the phase-form coefficients."""
    s = np.sum(dec.steering * np.exp(1j * np.asarray(phases_row)))
    return float(dec.direct_power + dec.cascade_power * abs(s) ** 2
                 + (dec.cross_phasor * s).real)


def link_rate(power_w: float, gain: float, band: SubBand) -> float:
    """Achievable rate of one sub-band, bit/s."""
    bw = band.bandwidth_hz
    return bw * math.log2(1.0 + power_w * gain / (band.noise_psd_w_per_hz * bw))


# =====================================================================
# Precomputed geometry + vectorized fast paths
# =====================================================================

class Geometry:
    """Per-scenario arrays shared by the optimizer blocks.

    Everything static is precomputed once: band constants, element offsets,
    per-user departure phase bases and cascade amplitudes.
    """

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        bands = scenario.bands
        self.freq = np.array([b.center_hz for b in bands])
        self.bandwidth = np.array([b.bandwidth_hz for b in bands])
        self.absorb = np.array([b.absorb_per_m for b in bands])
        self.noise_psd = np.array([b.noise_psd_w_per_hz for b in bands])
        self.wavenumber = 2.0 * np.pi * self.freq / C0
        self.direct_amp = C0 / (4.0 * np.pi * self.freq)            # (I,)

        irs = scenario.irs
        self.anchor_x, _, self.anchor_z = irs.anchor_m
        self.altitude = scenario.uav.altitude_m
        offs = irs.element_offsets()
        self.elem_dx = np.ascontiguousarray(offs[:, 0])
        self.elem_dz = np.ascontiguousarray(offs[:, 1])

        self.ue_xy = np.array(scenario.users_xy_m, dtype=float)     # (U, 2)
        dxu = self.ue_xy[:, 0] - self.anchor_x
        self.irs_ue_dist = np.sqrt(dxu**2 + self.ue_xy[:, 1] ** 2
                                   + self.anchor_z**2)              # (U,)
        # departure phase base per (u, n), meters
        self.depart_base = (dxu[:, None] * self.elem_dx[None, :]
                            - self.anchor_z * self.elem_dz[None, :]) \
            / self.irs_ue_dist[:, None]
        self.depart_base = np.ascontiguousarray(self.depart_base)
        # B_{i,u}
        self.cascade_amp = (C0 / (_CASCADE_DENOM * self.freq[:, None]
                                  * self.irs_ue_dist[None, :])
                            * np.exp(-0.5 * self.absorb[:, None]
                                     * self.irs_ue_dist[None, :]))  # (I, U)

    @property
    def num_bands(self):
        return len(self.freq)

    @property
    def num_users(self):
        return self.ue_xy.shape[0]

    @property
    def num_elements(self):
        return self.elem_dx.shape[0]

    def uav_irs_dist(self, l_xy) -> float:
        dz = self.altitude - self.anchor_z
        return math.sqrt((l_xy[0] - self.anchor_x) ** 2 + l_xy[1] ** 2 + dz * dz)

    def uav_ue_dists(self, l_xy) -> np.ndarray:
        diff = np.asarray(l_xy, dtype=float) - self.ue_xy
        return np.sqrt(diff[:, 0] ** 2 + diff[:, 1] ** 2 + self.altitude**2)

    def incidence_base(self, l_xy) -> np.ndarray:
        """(N,) incidence phase base (meters) at UAV position l_xy."""
        r = self.uav_irs_dist(l_xy)
        return ((self.anchor_x - l_xy[0]) * self.elem_dx
                + (self.anchor_z - self.altitude) * self.elem_dz) / r


def _direct_gains(geom: Geometry, d: float) -> np.ndarray:
    """(I,) complex direct gains at UAV-user range d."""
    return (geom.direct_amp / d
            * np.exp(-(1j * geom.wavenumber + 0.5 * geom.absorb) * d))


def _cascade_prefactors(geom: Geometry, u: int, r: float) -> np.ndarray:
    """(I,) complex cascade prefactors gt (before the element sum)."""
    r_u = geom.irs_ue_dist[u]
    return (geom.cascade_amp[:, u] / r
            * np.exp(-1j * geom.wavenumber * (r + r_u) - 0.5 * geom.absorb * r))


def gain_table(geom: Geometry, l_xy, phases_row) -> np.ndarray:
    """Exact |h + g|^2 for every (band, user) at one UAV position: (I, U)."""
    inc = geom.incidence_base(l_xy)
    r = geom.uav_irs_dist(l_xy)
    d_all = geom.uav_ue_dists(l_xy)
    phases_row = np.ascontiguousarray(phases_row, dtype=float)
    out = np.empty((geom.num_bands, geom.num_users))
    for u in range(geom.num_users):
        base = np.ascontiguousarray(inc + geom.depart_base[u])
        s = _kernels.phase_sums(base, phases_row, geom.wavenumber)
        h = _direct_gains(geom, d_all[u])
        g = _cascade_prefactors(geom, u, r) * s
        out[:, u] = np.abs(h + g) ** 2
    return out


def assigned_gains(geom: Geometry, l_xy, phases_row, band_ue) -> np.ndarray:
    """Exact |h + g|^2 per band for its assigned user only: (I,).

    Row-for-row bit-identical with gain_table (each band's phase sum is a
    self-contained row reduction), at roughly 1/U of the cost.
    """
    inc = geom.incidence_base(l_xy)
    r = geom.uav_irs_dist(l_xy)
    d_all = geom.uav_ue_dists(l_xy)
    phases_row = np.ascontiguousarray(phases_row, dtype=float)
    out = np.empty(geom.num_bands)
    for u in np.unique(band_ue):
        sel = np.flatnonzero(band_ue == u)
        base = np.ascontiguousarray(inc + geom.depart_base[u])
        s = _kernels.phase_sums(base, phases_row,
                                np.ascontiguousarray(geom.wavenumber[sel]))
        h = _direct_gains(geom, d_all[u])[sel]
        g = _cascade_prefactors(geom, u, r)[sel] * s
        out[sel] = np.abs(h + g) ** 2
    return out


def rates_from_gains(geom: Geometry, powers_row, gains) -> np.ndarray:
    """Per-band rates (bit/s) given per-band powers and gains (both (I,))."""
    snr = powers_row * gains / (geom.noise_psd * geom.bandwidth)
    return geom.bandwidth * np.log2(1.0 + snr)


def slot_user_totals(geom: Geometry, powers_row, gains_assigned, band_ue) -> np.ndarray:
    """(U,) per-user rate totals of one slot under an assignment."""
    rates = rates_from_gains(geom, powers_row, gains_assigned)
    return np.bincount(band_ue, weights=rates, minlength=geom.num_users)


def user_rate_matrix(geom: Geometry, trajectory, phases, powers, band_ue) -> np.ndarray:
    """(T, U) per-slot per-user rate totals for a full plan."""
    num_slots = trajectory.shape[0]
    out = np.empty((num_slots, geom.num_users))
    for t in range(num_slots):
        gains = assigned_gains(geom, trajectory[t], phases[t], band_ue)
        out[t] = slot_user_totals(geom, powers[t], gains, band_ue)
    return out
