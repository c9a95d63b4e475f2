"""Pure-numpy implementation of the hot kernels (fallback backend)."""

import numpy as np


def phase_sums(base, phases, wavenumbers):
    """Cascaded phase sums over the surface elements, one per sub-band.

    Parameters
    ----------
    base : (N,) float64
        Per-element geometric phase base in meters: the incidence and
        departure path-difference terms divided by their respective ranges,
        so that multiplying by a wavenumber 2*pi*f/c yields radians.
    phases : (N,) float64
        Applied per-element phase shifts, radians.
    wavenumbers : (I,) float64
        2*pi*f_i/c for each sub-band.

    Returns
    -------
    (I,) complex128 : S_i = sum_n exp(j*(phases[n] - k_i*base[n]))
    """
    ang = phases[None, :] - wavenumbers[:, None] * base[None, :]
    return np.exp(1j * ang).sum(axis=1)


def candidate_scores(cand_xy, ue_xy, alt_sq, irs_x, irs_dz_sq, band_ue,
                     slope_ue, slope_irs, offset, snr_scale, bandwidth, resid):
    """Worst-user linearized slot throughput for candidate UAV positions.

    For candidate position (x, y) the per-band linearized gain is
    ``slope_ue*d_u + slope_irs*r + offset`` (clamped at 0) where d_u is the
    distance to the band's assigned user and r the distance to the surface
    anchor; the score is min over users of (sum of that user's band rates
    plus its residual rate over the other slots).

    Parameters
    ----------
    cand_xy : (M, 2) float64
    ue_xy : (U, 2) float64
    alt_sq : float           -- squared UAV altitude
    irs_x : float            -- anchor x (anchor y is 0)
    irs_dz_sq : float        -- squared altitude difference UAV-anchor
    band_ue : (I,) int64     -- assigned user per band
    slope_ue, slope_irs, offset : (I,) float64
    snr_scale : (I,) float64 -- p_i / (noise_psd_i * bandwidth_i)
    bandwidth : (I,) float64
    resid : (U,) float64     -- per-user rate total over the other slots

    Returns
    -------
    (M,) float64
    """
    dx = cand_xy[:, 0:1] - ue_xy[None, :, 0]
    dy = cand_xy[:, 1:2] - ue_xy[None, :, 1]
    d = np.sqrt(dx * dx + dy * dy + alt_sq)                      # (M, U)
    r = np.sqrt((cand_xy[:, 0] - irs_x) ** 2 + cand_xy[:, 1] ** 2
                + irs_dz_sq)                                     # (M,)
    lin = (slope_ue[None, :] * d[:, band_ue]
           + slope_irs[None, :] * r[:, None] + offset[None, :])
    rate = bandwidth * np.log2(1.0 + snr_scale * np.maximum(lin, 0.0))
    num_ue = ue_xy.shape[0]
    acc = np.empty((cand_xy.shape[0], num_ue))
    for u in range(num_ue):
        sel = band_ue == u
        acc[:, u] = rate[:, sel].sum(axis=1) + resid[u]
    return acc.min(axis=1)
