"""Convex path-decay kernels and the per-slot gain surrogate.

The trajectory block freezes the phase-dependent pieces of the channel gain
(``array_power`` C and ``cross_mix`` D of the distance form) and keeps only
the distance dependence:

    H_hat(d, r) = A^2 f(d) + C' B^2 f(r) + 2 D' q(d, r)

with f(x) = exp(-K x)/x^2 and q(x, y) = exp(-K (x+y)/2)/(x y).  Both kernels
are convex on x, y > 0 (f'' > 0; the Hessian of q is positive definite), so
for C', D' >= 0 the first-order Taylor expansion of H_hat is a global
under-estimator -- the inequality the per-slot search relies on.

The kernels compute in extended precision (longdouble) so that positivity
survives arguments as large as K*x ~ 1e3, where exp(-K x) underflows plain
float64 to zero; the Taylor coefficients handed to the hot search loop are
cast back to float64.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import GainDecomposition

_LD = np.longdouble


def power_falloff(x, absorb):
    """f(x) = exp(-K x) / x^2 -- squared-amplitude decay of one path leg."""
    x = np.asarray(x, dtype=_LD)
    k = np.asarray(absorb, dtype=_LD)
    return np.exp(-k * x) / (x * x)


def power_falloff_d1(x, absorb):
    """f'(x) = -(K x + 2) exp(-K x) / x^3."""
    x = np.asarray(x, dtype=_LD)
    k = np.asarray(absorb, dtype=_LD)
    return -(k * x + 2.0) * np.exp(-k * x) / (x * x * x)


def power_falloff_d2(x, absorb):
    """f''(x) = ((K x + 2)^2 + 2) exp(-K x) / x^4  (> 0 for x > 0)."""
    x = np.asarray(x, dtype=_LD)
    k = np.asarray(absorb, dtype=_LD)
    return ((k * x + 2.0) ** 2 + 2.0) * np.exp(-k * x) / (x * x * x * x)


def cross_falloff(x, y, absorb):
    """q(x, y) = exp(-K (x + y)/2) / (x y) -- the direct/cascade cross term."""
    x = np.asarray(x, dtype=_LD)
    y = np.asarray(y, dtype=_LD)
    k = np.asarray(absorb, dtype=_LD)
    return np.exp(-0.5 * k * (x + y)) / (x * y)


def cross_falloff_grad(x, y, absorb):
    """(dq/dx, dq/dy)."""
    x = np.asarray(x, dtype=_LD)
    y = np.asarray(y, dtype=_LD)
    k = np.asarray(absorb, dtype=_LD)
    e = np.exp(-0.5 * k * (x + y))
    qx = -(0.5 * k * x + 1.0) / (x * x * y) * e
    qy = -(0.5 * k * y + 1.0) / (y * y * x) * e
    return qx, qy


def cross_falloff_hessian(x, y, absorb):
    """Hessian of q, shape (..., 2, 2); positive definite for x, y > 0."""
    x = np.asarray(x, dtype=_LD)
    y = np.asarray(y, dtype=_LD)
    k = np.asarray(absorb, dtype=_LD)
    q = np.exp(-0.5 * k * (x + y)) / (x * y)
    gx = 0.5 * k * x + 1.0
    gy = 0.5 * k * y + 1.0
    hxx = q * (gx * gx + 1.0) / (x * x)
    hyy = q * (gy * gy + 1.0) / (y * y)
    hxy = q * gx * gy / (x * y)
    out = np.empty(np.broadcast(x, y, k).shape + (2, 2), dtype=_LD)
    out[..., 0, 0] = hxx
    out[..., 0, 1] = hxy
    out[..., 1, 0] = hxy
    out[..., 1, 1] = hyy
    return out


# =====================================================================
# Frozen surrogate and its linearization
# =====================================================================

@dataclass(frozen=True)
class ExpansionPoint:
    """Reference state for one (band, user): distances at the reference UAV
    position plus the frozen phase-dependent coefficients."""

    dist_ue: float      # d' at the reference position
    dist_irs: float     # r' at the reference position
    array_power: float  # C' (frozen)
    cross_mix: float    # D' (frozen)
    direct_amp: float   # A
    cascade_amp: float  # B
    absorb: float       # K


def expansion_point(dec: GainDecomposition) -> ExpansionPoint:
    """Freeze a channel decomposition into a surrogate expansion point."""
    return ExpansionPoint(
        dist_ue=dec.dist.uav_ue,
        dist_irs=dec.dist.uav_irs,
        array_power=dec.array_power,
        cross_mix=dec.cross_mix,
        direct_amp=dec.direct_amp,
        cascade_amp=dec.cascade_amp,
        absorb=dec.absorb,
    )


@dataclass(frozen=True)
class TaylorCoefficients:
    """First-order expansion H_hat ~= slope_ue*d + slope_irs*r + offset."""

    slope_ue: float
    slope_irs: float
    offset: float


def frozen_gain(ep: ExpansionPoint, dist_ue: float, dist_irs: float) -> float:
    """H_hat at distances (d, r) with the phase terms frozen at C', D'."""
    val = (ep.direct_amp**2 * power_falloff(dist_ue, ep.absorb)
           + ep.array_power * ep.cascade_amp**2
           * power_falloff(dist_irs, ep.absorb)
           + 2.0 * ep.cross_mix * cross_falloff(dist_ue, dist_irs, ep.absorb))
    return float(val)


def taylor_coefficients(ep: ExpansionPoint) -> TaylorCoefficients:
    """Tangent plane of H_hat at the expansion point.

    The offset is assembled in float64 from the float64 slopes, so the
    tangency identity holds to rounding error when linearized_gain is
    evaluated back at (d', r').
    """
    qx, qy = cross_falloff_grad(ep.dist_ue, ep.dist_irs, ep.absorb)
    slope_ue = float(ep.direct_amp**2 * power_falloff_d1(ep.dist_ue, ep.absorb)
                     + 2.0 * ep.cross_mix * qx)
    slope_irs = float(ep.array_power * ep.cascade_amp**2
                      * power_falloff_d1(ep.dist_irs, ep.absorb)
                      + 2.0 * ep.cross_mix * qy)
    offset = (frozen_gain(ep, ep.dist_ue, ep.dist_irs)
              - slope_ue * ep.dist_ue - slope_irs * ep.dist_irs)
    return TaylorCoefficients(slope_ue=slope_ue, slope_irs=slope_irs,
                              offset=offset)


def linearized_gain(tc: TaylorCoefficients, dist_ue: float, dist_irs: float) -> float:
    """Tangent-plane gain estimate at distances (d, r)."""
    return tc.slope_ue * dist_ue + tc.slope_irs * dist_irs + tc.offset


def taylor_arrays(dist_ue, dist_irs, array_power, cross_mix, direct_amp,
                  cascade_amp, absorb):
    """Vectorized taylor_coefficients over bands sharing one expansion
    position; returns float64 (slope_ue, slope_irs, offset) arrays."""
    qx, qy = cross_falloff_grad(dist_ue, dist_irs, absorb)
    slope_ue = np.asarray(
        direct_amp**2 * power_falloff_d1(dist_ue, absorb) + 2.0 * cross_mix * qx,
        dtype=float)
    slope_irs = np.asarray(
        array_power * cascade_amp**2 * power_falloff_d1(dist_irs, absorb)
        + 2.0 * cross_mix * qy, dtype=float)
    frozen = np.asarray(
        direct_amp**2 * power_falloff(dist_ue, absorb)
        + array_power * cascade_amp**2 * power_falloff(dist_irs, absorb)
        + 2.0 * cross_mix * cross_falloff(dist_ue, dist_irs, absorb),
        dtype=float)
    offset = (frozen - slope_ue * np.asarray(dist_ue, dtype=float)
              - slope_irs * np.asarray(dist_irs, dtype=float))
    return slope_ue, slope_irs, offset
