"""Scenario definition, validation, and (de)serialization.

A scenario is everything the optimizer needs to reproduce a run: THz
sub-band grid with molecular-absorption coefficients, surface geometry,
UAV limits, user positions, solver tolerances, and the RNG seed.  Files are
YAML (schema ``version: v1``, documented in the README); the molecular
absorption profile may be given as a synthetic recipe, as inline samples,
or as an external two-column CSV.

All positions are meters.  Sub-band index convention is 1-based to match
the usual "sub-band i of I" phrasing; arrays elsewhere are 0-based.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
import os
from dataclasses import dataclass, field

import numpy as np
import yaml

SCHEMA_VERSION = "v1"


class ScenarioError(ValueError):
    """Raised when a scenario file violates a documented invariant."""


# =====================================================================
# Types
# =====================================================================

@dataclass(frozen=True)
class SubBand:
    """One THz sub-band of the transmission window."""

    index: int              # 1-based position in the grid
    center_hz: float        # carrier f_i
    bandwidth_hz: float     # B_i
    absorb_per_m: float     # molecular absorption coefficient K(f_i)
    noise_psd_w_per_hz: float


@dataclass(frozen=True)
class IrsGeometry:
    """Wall-mounted uniform planar array of passive elements.

    The anchor is the first element; the array extends along +x with
    spacing_x_m and along +z with spacing_z_m.  Element (n_x, n_z), both
    1-based, is flattened to n = n_z + (n_x - 1) * num_z (1-based), i.e.
    the vertical index varies fastest.
    """

    anchor_m: tuple[float, float, float]  # (a, 0, c); wall plane is y = 0
    num_x: int
    num_z: int
    spacing_x_m: float
    spacing_z_m: float

    @property
    def num_elements(self) -> int:
        return self.num_x * self.num_z

    def element_offsets(self):
        """(N, 2) array of ((n_x-1)*dx, (n_z-1)*dz) in flattening order."""
        nx = np.repeat(np.arange(self.num_x), self.num_z)
        nz = np.tile(np.arange(self.num_z), self.num_x)
        return np.column_stack([nx * self.spacing_x_m, nz * self.spacing_z_m])


@dataclass(frozen=True)
class UavParams:
    altitude_m: float       # fixed flight height H
    max_speed_mps: float    # V_max
    max_power_w: float      # p_max, total over sub-bands per slot
    horizon_s: float        # transmission duration T_s
    num_slots: int          # T
    start_xy_m: tuple[float, float]  # launch/landing point (z = altitude)

    @property
    def travel_budget_m(self) -> float:
        """Maximum distance per slot: V_max * T_s / T."""
        return self.max_speed_mps * self.horizon_s / self.num_slots


@dataclass(frozen=True)
class Tolerances:
    trajectory_m: float = 1e-3   # sweep convergence for the trajectory block
    outer_rel: float = 1e-4      # relative R_th change ending the outer loop
    phase_rad: float = 1e-4      # element-wise phase-change stop, inner loop


@dataclass(frozen=True)
class PricingParams:
    initial_factor: float = 1.0  # starting value of every pricing factor
    inner_iterations: int = 50   # cap on closed-form/pricing iterations


@dataclass(frozen=True)
class AbsorptionTable:
    """Sampled molecular absorption coefficient K(f), linear interpolation."""

    frequencies_hz: tuple[float, ...]
    k_per_m: tuple[float, ...]


@dataclass(frozen=True)
class Scenario:
    bands: tuple[SubBand, ...]
    users_xy_m: tuple[tuple[float, float], ...]
    irs: IrsGeometry
    uav: UavParams
    absorption: AbsorptionTable
    tolerances: Tolerances = field(default_factory=Tolerances)
    pricing: PricingParams = field(default_factory=PricingParams)
    seed: int = 0

    @property
    def num_users(self) -> int:
        return len(self.users_xy_m)

    @property
    def num_bands(self) -> int:
        return len(self.bands)


# =====================================================================
# Absorption profile
# =====================================================================

def synthesize_absorption(f_min_hz, f_max_hz, samples, baseline_per_m, peaks=()):
    """Build a synthetic absorption table: baseline plus Lorentzian peaks.

    K(f) = baseline + sum_p h_p * w_p^2 / ((f - c_p)^2 + w_p^2)

    so each peak contributes exactly ``h`` at its center and ``h/2`` at one
    half-width away.  ``peaks`` is an iterable of (center_hz, height_per_m,
    width_hz) triples.
    """
    if samples < 2:
        raise ScenarioError("absorption samples must be >= 2")
    if not f_max_hz > f_min_hz > 0.0:
        raise ScenarioError("absorption range must satisfy 0 < f_min < f_max")
    if baseline_per_m < 0.0:
        raise ScenarioError("absorption coefficients must be >= 0")
    f = np.linspace(f_min_hz, f_max_hz, samples)
    k = np.full(samples, float(baseline_per_m))
    for center, height, width in peaks:
        if height < 0.0 or width <= 0.0:
            raise ScenarioError("absorption peaks need height >= 0 and width > 0")
        k += height * width**2 / ((f - center) ** 2 + width**2)
    return AbsorptionTable(tuple(float(x) for x in f), tuple(float(x) for x in k))


def absorption_at(table: AbsorptionTable, f_hz: float) -> float:
    """Linearly interpolated K(f); out-of-range frequencies are an error."""
    freqs = table.frequencies_hz
    if not freqs[0] <= f_hz <= freqs[-1]:
        raise ScenarioError(
            f"frequency {f_hz} Hz outside absorption table range "
            f"[{freqs[0]}, {freqs[-1]}]")
    return float(np.interp(f_hz, freqs, table.k_per_m))


def _validate_table(table: AbsorptionTable):
    freqs = np.asarray(table.frequencies_hz)
    if len(freqs) < 2:
        raise ScenarioError("absorption table needs at least 2 samples")
    if not np.all(np.diff(freqs) > 0):
        raise ScenarioError("absorption table frequencies must be strictly increasing")
    if np.any(np.asarray(table.k_per_m) < 0):
        raise ScenarioError("absorption coefficients must be >= 0")


def _load_absorption_csv(path: str) -> AbsorptionTable:
    freqs, ks = [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or \
                [c.strip() for c in reader.fieldnames] != ["frequency_hz", "k_per_m"]:
            raise ScenarioError(
                "absorption CSV must have header 'frequency_hz,k_per_m'")
        for row in reader:
            freqs.append(float(row["frequency_hz"]))
            ks.append(float(row["k_per_m"]))
    table = AbsorptionTable(tuple(freqs), tuple(ks))
    _validate_table(table)
    return table


# =====================================================================
# Parsing / validation
# =====================================================================

def _require(mapping, key, where):
    if key not in mapping:
        raise ScenarioError(f"missing required field '{key}' in {where}")
    return mapping[key]


def _build_absorption(spec, base_dir):
    kind = _require(spec, "kind", "absorption")
    if kind == "synthetic":
        peaks = [(float(p["center_hz"]), float(p["height_per_m"]),
                  float(p["width_hz"])) for p in spec.get("peaks", [])]
        return synthesize_absorption(
            float(_require(spec, "f_min_hz", "absorption")),
            float(_require(spec, "f_max_hz", "absorption")),
            int(_require(spec, "samples", "absorption")),
            float(_require(spec, "baseline_per_m", "absorption")),
            peaks)
    if kind == "samples":
        table = AbsorptionTable(
            tuple(float(x) for x in _require(spec, "frequencies_hz", "absorption")),
            tuple(float(x) for x in _require(spec, "k_per_m", "absorption")))
        _validate_table(table)
        return table
    if kind == "csv":
        path = _require(spec, "path", "absorption")
        if not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        return _load_absorption_csv(path)
    raise ScenarioError(f"unknown absorption kind '{kind}'")


def build_scenario(doc: dict, base_dir: str = ".") -> Scenario:
    """Validate a parsed mapping and construct a Scenario."""
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a mapping")
    if doc.get("version") != SCHEMA_VERSION:
        raise ScenarioError(f"version must be {SCHEMA_VERSION}")

    uav_doc = _require(doc, "uav", "scenario")
    irs_doc = _require(doc, "irs", "scenario")
    users_doc = _require(doc, "users_xy_m", "scenario")
    sb_doc = _require(doc, "subbands", "scenario")
    abs_doc = _require(doc, "absorption", "scenario")

    # --- UAV ---
    uav = UavParams(
        altitude_m=float(_require(uav_doc, "altitude_m", "uav")),
        max_speed_mps=float(_require(uav_doc, "max_speed_mps", "uav")),
        max_power_w=float(_require(uav_doc, "max_power_w", "uav")),
        horizon_s=float(_require(uav_doc, "horizon_s", "uav")),
        num_slots=int(_require(uav_doc, "num_slots", "uav")),
        start_xy_m=tuple(float(x) for x in _require(uav_doc, "start_xy_m", "uav")),
    )
    if uav.altitude_m <= 0:
        raise ScenarioError("altitude_m must be > 0")
    if uav.max_speed_mps <= 0:
        raise ScenarioError("max_speed_mps must be > 0")
    if uav.max_power_w <= 0:
        raise ScenarioError("max_power_w must be > 0")
    if uav.horizon_s <= 0:
        raise ScenarioError("horizon_s must be > 0")
    if uav.num_slots < 2:
        raise ScenarioError("num_slots must be >= 2")
    if len(uav.start_xy_m) != 2:
        raise ScenarioError("start_xy_m must be [x, y]")

    # --- IRS ---
    anchor = tuple(float(x) for x in _require(irs_doc, "anchor_m", "irs"))
    if len(anchor) != 3:
        raise ScenarioError("anchor_m must be [x, y, z]")
    if anchor[1] != 0.0:
        raise ScenarioError("anchor y-coordinate must be 0 (wall plane)")
    if anchor[2] <= 0.0:
        raise ScenarioError("anchor height must be > 0")
    irs = IrsGeometry(
        anchor_m=anchor,
        num_x=int(_require(irs_doc, "num_x", "irs")),
        num_z=int(_require(irs_doc, "num_z", "irs")),
        spacing_x_m=float(_require(irs_doc, "spacing_x_m", "irs")),
        spacing_z_m=float(_require(irs_doc, "spacing_z_m", "irs")),
    )
    if irs.num_x < 1:
        raise ScenarioError("num_x must be >= 1")
    if irs.num_z < 1:
        raise ScenarioError("num_z must be >= 1")
    if irs.spacing_x_m <= 0:
        raise ScenarioError("spacing_x_m must be > 0")
    if irs.spacing_z_m <= 0:
        raise ScenarioError("spacing_z_m must be > 0")

    # --- users ---
    if not users_doc:
        raise ScenarioError("users_xy_m must contain at least one user")
    users = []
    for entry in users_doc:
        if len(entry) != 2:
            raise ScenarioError("user positions must be 2-D [x, y] (ground level)")
        users.append((float(entry[0]), float(entry[1])))
    users = tuple(users)
    for ux, uy in users:
        ax, _, az = anchor
        if math.hypot(ux - ax, uy) == 0.0 and az == 0.0:
            raise ScenarioError("user may not coincide with the surface anchor")

    # --- absorption, then sub-bands ---
    table = _build_absorption(abs_doc, base_dir)

    noise = float(_require(sb_doc, "noise_psd_w_per_hz", "subbands"))
    if noise <= 0:
        raise ScenarioError("noise_psd_w_per_hz must be > 0")
    if "centers_hz" in sb_doc:
        centers = [float(x) for x in sb_doc["centers_hz"]]
        width = float(_require(sb_doc, "bandwidth_hz", "subbands"))
    else:
        count = int(_require(sb_doc, "count", "subbands"))
        f_min = float(_require(sb_doc, "f_min_hz", "subbands"))
        f_max = float(_require(sb_doc, "f_max_hz", "subbands"))
        if count < 1:
            raise ScenarioError("subband count must be >= 1")
        if not f_max > f_min > 0:
            raise ScenarioError("subband range must satisfy 0 < f_min_hz < f_max_hz")
        width = (f_max - f_min) / count
        centers = [f_min + (i + 0.5) * width for i in range(count)]
    if len(centers) < len(users):
        raise ScenarioError("subband count must be >= number of users")
    if width <= 0:
        raise ScenarioError("bandwidth_hz must be > 0")
    if any(c <= 0 for c in centers):
        raise ScenarioError("subband centers must be > 0")
    if any(b - a <= 0 for a, b in zip(centers, centers[1:])):
        raise ScenarioError("subband centers must be strictly increasing")
    bands = tuple(
        SubBand(index=i + 1,
                center_hz=center,
                bandwidth_hz=width,
                absorb_per_m=absorption_at(table, center),
                noise_psd_w_per_hz=noise)
        for i, center in enumerate(centers))

    # --- solver knobs ---
    tol_doc = doc.get("tolerances", {})
    tol = Tolerances(
        trajectory_m=float(tol_doc.get("trajectory_m", Tolerances.trajectory_m)),
        outer_rel=float(tol_doc.get("outer_rel", Tolerances.outer_rel)),
        phase_rad=float(tol_doc.get("phase_rad", Tolerances.phase_rad)),
    )
    if min(tol.trajectory_m, tol.outer_rel, tol.phase_rad) <= 0:
        raise ScenarioError("tolerances must be > 0")
    pr_doc = doc.get("pricing", {})
    pricing = PricingParams(
        initial_factor=float(pr_doc.get("initial_factor",
                                        PricingParams.initial_factor)),
        inner_iterations=int(pr_doc.get("inner_iterations",
                                        PricingParams.inner_iterations)),
    )
    if pricing.initial_factor < 0:
        raise ScenarioError("pricing initial_factor must be >= 0")
    if pricing.inner_iterations < 1:
        raise ScenarioError("pricing inner_iterations must be >= 1")

    seed = int(doc.get("seed", 0))
    if seed < 0:
        raise ScenarioError("seed must be a non-negative integer")

    return Scenario(bands=bands, users_xy_m=users, irs=irs, uav=uav,
                    absorption=table, tolerances=tol, pricing=pricing,
                    seed=seed)


def parse_scenario(text: str, base_dir: str = ".") -> Scenario:
    try:
        doc = yaml.safe_load(io.StringIO(text))
    except yaml.YAMLError as exc:
        raise ScenarioError(f"scenario file is not valid YAML: {exc}") from exc
    return build_scenario(doc, base_dir)


def load_scenario(path: str) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_scenario(text, base_dir=os.path.dirname(os.path.abspath(path)))


# =====================================================================
# Serialization
# =====================================================================

def serialize_scenario(scn: Scenario) -> str:
    """Canonical YAML form; ``parse_scenario(serialize_scenario(s))`` == s.

    The absorption profile is always emitted as inline samples so the
    output is self-contained regardless of how the scenario was built.
    """
    bands = scn.bands
    doc = {
        "version": SCHEMA_VERSION,
        "seed": scn.seed,
        "uav": {
            "altitude_m": scn.uav.altitude_m,
            "max_speed_mps": scn.uav.max_speed_mps,
            "max_power_w": scn.uav.max_power_w,
            "horizon_s": scn.uav.horizon_s,
            "num_slots": scn.uav.num_slots,
            "start_xy_m": list(scn.uav.start_xy_m),
        },
        "irs": {
            "anchor_m": list(scn.irs.anchor_m),
            "num_x": scn.irs.num_x,
            "num_z": scn.irs.num_z,
            "spacing_x_m": scn.irs.spacing_x_m,
            "spacing_z_m": scn.irs.spacing_z_m,
        },
        "users_xy_m": [list(u) for u in scn.users_xy_m],
        "subbands": {
            "centers_hz": [b.center_hz for b in bands],
            "bandwidth_hz": bands[0].bandwidth_hz,
            "noise_psd_w_per_hz": bands[0].noise_psd_w_per_hz,
        },
        "absorption": {
            "kind": "samples",
            "frequencies_hz": list(scn.absorption.frequencies_hz),
            "k_per_m": list(scn.absorption.k_per_m),
        },
        "tolerances": {
            "trajectory_m": scn.tolerances.trajectory_m,
            "outer_rel": scn.tolerances.outer_rel,
            "phase_rad": scn.tolerances.phase_rad,
        },
        "pricing": {
            "initial_factor": scn.pricing.initial_factor,
            "inner_iterations": scn.pricing.inner_iterations,
        },
    }
    return yaml.safe_dump(doc, sort_keys=False)


def scenario_digest(scn: Scenario) -> str:
    """Stable content hash of a scenario (sha256 of its canonical form)."""
    return hashlib.sha256(serialize_scenario(scn).encode()).hexdigest()


def default_scenario_path() -> str:
    """Path of the scenario file shipped with the package."""
    return os.path.join(os.path.dirname(__file__), "data", "default.yaml")
