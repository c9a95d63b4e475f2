"""Shared scenario builders sized for fast, exact tests."""

from __future__ import annotations

import numpy as np
import pytest

from thzuav import scenario as scenario_mod


def make_scenario(**overrides):
    """A small but fully featured scenario; override any top-level section."""
    doc = {
        "version": "v1",
        "seed": 7,
        "uav": {
            "altitude_m": 10.0,
            "max_speed_mps": 2.0,
            "max_power_w": 1.0,
            "horizon_s": 24.0,
            "num_slots": 10,
            "start_xy_m": [3.0, 9.0],
        },
        "irs": {
            "anchor_m": [0.0, 0.0, 2.0],
            "num_x": 2,
            "num_z": 3,
            "spacing_x_m": 0.005,
            "spacing_z_m": 0.005,
        },
        "users_xy_m": [[-7.0, 13.0], [6.0, 4.0]],
        "subbands": {
            "count": 6,
            "f_min_hz": 2.0e11,
            "f_max_hz": 3.0e11,
            "noise_psd_w_per_hz": 3.9810717055349695e-21,
        },
        "absorption": {
            "kind": "synthetic",
            "f_min_hz": 1.5e11,
            "f_max_hz": 3.5e11,
            "samples": 201,
            "baseline_per_m": 0.005,
            "peaks": [
                {"center_hz": 2.55e11, "height_per_m": 0.08,
                 "width_hz": 5.0e9},
            ],
        },
        "tolerances": {
            "trajectory_m": 1e-3,
            "outer_rel": 1e-4,
            "phase_rad": 1e-4,
        },
        "pricing": {
            "initial_factor": 1.0,
            "inner_iterations": 50,
        },
    }
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(doc.get(key), dict):
            doc[key] = {**doc[key], **value}
        else:
            doc[key] = value
    return scenario_mod.build_scenario(doc)


def make_mirrored_scenario(**overrides):
    """Two users mirrored in x about the surface anchor, surface a single
    column (num_x = 1) and the UAV starting on the mirror axis, so the two
    users' gain columns are exactly equal whenever the UAV sits on x = 0
    and swap under the slot mirror symmetry of the initial circle."""
    base = {
        "users_xy_m": [[-9.0, 14.0], [9.0, 14.0]],
        "uav": {"start_xy_m": [0.0, 5.0]},
        "irs": {"num_x": 1, "num_z": 6},
    }
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            base[key] = {**base[key], **value}
        else:
            base[key] = value
    return make_scenario(**base)


@pytest.fixture(scope="session")
def small_scenario():
    return make_scenario()


@pytest.fixture(scope="session")
def mirrored_scenario():
    return make_mirrored_scenario()


@pytest.fixture(scope="session")
def default_scenario():
    return scenario_mod.load_scenario(scenario_mod.default_scenario_path())


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
