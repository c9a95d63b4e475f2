"""Max-min rate optimization for a UAV THz downlink with a reflecting-surface assist.

The package simulates a rotary-wing UAV serving ground users over THz
sub-bands, with an optional reflected path through a wall-mounted passive
surface, and optimizes the minimum average user rate by block-coordinate
ascent over three blocks:

* UAV trajectory (successive convex surrogate + per-slot repair search),
* per-element surface phase shifts (closed form with pricing factors),
* sub-band assignment and transmit power (weighted water-filling).
"""

from .scenario import Scenario, ScenarioError, load_scenario, default_scenario_path
from .engine import MODES, WorldState, initialize, run, exact_min_avg_rate

__version__ = "0.1.0"

__all__ = [
    "Scenario",
    "ScenarioError",
    "load_scenario",
    "default_scenario_path",
    "MODES",
    "WorldState",
    "initialize",
    "run",
    "exact_min_avg_rate",
    "__version__",
]
