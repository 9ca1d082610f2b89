"""Deterministic teleoperation world: plants, network, scenarios, metrics."""

from .metrics import EmptyMetricsError, MetricsReport, percentile_nearest_rank, rms
from .network import NetworkLink, NetworkModel, deliver_time
from .plants import ArmPlant, GripperPlant, HeadPlant
from .runner import apply_limit_overrides, build_world, run_replay, run_scenario
from .scenario import Goal, Keyframe, ScenarioScript, ScriptError, load_scenario, parse_scenario
from .world import CONTROL_PERIOD_US, STEP_US, World

__all__ = [
    "ArmPlant",
    "CONTROL_PERIOD_US",
    "EmptyMetricsError",
    "Goal",
    "GripperPlant",
    "HeadPlant",
    "Keyframe",
    "MetricsReport",
    "NetworkLink",
    "NetworkModel",
    "STEP_US",
    "ScenarioScript",
    "ScriptError",
    "World",
    "apply_limit_overrides",
    "build_world",
    "deliver_time",
    "load_scenario",
    "parse_scenario",
    "percentile_nearest_rank",
    "rms",
    "run_replay",
    "run_scenario",
]
