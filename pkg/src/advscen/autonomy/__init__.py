"""Systems under test: detector, forecaster, planner and the two stacks."""

from .perception import Detection, PredictedActor, detect, fit_box, forecast
from .planner import Obstacle, Plan, PlannerInput, SamplingPlanner
from .stacks import GroundTruthStack, SensorStack, make_stack, planner_input, run_stack

__all__ = [
    "Detection",
    "GroundTruthStack",
    "Obstacle",
    "Plan",
    "PlannerInput",
    "PredictedActor",
    "SamplingPlanner",
    "SensorStack",
    "detect",
    "fit_box",
    "forecast",
    "make_stack",
    "planner_input",
    "run_stack",
]
