"""Multi-period planning of cellular network upgrades, sharing and decommissioning."""
from .assessment import INDEPENDENT, SHARED, ProportionalAssessor, assess, goal1_violations, goal2_satisfied, hhi
from .planner import Infeasible, NonConvergence, PlanResult, phase1_capacity, phase2_competition, phase3_cost, plan
from .report import build_report, write_report
from .scenario import (OFF, BaseStation, Change, GeneratorParams, ParseError, Scenario, Schedule, StationType,
                       SubscriberCluster, generate, load, save, validate)
from .scheduling import ChangeRequest, check_necessary, greedy_schedule, schedule_change

__all__ = [
    "INDEPENDENT", "SHARED", "OFF",
    "BaseStation", "Change", "ChangeRequest", "GeneratorParams", "Infeasible", "NonConvergence", "ParseError",
    "PlanResult", "ProportionalAssessor", "Scenario", "Schedule", "StationType", "SubscriberCluster",
    "assess", "build_report", "check_necessary", "generate", "goal1_violations", "goal2_satisfied", "greedy_schedule", "hhi",
    "load", "phase1_capacity", "phase2_competition", "phase3_cost", "plan", "save", "schedule_change", "validate", "write_report",
]
