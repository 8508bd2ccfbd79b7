"""Carbon-aware temporal scheduling of inter-datacenter transfers."""

from linsched.heuristics import HeuristicConfig
from linsched.lints import build_problem, schedule
from linsched.model import Models, PowerModel, ThroughputModel
from linsched.plan import SchedulePlan, TransferRequest, UnschedulableError, request_traces
from linsched.sim import EmissionsReport, compare, evaluate, verify
from linsched.trace import CarbonTrace, PathSpec, SlotGrid

__all__ = [
    "CarbonTrace",
    "EmissionsReport",
    "HeuristicConfig",
    "Models",
    "PathSpec",
    "PowerModel",
    "SchedulePlan",
    "SlotGrid",
    "ThroughputModel",
    "TransferRequest",
    "UnschedulableError",
    "build_problem",
    "compare",
    "evaluate",
    "request_traces",
    "schedule",
    "verify",
]
