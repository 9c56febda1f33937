"""Batch agent dynamics: myopic best response and random relocation.

The hot loop runs on a compiled kernel when the extension built, with a
pure-Python twin as fallback; `kernel_backend()` reports which one is live.
"""

from ._backend import BACKEND, COMPILED, kernel_backend
from .api import (
    best_response_choice,
    candidate_set,
    chosen_direction,
    evaluate_candidate,
    initial_placement,
    random_relocation_choice,
    step,
)
from .params import (
    BatchResult,
    BatchSummary,
    Placement,
    Policy,
    RunMetrics,
    RunResult,
    SimulationParams,
)
from .runner import batch, run, run_logged, run_seed

__all__ = [
    "BACKEND",
    "COMPILED",
    "BatchResult",
    "BatchSummary",
    "Placement",
    "Policy",
    "RunMetrics",
    "RunResult",
    "SimulationParams",
    "batch",
    "best_response_choice",
    "candidate_set",
    "chosen_direction",
    "evaluate_candidate",
    "initial_placement",
    "kernel_backend",
    "random_relocation_choice",
    "run",
    "run_logged",
    "run_seed",
    "step",
]
