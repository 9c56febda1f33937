"""Parameter and result types for batch simulation runs."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING

from ..grid import N_CELLS, GridError, GridState, UtilityTable

if TYPE_CHECKING:
    from ..metrics import MetricsSnapshot


class Policy(Enum):
    BEST_RESPONSE = "best-response"
    RANDOM_RELOCATION = "random-relocation"


class Placement(Enum):
    UNIFORM = "uniform"
    RASTER = "raster"


# Kernel encodings (shared with the compiled twin).
POLICY_CODE = {Policy.BEST_RESPONSE: 0, Policy.RANDOM_RELOCATION: 1}
PLACEMENT_CODE = {Placement.UNIFORM: 0, Placement.RASTER: 1}


@dataclass(frozen=True)
class SimulationParams:
    """Settings for one batch: behavioral policy, scoring table, scale, seed.

    Defaults mirror the full replication scale (1,000 runs of 100,000
    periods); the CLI defaults to desk scale and enables this via --full.
    """

    policy: Policy
    table: UtilityTable
    n_agents: int
    periods: int = 100_000
    runs: int = 1_000
    seed: int = 0
    record_every: int = 1_000
    placement: Placement = Placement.UNIFORM

    def __post_init__(self) -> None:
        if not 1 <= self.n_agents <= N_CELLS:
            raise GridError(f"n_agents must be in 1..{N_CELLS}, got {self.n_agents}")
        if self.periods < 0:
            raise GridError("periods must be >= 0")
        if self.runs < 1:
            raise GridError("runs must be >= 1")
        if self.record_every < 1:
            raise GridError("record_every must be >= 1")


@dataclass(frozen=True)
class RunResult:
    """Outcome of a single run: final board plus the sampled metric trace."""

    final_grid: GridState
    trace: tuple["MetricsSnapshot", ...]
    seed: int  # derived per-run seed actually fed to the generator
    run_index: int = 0


@dataclass(frozen=True)
class RunMetrics:
    run: int
    seed: int
    segregation: float
    avg_score: float
    avg_neighbors: float


@dataclass(frozen=True)
class BatchSummary:
    mean_segregation: float
    std_segregation: float
    mean_avg_score: float
    std_avg_score: float
    mean_avg_neighbors: float
    std_avg_neighbors: float


@dataclass(frozen=True)
class BatchResult:
    params: SimulationParams
    rows: tuple[RunMetrics, ...] = field(repr=False)
    summary: BatchSummary

    @property
    def mean_segregation(self) -> float:
        return self.summary.mean_segregation

    @property
    def mean_avg_score(self) -> float:
        return self.summary.mean_avg_score

    @property
    def mean_avg_neighbors(self) -> float:
        return self.summary.mean_avg_neighbors
