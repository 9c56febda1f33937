"""Run and batch orchestration over the selected kernel.

A run's trajectory depends only on (params, run index): the per-run seed is
split off the master seed, so runs are independent and a batch's output does
not depend on execution order or worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Optional

from ..gamelog import GameLog, GameLogHeader, MoveEvent, RosterEntry
from ..grid import Color, GridState, agent_score, cell_index, relocate
from ..metrics import MetricsSnapshot, snapshot
from ..rng import MASK64, Pcg32, split_seed
from ._backend import COMPILED, kernel
from .params import (
    PLACEMENT_CODE,
    POLICY_CODE,
    BatchResult,
    BatchSummary,
    Policy,
    RunMetrics,
    RunResult,
    SimulationParams,
)
from .api import _place, best_response_choice, chosen_direction, random_relocation_choice


def run_seed(params: SimulationParams, run_index: int) -> int:
    return split_seed(params.seed & MASK64, run_index)


def run(params: SimulationParams, run_index: int = 0) -> RunResult:
    """Execute one run on the selected kernel."""
    seed = run_seed(params, run_index)
    cells, colors, trace = kernel.run_kernel(
        POLICY_CODE[params.policy],
        params.table.bins,
        params.n_agents,
        params.periods,
        params.record_every,
        seed,
        run_index,
        PLACEMENT_CODE[params.placement],
    )
    color_map = {
        a: Color.YELLOW if colors[a] == 0 else Color.BLUE
        for a in range(1, params.n_agents + 1)
    }
    grid = GridState(tuple(cells), color_map)
    snapshots = tuple(MetricsSnapshot(*row) for row in trace)
    return RunResult(grid, snapshots, seed, run_index)


def batch(params: SimulationParams, workers: Optional[int] = None) -> BatchResult:
    """Execute params.runs independent runs and summarize their finals.

    Runs are farmed out to threads when the compiled kernel is active (its
    hot loop releases the GIL); results merge by run index either way.
    """
    if workers is None:
        workers = min(os.cpu_count() or 1, params.runs) if COMPILED else 1
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda i: run(params, i), range(params.runs)))
    else:
        results = [run(params, i) for i in range(params.runs)]

    rows = tuple(
        RunMetrics(
            run=r.run_index,
            seed=r.seed,
            segregation=r.trace[-1].segregation,
            avg_score=r.trace[-1].avg_score,
            avg_neighbors=r.trace[-1].avg_neighbors,
        )
        for r in results
    )
    return BatchResult(params, rows, _summarize(rows))


def _summarize(rows: tuple[RunMetrics, ...]) -> BatchSummary:
    def stats(vals: list[float]) -> tuple[float, float]:
        n = len(vals)
        mean = sum(vals) / n
        if n < 2:
            return mean, 0.0
        var = sum((v - mean) ** 2 for v in vals) / (n - 1)
        return mean, math.sqrt(var)

    seg = stats([r.segregation for r in rows])
    sco = stats([r.avg_score for r in rows])
    nbr = stats([r.avg_neighbors for r in rows])
    return BatchSummary(seg[0], seg[1], sco[0], sco[1], nbr[0], nbr[1])


def run_logged(
    params: SimulationParams,
    run_index: int = 0,
    session_id: Optional[str] = None,
) -> tuple[RunResult, GameLog]:
    """One run stepped through the grid-core path, capturing a replayable log.

    Consumes the random stream exactly like the kernels, so the final board
    matches run(params, run_index); each relocation becomes a MoveEvent with
    the period index standing in for milliseconds.
    """
    seed = run_seed(params, run_index)
    rng = Pcg32(seed, run_index)
    grid = _place(params.n_agents, params.placement, rng)

    header = GameLogHeader(
        session_id=session_id or f"sim-{params.seed}-r{run_index}",
        kind=params.table.name,
        game_index=None,
        table=params.table,
        roster=tuple(
            RosterEntry(a, grid.colors[a], cell_index(grid.cell_of(a)))
            for a in grid.agents
        ),
        seed=seed,
        config={
            "policy": params.policy.value,
            "periods": params.periods,
            "placement": params.placement.value,
        },
    )

    events: list[MoveEvent] = []
    trace = [snapshot(grid, params.table)]
    agents = grid.agents
    for t in range(1, params.periods + 1):
        agent = agents[rng.randbelow(len(agents))]
        if params.policy is Policy.BEST_RESPONSE:
            choice = best_response_choice(grid, agent, params.table, rng)
        else:
            choice = random_relocation_choice(grid, agent, params.table, rng)
        cur = grid.cell_of(agent)
        if choice != cur:
            direction = chosen_direction(grid, agent, choice)
            assert direction is not None
            grid = relocate(grid, agent, choice)
            events.append(
                MoveEvent(
                    t_ms=t,
                    agent=agent,
                    direction=direction,
                    src=cur,
                    dst=choice,
                    accepted=True,
                    score_after=agent_score(grid, params.table, agent),
                )
            )
        if t % params.record_every == 0:
            trace.append(snapshot(grid, params.table))

    log = GameLog(
        header,
        tuple(events),
        end_ms=params.periods,
        end_scores={a: agent_score(grid, params.table, a) for a in agents},
    )
    return RunResult(grid, tuple(trace), seed, run_index), log
