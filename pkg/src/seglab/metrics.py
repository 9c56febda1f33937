"""Outcome and behavioral measures over board snapshots and move logs.

Snapshot metrics (segregation, average score, average neighbor count) work on
any GridState; the log-based measures (time series, move latency by neighbor
configuration, score-transition matrix, classroom adjacency) reconstruct play
by replaying an event log. Everything here is a pure function of its inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .gamelog import GameLog, replay
from .grid import (
    Color,
    GridError,
    GridState,
    UtilityTable,
    agent_score,
    cell_index,
    index_cell,
    moore_cells,
    neighbors,
)
from .rng import Pcg32, split_seed


@dataclass(frozen=True)
class MetricsSnapshot:
    """Population means at one instant.

    segregation: mean percent-same over agents with at least one neighbor
    (NaN if no agent has any, possible only for n <= 9 on this board);
    avg_score includes zero-neighbor agents at the table minimum;
    avg_neighbors is the mean Moore-8 degree over all agents.
    """

    segregation: float
    avg_score: float
    avg_neighbors: float


def snapshot(grid: GridState, table: UtilityTable) -> MetricsSnapshot:
    if grid.n_agents == 0:
        raise GridError("snapshot of an empty board")
    seg_sum = 0.0
    seg_cnt = 0
    score_sum = 0
    nbr_sum = 0
    for agent in grid.agents:
        color = grid.colors[agent]
        same = tot = 0
        for m in moore_cells(grid.cell_of(agent)):
            v = grid.cells[cell_index(m)]
            if v:
                tot += 1
                if grid.colors[v] is color:
                    same += 1
        nbr_sum += tot
        if tot:
            seg_sum += 100.0 * same / tot
            seg_cnt += 1
            score_sum += table.bins[(10 * same) // tot]
        else:
            score_sum += table.min_points
    n = grid.n_agents
    segregation = seg_sum / seg_cnt if seg_cnt else math.nan
    return MetricsSnapshot(segregation, score_sum / n, nbr_sum / n)


def time_series(
    log: GameLog, table: Optional[UtilityTable] = None, sample_ms: int = 1000
) -> list[tuple[int, MetricsSnapshot]]:
    """Snapshot the replayed board every sample_ms over [0, end].

    The final instant is always included even when the duration is not a
    multiple of the stride. Change points between samples are not
    interpolated.
    """
    if sample_ms < 1:
        raise GridError("sample_ms must be >= 1")
    table = table or log.header.table
    times = list(range(0, log.end_ms + 1, sample_ms))
    if times[-1] != log.end_ms:
        times.append(log.end_ms)

    out: list[tuple[int, MetricsSnapshot]] = []
    grid = log.initial_grid()
    ti = 0
    for ev, after in replay(log):
        while ti < len(times) and times[ti] < ev.t_ms:
            out.append((times[ti], snapshot(grid, table)))
            ti += 1
        grid = after
    while ti < len(times):
        out.append((times[ti], snapshot(grid, table)))
        ti += 1
    return out


NeighborConfig = tuple[int, int]  # (same-color count, different-color count)


@dataclass(frozen=True)
class LatencyCell:
    total_seconds: float
    move_outs: int

    @property
    def mean_latency(self) -> Optional[float]:
        if self.move_outs == 0:
            return None
        return self.total_seconds / self.move_outs


@dataclass(frozen=True)
class LatencyTable:
    """Observed time and move-out counts per (same, different) configuration."""

    cells: dict[NeighborConfig, LatencyCell]

    def mean_latency(self, config: NeighborConfig) -> Optional[float]:
        cell = self.cells.get(config)
        return cell.mean_latency if cell else None

    @property
    def total_observed_seconds(self) -> float:
        return sum(c.total_seconds for c in self.cells.values())


def _config_of(grid: GridState, agent: int) -> NeighborConfig:
    color = grid.colors[agent]
    same = diff = 0
    for b in neighbors(grid, grid.cell_of(agent)):
        if grid.colors[b] is color:
            same += 1
        else:
            diff += 1
    return (same, diff)


def latency_table(log: GameLog) -> LatencyTable:
    """Average waiting time per neighbor configuration, from a replayed log.

    Time accrues to an agent's current configuration until it changes; a
    change caused by the agent's own accepted move also counts one move-out
    for the configuration it departed (even when the new configuration has
    the same counts). Changes inflicted by other agents only close the
    interval.
    """
    grid = log.initial_grid()
    agents = grid.agents
    config = {a: _config_of(grid, a) for a in agents}
    interval_start = {a: 0 for a in agents}
    total_ms: dict[NeighborConfig, int] = {}
    move_outs: dict[NeighborConfig, int] = {}

    def close_interval(agent: int, now_ms: int) -> None:
        c = config[agent]
        total_ms[c] = total_ms.get(c, 0) + (now_ms - interval_start[agent])
        interval_start[agent] = now_ms

    for ev, after in replay(log):
        if not ev.accepted:
            continue
        close_interval(ev.agent, ev.t_ms)
        c = config[ev.agent]
        move_outs[c] = move_outs.get(c, 0) + 1
        config[ev.agent] = _config_of(after, ev.agent)
        for a in agents:
            if a == ev.agent:
                continue
            new_c = _config_of(after, a)
            if new_c != config[a]:
                close_interval(a, ev.t_ms)
                config[a] = new_c
    for a in agents:
        close_interval(a, log.end_ms)

    configs = set(total_ms) | set(move_outs)
    return LatencyTable(
        {
            c: LatencyCell(total_ms.get(c, 0) / 1000.0, move_outs.get(c, 0))
            for c in configs
        }
    )


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-normalized frequencies of (move-out score -> move-in score)."""

    scores: tuple[int, ...]  # distinct table values, ascending; both axes
    counts: dict[tuple[int, int], int]

    def row(self, score_out: int) -> dict[int, float]:
        total = sum(
            n for (out, _), n in self.counts.items() if out == score_out
        )
        if total == 0:
            return {s: 0.0 for s in self.scores}
        return {
            s: self.counts.get((score_out, s), 0) / total for s in self.scores
        }

    def matrix(self) -> list[list[float]]:
        return [[self.row(out)[inn] for inn in self.scores] for out in self.scores]

    @property
    def n_moves(self) -> int:
        return sum(self.counts.values())


def transition_matrix(
    log: GameLog, table: Optional[UtilityTable] = None
) -> TransitionMatrix:
    """Each accepted move contributes one (score before, score after) pair."""
    table = table or log.header.table
    scores = tuple(sorted(set(table.bins)))
    counts: dict[tuple[int, int], int] = {}
    grid = log.initial_grid()
    for ev, after in replay(log):
        if ev.accepted:
            pair = (agent_score(grid, table, ev.agent), ev.score_after)
            counts[pair] = counts.get(pair, 0) + 1
        grid = after
    return TransitionMatrix(scores, counts)


def adjacency_score(final_grid: GridState, seating: Sequence[int]) -> float:
    """Percent of a player's classroom left/right neighbors who are also
    Moore-8 neighbors on the final board, averaged over players.

    `seating` lists agent ids in seat-raster order; classroom neighbors are
    the adjacent seats within the same 6-wide row, so players at row edges
    have one and everyone else two.
    """
    if set(seating) != set(final_grid.agents):
        raise GridError("seating roster does not match the agents on the board")
    per_player: list[float] = []
    row_width = 6
    for i, agent in enumerate(seating):
        mates = [
            seating[j]
            for j in (i - 1, i + 1)
            if 0 <= j < len(seating) and j // row_width == i // row_width
        ]
        if not mates:
            continue
        grid_nbrs = neighbors(final_grid, final_grid.cell_of(agent))
        hits = sum(1 for b in mates if b in grid_nbrs)
        per_player.append(100.0 * hits / len(mates))
    if not per_player:
        return math.nan
    return sum(per_player) / len(per_player)


def adjacency_baseline(n: int, trials: int, seed: int) -> float:
    """Expected adjacency score if final positions were uniformly random.

    Monte Carlo over `trials` seeded uniform placements of n agents; the
    seating stays the seat-raster order 1..n.
    """
    if not 2 <= n <= 36:
        raise GridError("n must be in 2..36")
    if trials < 1:
        raise GridError("trials must be >= 1")
    seating = list(range(1, n + 1))
    colors = {a: Color.YELLOW for a in seating}
    acc = 0.0
    for t in range(trials):
        rng = Pcg32(split_seed(seed, t), t)
        cells = rng.sample_cells(36, n)
        positions = {a: index_cell(cells[i]) for i, a in enumerate(seating)}
        grid = GridState.from_agents(positions, colors)
        acc += adjacency_score(grid, seating)
    return acc / trials
