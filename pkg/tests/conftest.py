"""Shared fixtures and oracle helpers for the test suite."""

from __future__ import annotations

import random

import pytest

from seglab.gamelog import GameLog, GameLogHeader, MoveEvent, RosterEntry
from seglab.grid import (
    Cell,
    Color,
    Direction,
    GridState,
    UtilityTable,
    cell_index,
    on_board,
)


@pytest.fixture
def py_rng() -> random.Random:
    return random.Random(0xC0FFEE)


def random_grid(rng: random.Random, n: int) -> GridState:
    """Uniform random board built with the stdlib generator (test-side only)."""
    cells = rng.sample(range(36), n)
    positions = {i + 1: divmod(c, 6) for i, c in enumerate(cells)}
    colors = {
        a: Color.YELLOW if rng.random() < 0.5 else Color.BLUE for a in positions
    }
    return GridState.from_agents(positions, colors)


# --- independent oracles (no shared code with the package internals) --------


def oracle_neighbors(grid: GridState, cell: Cell) -> set[int]:
    out = set()
    for agent, pos in grid.positions().items():
        if pos == cell:
            continue
        if abs(pos[0] - cell[0]) <= 1 and abs(pos[1] - cell[1]) <= 1:
            out.add(agent)
    return out


def oracle_jump(grid: GridState, frm: Cell, direction: Direction) -> Cell | None:
    deltas = {
        Direction.UP: (-1, 0),
        Direction.DOWN: (1, 0),
        Direction.LEFT: (0, -1),
        Direction.RIGHT: (0, 1),
    }
    dr, dc = deltas[direction]
    occupied = set(grid.positions().values())
    r, c = frm
    for k in range(1, 6):
        cand = (r + dr * k, c + dc * k)
        if not on_board(cand):
            return None
        if cand not in occupied:
            return cand
    return None


def oracle_eval(grid: GridState, agent: int, cell: Cell, table: UtilityTable) -> int:
    """Score of `agent` standing at `cell` with its origin vacated."""
    color = grid.colors[agent]
    same = tot = 0
    for other, pos in grid.positions().items():
        if other == agent or pos == cell:
            continue
        if abs(pos[0] - cell[0]) <= 1 and abs(pos[1] - cell[1]) <= 1:
            tot += 1
            if grid.colors[other] is color:
                same += 1
    if tot == 0:
        return min(table.bins)
    percent = 100.0 * same / tot
    return table.bins[min(int(percent // 10), 10)]


def oracle_candidates(grid: GridState, agent: int) -> list[Cell]:
    cur = grid.positions()[agent]
    out = [cur]
    for d in Direction:
        t = oracle_jump(grid, cur, d)
        if t is not None:
            out.append(t)
    return out


def oracle_argmax(grid: GridState, agent: int, table: UtilityTable) -> set[Cell]:
    """Brute-force argmax over the candidate set."""
    cands = oracle_candidates(grid, agent)
    scores = {c: oracle_eval(grid, agent, c, table) for c in cands}
    best = max(scores.values())
    return {c for c, s in scores.items() if s == best}


# --- synthetic log builders ---------------------------------------------------


def make_header(
    placements: dict[int, tuple[Cell, Color]],
    table: UtilityTable,
    kind: str | None = None,
    session_id: str = "test",
) -> GameLogHeader:
    roster = tuple(
        RosterEntry(agent, color, cell_index(cell))
        for agent, (cell, color) in sorted(placements.items())
    )
    return GameLogHeader(
        session_id=session_id,
        kind=kind or table.name,
        game_index=1,
        table=table,
        roster=roster,
        seed=0,
    )


def make_log(
    placements: dict[int, tuple[Cell, Color]],
    table: UtilityTable,
    events: list[MoveEvent],
    end_ms: int,
    end_scores: dict[int, int],
) -> GameLog:
    return GameLog(make_header(placements, table), tuple(events), end_ms, end_scores)
