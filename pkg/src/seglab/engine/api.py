"""Agent decision rules expressed over grid-core values.

This is the readable, contract-level form of the dynamics: candidate
enumeration, candidate evaluation with the vacated-origin rule, the myopic
best-response choice, and the random-relocation choice. The flat-array
kernels (`_pykernel`, `_ckernel`) implement the same semantics for speed;
`step` here consumes the random stream in exactly the kernel's order, so a
trajectory stepped through this module matches a kernel run bit for bit.
"""

from __future__ import annotations

from typing import Optional

from ..grid import (
    DIRECTIONS,
    Cell,
    Color,
    GridError,
    GridState,
    N_CELLS,
    UtilityTable,
    cell_index,
    index_cell,
    moore_cells,
    move_target,
    relocate,
    score,
)
from ..rng import Pcg32
from .params import Placement, Policy, SimulationParams


def initial_placement(
    n_agents: int,
    seed: int,
    placement: Placement = Placement.UNIFORM,
    stream: int = 0,
) -> GridState:
    """Seeded starting board: agents 1..n on distinct cells, colors near-even.

    Uniform placement scatters agents uniformly at random; raster placement
    fills cells 0..n-1 in seat order. Either way an odd population's majority
    color comes from one fair coin flip.
    """
    if not 1 <= n_agents <= N_CELLS:
        raise GridError(f"n_agents must be in 1..{N_CELLS}, got {n_agents}")
    rng = Pcg32(seed, stream)
    return _place(n_agents, placement, rng)


def _place(n_agents: int, placement: Placement, rng: Pcg32) -> GridState:
    """Placement step shared with run(); consumes the stream like the kernels."""
    positions: dict[int, Cell] = {}
    colors: dict[int, Color] = {}
    if placement is Placement.UNIFORM:
        cells = rng.sample_cells(N_CELLS, n_agents)
        for i, ci in enumerate(cells):
            positions[i + 1] = index_cell(ci)
        n_yellow = n_agents // 2
        if n_agents % 2:
            n_yellow += rng.coin()
        for agent in range(1, n_agents + 1):
            colors[agent] = Color.YELLOW if agent <= n_yellow else Color.BLUE
    else:
        phase = rng.coin()
        for agent in range(1, n_agents + 1):
            positions[agent] = index_cell(agent - 1)
            colors[agent] = Color.YELLOW if (agent - 1 + phase) % 2 == 0 else Color.BLUE
    return GridState.from_agents(positions, colors)


def candidate_set(grid: GridState, agent: int) -> list[Cell]:
    """The agent's current cell plus the jump target in each direction.

    Directions with no reachable empty cell are omitted; length is 1..5.
    Order is canonical (current, then up/down/left/right) so tie draws are
    deterministic given the stream.
    """
    cur = grid.cell_of(agent)
    out = [cur]
    for d in DIRECTIONS:
        t = move_target(grid, cur, d)
        if t is not None:
            out.append(t)
    return out


def evaluate_candidate(
    grid: GridState, agent: int, cell: Cell, table: UtilityTable
) -> int:
    """Points the agent would earn standing at `cell`, its origin vacated.

    The agent never counts as its own neighbor, so evaluating the current
    cell reproduces the agent's actual score.
    """
    if cell not in candidate_set(grid, agent):
        raise GridError(f"cell {cell} is not a candidate for agent {agent}")
    return _evaluate(grid, agent, cell, table)


def _evaluate(grid: GridState, agent: int, cell: Cell, table: UtilityTable) -> int:
    color = grid.color_of(agent)
    same = total = 0
    for m in moore_cells(cell):
        v = grid.cells[cell_index(m)]
        if v and v != agent:  # the origin cell counts as vacated
            total += 1
            if grid.colors[v] is color:
                same += 1
    if total == 0:
        return table.min_points
    return table.bins[(10 * same) // total]


def best_response_choice(
    grid: GridState, agent: int, table: UtilityTable, rng: Pcg32
) -> Cell:
    """Myopic best response: a maximizer over the candidate set.

    An agent already earning the table maximum is satisfied and stays put.
    Otherwise a strictly best candidate (possibly the current cell) is taken
    outright, and ties are broken uniformly at random over the whole argmax
    set, the current cell participating like any other member.
    """
    cur = grid.cell_of(agent)
    if _evaluate(grid, agent, cur, table) == table.max_points:
        return cur
    best = -1
    ties: list[Cell] = []
    for cell in candidate_set(grid, agent):
        s = _evaluate(grid, agent, cell, table)
        if s > best:
            best = s
            ties = [cell]
        elif s == best:
            ties.append(cell)
    return ties[rng.randbelow(len(ties))]


def random_relocation_choice(
    grid: GridState, agent: int, table: UtilityTable, rng: Pcg32
) -> Cell:
    """No satisficing below the maximum: stay only on a max-score cell,
    otherwise jump to one of the reachable targets chosen uniformly."""
    cur = grid.cell_of(agent)
    if _evaluate(grid, agent, cur, table) == table.max_points:
        return cur
    targets = []
    for d in DIRECTIONS:
        t = move_target(grid, cur, d)
        if t is not None:
            targets.append(t)
    if not targets:
        return cur
    return targets[rng.randbelow(len(targets))]


def step(grid: GridState, params: SimulationParams, rng: Pcg32) -> GridState:
    """One period: a uniformly drawn agent applies the policy's choice."""
    agents = grid.agents
    agent = agents[rng.randbelow(len(agents))]
    if params.policy is Policy.BEST_RESPONSE:
        choice = best_response_choice(grid, agent, params.table, rng)
    else:
        choice = random_relocation_choice(grid, agent, params.table, rng)
    return relocate(grid, agent, choice)


def chosen_direction(grid: GridState, agent: int, dest: Cell) -> Optional[object]:
    """Direction whose jump target from the agent's cell is `dest`, if any."""
    cur = grid.cell_of(agent)
    for d in DIRECTIONS:
        if move_target(grid, cur, d) == dest:
            return d
    return None
