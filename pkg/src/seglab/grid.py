"""Rules of the 6x6 grid world: geometry, neighborhoods, movement, scoring.

Everything here is a pure function over immutable values. The batch simulator
and the live game service both build on this module, so the jump rule, the
Moore-8 neighborhood and the score-bin lookup exist exactly once.

Conventions: cells are (row, col) with (0, 0) top-left; the row-major cell
index is 6*row + col, matching the seat-card numbering used by the live game.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Optional

GRID_SIZE = 6
N_CELLS = GRID_SIZE * GRID_SIZE

Cell = tuple[int, int]
AgentId = int


class GridError(Exception):
    """Domain error: a grid-rules precondition was violated."""


class Color(Enum):
    YELLOW = "yellow"
    BLUE = "blue"

    def other(self) -> "Color":
        return Color.BLUE if self is Color.YELLOW else Color.YELLOW


class Direction(Enum):
    UP = "up"
    DOWN = "down"
    LEFT = "left"
    RIGHT = "right"

    @property
    def delta(self) -> Cell:
        return _DELTAS[self]


_DELTAS: dict[Direction, Cell] = {
    Direction.UP: (-1, 0),
    Direction.DOWN: (1, 0),
    Direction.LEFT: (0, -1),
    Direction.RIGHT: (0, 1),
}

# Canonical direction order, used anywhere a deterministic scan matters.
DIRECTIONS = (Direction.UP, Direction.DOWN, Direction.LEFT, Direction.RIGHT)


def cell_index(cell: Cell) -> int:
    """Row-major index of a cell (seat-card numbering minus one)."""
    return GRID_SIZE * cell[0] + cell[1]


def index_cell(index: int) -> Cell:
    return divmod(index, GRID_SIZE)


def on_board(cell: Cell) -> bool:
    r, c = cell
    return 0 <= r < GRID_SIZE and 0 <= c < GRID_SIZE


def moore_cells(cell: Cell) -> list[Cell]:
    """The up-to-8 surrounding cells, clipped at the hard board edges."""
    r, c = cell
    out = []
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            if dr == 0 and dc == 0:
                continue
            m = (r + dr, c + dc)
            if on_board(m):
                out.append(m)
    return out


@dataclass(frozen=True)
class GridState:
    """Authoritative board state: who stands where, and each agent's color.

    `cells` holds one entry per cell in row-major order, 0 for empty or the
    occupying agent id. Treat instances as values; mutation happens by
    constructing a new state (see :func:`apply_move`).
    """

    cells: tuple[int, ...]
    colors: Mapping[AgentId, Color]

    def __post_init__(self) -> None:
        if len(self.cells) != N_CELLS:
            raise GridError(f"expected {N_CELLS} cells, got {len(self.cells)}")
        seen: set[int] = set()
        for v in self.cells:
            if v < 0:
                raise GridError(f"negative cell entry {v}")
            if v:
                if v in seen:
                    raise GridError(f"agent {v} occupies two cells")
                seen.add(v)
        if seen != set(self.colors):
            raise GridError("colors must cover exactly the agents on the board")

    @classmethod
    def from_agents(
        cls,
        positions: Mapping[AgentId, Cell],
        colors: Mapping[AgentId, Color],
    ) -> "GridState":
        cells = [0] * N_CELLS
        for agent, cell in positions.items():
            if agent <= 0:
                raise GridError(f"agent ids are positive, got {agent}")
            if not on_board(cell):
                raise GridError(f"cell {cell} is off the board")
            i = cell_index(cell)
            if cells[i]:
                raise GridError(f"cell {cell} assigned twice")
            cells[i] = agent
        return cls(tuple(cells), dict(colors))

    @property
    def agents(self) -> tuple[AgentId, ...]:
        return tuple(sorted(self.colors))

    @property
    def n_agents(self) -> int:
        return len(self.colors)

    def agent_at(self, cell: Cell) -> Optional[AgentId]:
        if not on_board(cell):
            raise GridError(f"cell {cell} is off the board")
        v = self.cells[cell_index(cell)]
        return v or None

    def is_empty(self, cell: Cell) -> bool:
        return self.agent_at(cell) is None

    def cell_of(self, agent: AgentId) -> Cell:
        for i, v in enumerate(self.cells):
            if v == agent:
                return index_cell(i)
        raise GridError(f"agent {agent} is not on the board")

    def color_of(self, agent: AgentId) -> Color:
        try:
            return self.colors[agent]
        except KeyError:
            raise GridError(f"agent {agent} is not on the board") from None

    def positions(self) -> dict[AgentId, Cell]:
        return {v: index_cell(i) for i, v in enumerate(self.cells) if v}

    def rows(self) -> list[list[int]]:
        """Board as 6 rows of 6 entries (0 = empty), the wire `grid` shape."""
        return [
            list(self.cells[r * GRID_SIZE : (r + 1) * GRID_SIZE])
            for r in range(GRID_SIZE)
        ]


def neighbors(grid: GridState, cell: Cell) -> set[AgentId]:
    """Occupants of the Moore-8 neighborhood of `cell`.

    Never includes the occupant of `cell` itself; a cell on an edge or corner
    simply has fewer surrounding cells.
    """
    if not on_board(cell):
        raise GridError(f"cell {cell} is off the board")
    found = set()
    for m in moore_cells(cell):
        v = grid.cells[cell_index(m)]
        if v:
            found.add(v)
    return found


def percent_same(grid: GridState, agent: AgentId) -> Optional[float]:
    """Percentage of an agent's neighbors sharing its color; None if it has none."""
    color = grid.color_of(agent)
    nbrs = neighbors(grid, grid.cell_of(agent))
    if not nbrs:
        return None
    same = sum(1 for a in nbrs if grid.colors[a] is color)
    return 100.0 * same / len(nbrs)


def move_target(grid: GridState, frm: Cell, direction: Direction) -> Optional[Cell]:
    """Nearest empty cell strictly in `direction` from `frm`, or None.

    Occupied cells are jumped over; running off the board edge without finding
    an empty cell yields None (a valid "no move" outcome, not an error).
    """
    if not on_board(frm):
        raise GridError(f"cell {frm} is off the board")
    dr, dc = direction.delta
    r, c = frm
    while True:
        r, c = r + dr, c + dc
        if not on_board((r, c)):
            return None
        if not grid.cells[cell_index((r, c))]:
            return (r, c)


def apply_move(
    grid: GridState, agent: AgentId, direction: Direction
) -> tuple[GridState, bool]:
    """Jump `agent` in `direction`; returns (new state, moved flag).

    A blocked move returns the original state unchanged with flag False.
    """
    frm = grid.cell_of(agent)
    target = move_target(grid, frm, direction)
    if target is None:
        return grid, False
    return relocate(grid, agent, target), True


def relocate(grid: GridState, agent: AgentId, to: Cell) -> GridState:
    """Place `agent` on the empty cell `to`, vacating its current cell."""
    frm = grid.cell_of(agent)
    if to == frm:
        return grid
    ti = cell_index(to)
    if grid.cells[ti]:
        raise GridError(f"cell {to} is occupied")
    cells = list(grid.cells)
    cells[cell_index(frm)] = 0
    cells[ti] = agent
    return GridState(tuple(cells), grid.colors)


# --- Scoring -----------------------------------------------------------------

N_BINS = 11  # deciles 0-9%, 10-19%, ..., 90-99%, plus exact 100%
MIN_POINTS = 5
MAX_POINTS = 100

# Same is a 50% threshold rule (full points from the half-same bin upward);
# Diverse strictly rewards fewer same-color neighbors; SameAndDiverse climbs
# like Same below the peak at half-half and falls off at Diverse's slope
# above it, ending at roughly half the peak; SameOrDifferent pays full at
# either extreme. Heights use a uniform ~9.5-point ladder over [5, 100].
_PRESET_BINS = {
    "same": (5, 14, 24, 33, 43, 100, 100, 100, 100, 100, 100),
    "diverse": (100, 90, 81, 71, 62, 52, 43, 33, 24, 14, 5),
    "same-and-diverse": (5, 14, 24, 33, 43, 100, 90, 81, 71, 62, 52),
    "same-or-different": (100, 81, 62, 43, 24, 5, 24, 43, 62, 81, 100),
}

PRESET_NAMES = tuple(_PRESET_BINS)


def percent_bin(percent: float) -> int:
    """Decile bin of a percentage; exactly 100% gets its own bin (10)."""
    if not 0.0 <= percent <= 100.0:
        raise GridError(f"percentage {percent} outside [0, 100]")
    return int(percent // 10)


@dataclass(frozen=True)
class UtilityTable:
    """Score table: one point value per percent-same bin.

    All values lie in [5, 100] and the attainable maximum 100 appears in at
    least one bin. The four shipped presets additionally satisfy the shape
    constraints checked in :meth:`validate`.
    """

    name: str
    bins: tuple[int, ...]

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if len(self.bins) != N_BINS:
            raise GridError(f"table needs {N_BINS} bins, got {len(self.bins)}")
        for v in self.bins:
            if not isinstance(v, int) or not MIN_POINTS <= v <= MAX_POINTS:
                raise GridError(f"bin value {v!r} outside [{MIN_POINTS}, {MAX_POINTS}]")
        if MAX_POINTS not in self.bins:
            raise GridError("no bin reaches the attainable maximum of 100")
        shape_check = _SHAPE_CHECKS.get(self.name)
        if shape_check is not None and not shape_check(self.bins):
            raise GridError(f"bins do not match the '{self.name}' preset shape")

    @property
    def min_points(self) -> int:
        return min(self.bins)

    @property
    def max_points(self) -> int:
        return max(self.bins)

    def to_json(self) -> dict:
        return {"name": self.name, "bins": list(self.bins)}

    @classmethod
    def from_json(cls, doc: object) -> "UtilityTable":
        if not isinstance(doc, dict) or set(doc) != {"name", "bins"}:
            raise GridError("utility table document must be {name, bins}")
        name, bins = doc["name"], doc["bins"]
        if not isinstance(name, str) or not isinstance(bins, list):
            raise GridError("utility table: name must be a string, bins a list")
        return cls(name, tuple(bins))

    @classmethod
    def load(cls, path: str | Path) -> "UtilityTable":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


def _single_interior_peak(bins: Iterable[int]) -> bool:
    b = tuple(bins)
    mid = N_BINS // 2
    if b[mid] != max(b) or b.count(b[mid]) != 1:
        return False
    ascent = all(b[i] <= b[i + 1] for i in range(mid))
    descent = all(b[i] >= b[i + 1] for i in range(mid, N_BINS - 1))
    return ascent and descent


def _edge_peaks_center_valley(bins: Iterable[int]) -> bool:
    b = tuple(bins)
    mid = N_BINS // 2
    if max(b) not in (b[0], b[-1]) or b[0] != max(b) or b[-1] != max(b):
        return False
    if b[mid] != min(b):
        return False
    descent = all(b[i] >= b[i + 1] for i in range(mid))
    ascent = all(b[i] <= b[i + 1] for i in range(mid, N_BINS - 1))
    return descent and ascent


_SHAPE_CHECKS = {
    "same": lambda b: all(b[i] <= b[i + 1] for i in range(N_BINS - 1)),
    "diverse": lambda b: all(b[i] >= b[i + 1] for i in range(N_BINS - 1)),
    "same-and-diverse": _single_interior_peak,
    "same-or-different": _edge_peaks_center_valley,
}

PRESETS: dict[str, UtilityTable] = {
    name: UtilityTable(name, bins) for name, bins in _PRESET_BINS.items()
}


def preset(name: str) -> UtilityTable:
    try:
        return PRESETS[name]
    except KeyError:
        raise GridError(
            f"unknown preset {name!r}; expected one of {', '.join(PRESET_NAMES)}"
        ) from None


def score(table: UtilityTable, percent: Optional[float]) -> int:
    """Points for a percent-same value; an undefined percentage (no neighbors)
    scores the table minimum so isolation is never optimal."""
    if percent is None:
        return table.min_points
    return table.bins[percent_bin(percent)]


def agent_score(grid: GridState, table: UtilityTable, agent: AgentId) -> int:
    return score(table, percent_same(grid, agent))
