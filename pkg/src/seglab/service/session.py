"""Authoritative session state machine, free of I/O and wall clocks.

The server feeds in timestamps (milliseconds on its monotonic clock) and
persists/broadcasts what comes out; everything rule-shaped lives here so the
experiment protocol — lobby, optional trial run, four games in a seeded
random order, early stop or two-minute cap, cumulative end-of-game scoring —
is testable without sockets.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional

from ..gamelog import GameLogHeader, MoveEvent, RosterEntry
from ..grid import (
    Color,
    Direction,
    GridState,
    PRESETS,
    UtilityTable,
    agent_score,
    apply_move,
    cell_index,
    index_cell,
    move_target,
)
from ..rng import Pcg32, split_seed

GAME_KINDS = ("same", "diverse", "same-and-diverse", "same-or-different")
GAME_MS = 120_000
MAX_LOGIN = 36


class SessionError(Exception):
    """A client or admin request the session must refuse, with a reason."""


class Phase(str, Enum):
    LOBBY = "lobby"
    TRIAL = "trial"
    GAME = "game"
    INTERMISSION = "intermission"
    FINAL = "final"


@dataclass(frozen=True)
class SessionConfig:
    session_id: str = "main"
    seed: int = 0
    expected_players: int = 20
    min_players: int = 13
    game_ms: int = GAME_MS
    trial_kind: str = "same"
    tables: Mapping[str, UtilityTable] = field(default_factory=lambda: dict(PRESETS))

    def __post_init__(self) -> None:
        if not 13 <= self.expected_players <= 36:
            raise SessionError(
                f"expected players must be 13..36, got {self.expected_players}"
            )
        if self.min_players < 1:
            raise SessionError("min players must be >= 1")
        if self.game_ms < 1:
            raise SessionError("game length must be positive")
        missing = [k for k in (*GAME_KINDS, self.trial_kind) if k not in self.tables]
        if missing:
            raise SessionError(f"missing utility tables: {missing}")


@dataclass(frozen=True)
class PlayerInfo:
    agent_id: int
    color: Color
    seat: int  # row-major cell index, login id minus one
    name: Optional[str] = None


@dataclass
class CurrentGame:
    kind: str  # preset name or "trial"
    game_index: Optional[int]  # 1..4, None for the trial run
    table: UtilityTable
    started_ms: int  # absolute server ms
    events: list[MoveEvent] = field(default_factory=list)


@dataclass(frozen=True)
class GameRecord:
    header: GameLogHeader
    events: tuple[MoveEvent, ...]
    end_ms: int  # ms since game start
    end_scores: dict[int, int]
    counted: bool


class Session:
    """One classroom session: roster, phases, one shared authoritative board."""

    def __init__(self, config: SessionConfig):
        self.config = config
        rng = Pcg32(split_seed(config.seed, 0), 0)
        order = list(GAME_KINDS)
        rng.shuffle(order)
        self.game_order: tuple[str, ...] = tuple(order)
        self._color_phase = rng.coin()  # which color the first join receives
        self.phase = Phase.LOBBY
        self.roster: dict[int, PlayerInfo] = {}
        self._join_order: list[int] = []
        self.grid = GridState((0,) * 36, {})
        self.satisfied: set[int] = set()
        self.cumulative: dict[int, int] = {}
        self.games_played = 0
        self.trial_done = False
        self.current: Optional[CurrentGame] = None
        self.last_scores: dict[int, int] = {}

    # --- roster ---------------------------------------------------------

    def join(self, login_id: int, name: Optional[str] = None) -> PlayerInfo:
        if self.phase is not Phase.LOBBY:
            raise SessionError("session is already in play")
        if not 1 <= login_id <= MAX_LOGIN:
            raise SessionError(f"login id must be 1..{MAX_LOGIN}")
        if login_id in self.roster:
            raise SessionError(f"login id {login_id} is already taken")
        color_idx = (len(self._join_order) + self._color_phase) % 2
        info = PlayerInfo(
            agent_id=login_id,
            color=Color.YELLOW if color_idx == 0 else Color.BLUE,
            seat=login_id - 1,
            name=name,
        )
        self.roster[login_id] = info
        self._join_order.append(login_id)
        self.cumulative[login_id] = 0
        self.grid = self._raster_grid()
        return info

    def _raster_grid(self) -> GridState:
        positions = {p.agent_id: index_cell(p.seat) for p in self.roster.values()}
        colors = {p.agent_id: p.color for p in self.roster.values()}
        return GridState.from_agents(positions, colors)

    # --- game lifecycle --------------------------------------------------

    @property
    def in_game(self) -> bool:
        return self.phase in (Phase.TRIAL, Phase.GAME)

    def clock_ms(self, now_ms: int) -> int:
        if self.current is None:
            return 0
        return max(0, now_ms - self.current.started_ms)

    def game_over_due(self, now_ms: int) -> bool:
        return self.in_game and self.clock_ms(now_ms) >= self.config.game_ms

    def next_kind(self) -> Optional[str]:
        if self.games_played >= len(self.game_order):
            return None
        return self.game_order[self.games_played]

    def start_trial(self, now_ms: int) -> CurrentGame:
        if self.phase is not Phase.LOBBY:
            raise SessionError("trial run must come before the games")
        if self.trial_done:
            raise SessionError("trial run already played")
        self._check_roster()
        table = self.config.tables[self.config.trial_kind]
        self.current = CurrentGame("trial", None, table, now_ms)
        self.grid = self._raster_grid()
        self.satisfied.clear()
        self.phase = Phase.TRIAL
        return self.current

    def start_game(self, kind: Optional[str], now_ms: int) -> CurrentGame:
        if self.phase not in (Phase.LOBBY, Phase.INTERMISSION):
            raise SessionError(f"cannot start a game during {self.phase.value}")
        expected = self.next_kind()
        if expected is None:
            raise SessionError("all four games have been played")
        if kind is None:
            kind = expected
        if kind != expected:
            raise SessionError(
                f"games follow the session order; expected {expected!r}, got {kind!r}"
            )
        self._check_roster()
        self.current = CurrentGame(
            kind, self.games_played + 1, self.config.tables[kind], now_ms
        )
        self.grid = self._raster_grid()
        self.satisfied.clear()
        self.phase = Phase.GAME
        return self.current

    def _check_roster(self) -> None:
        if len(self.roster) < self.config.min_players:
            raise SessionError(
                f"need at least {self.config.min_players} players, "
                f"have {len(self.roster)}"
            )

    def log_header(self) -> GameLogHeader:
        """Header for the current game's JSONL log."""
        if self.current is None:
            raise SessionError("no game running")
        return GameLogHeader(
            session_id=self.config.session_id,
            kind=self.current.kind,
            game_index=self.current.game_index,
            table=self.current.table,
            roster=tuple(
                RosterEntry(p.agent_id, p.color, p.seat, p.name)
                for p in sorted(self.roster.values(), key=lambda p: p.agent_id)
            ),
            seed=self.config.seed,
            config={
                "expectedPlayers": self.config.expected_players,
                "minPlayers": self.config.min_players,
                "gameMs": self.config.game_ms,
                "gameOrder": list(self.game_order),
            },
        )

    # --- play ------------------------------------------------------------

    def handle_move(self, agent: int, direction: Direction, now_ms: int) -> MoveEvent:
        """Validate and apply one move request against the authoritative board.

        In-game requests append an accepted or rejected (blocked) event to
        the running game's log; requests outside a game come back rejected
        and are not logged. Any accepted move clears every satisfied flag.
        """
        if agent not in self.roster:
            raise SessionError(f"unknown agent {agent}")
        src = self.grid.cell_of(agent)
        if not self.in_game or self.current is None:
            return MoveEvent(0, agent, direction, src, src, False, 0)
        t = self.clock_ms(now_ms)
        new_grid, moved = apply_move(self.grid, agent, direction)
        dst = new_grid.cell_of(agent)
        self.grid = new_grid
        event = MoveEvent(
            t_ms=t,
            agent=agent,
            direction=direction,
            src=src,
            dst=dst,
            accepted=moved,
            score_after=agent_score(new_grid, self.current.table, agent),
        )
        self.current.events.append(event)
        if moved:
            self.satisfied.clear()
        return event

    def peek_target(self, agent: int, direction: Direction):
        return move_target(self.grid, self.grid.cell_of(agent), direction)

    def set_satisfied(self, agent: int, flag: bool, now_ms: int) -> bool:
        """Toggle a player's satisfied flag; True when the whole roster is."""
        if agent not in self.roster:
            raise SessionError(f"unknown agent {agent}")
        if not self.in_game:
            raise SessionError("no game is running")
        if flag:
            self.satisfied.add(agent)
        else:
            self.satisfied.discard(agent)
        return len(self.satisfied) == len(self.roster)

    def end_game(self, now_ms: int) -> GameRecord:
        """Close the running game: score it, bank the points, hand back the
        record (header + ordered events) for persistence."""
        if not self.in_game or self.current is None:
            raise SessionError("no game to end")
        end_ms = self.clock_ms(now_ms)
        table = self.current.table
        scores = {a: agent_score(self.grid, table, a) for a in sorted(self.roster)}
        counted = self.current.game_index is not None
        if counted:
            for a, s in scores.items():
                self.cumulative[a] += s
            self.games_played += 1
        else:
            self.trial_done = True
        record = GameRecord(
            header=self.log_header(),
            events=tuple(self.current.events),
            end_ms=end_ms,
            end_scores=scores,
            counted=counted,
        )
        self.last_scores = scores
        self.current = None
        self.satisfied.clear()
        self.phase = Phase.INTERMISSION
        return record

    # --- results ---------------------------------------------------------

    def show_final_scores(self) -> list[tuple[int, int]]:
        if self.games_played < len(self.game_order):
            raise SessionError("not all four games have been played")
        self.phase = Phase.FINAL
        return self.final_scores()

    def final_scores(self) -> list[tuple[int, int]]:
        """Totals over the four counted games, descending; ties keep join order."""
        if self.games_played < len(self.game_order):
            raise SessionError("not all four games have been played")
        order = {a: i for i, a in enumerate(self._join_order)}
        return sorted(
            self.cumulative.items(), key=lambda kv: (-kv[1], order[kv[0]])
        )

    # --- wire ------------------------------------------------------------

    def state_frame(self, now_ms: int) -> dict:
        """The full snapshot broadcast to every client."""
        if self.in_game and self.current is not None:
            table = self.current.table
            scores = {
                str(a): agent_score(self.grid, table, a) for a in sorted(self.roster)
            }
            clock = min(self.clock_ms(now_ms), self.config.game_ms)
        else:
            scores = {str(a): s for a, s in sorted(self.last_scores.items())}
            clock = 0
        frame = {
            "t": "state",
            "phase": self.phase.value,
            "grid": self.grid.rows(),
            "scores": scores,
            "clockMs": clock,
            "colors": {
                str(p.agent_id): p.color.value for p in self.roster.values()
            },
            "satisfied": sorted(self.satisfied),
            "kind": self.current.kind if self.current else None,
            "gameIndex": self.current.game_index if self.current else None,
            "gamesPlayed": self.games_played,
        }
        if self.phase is Phase.FINAL:
            frame["totals"] = {str(a): s for a, s in self.final_scores()}
        return frame

    def game_start_frame(self) -> dict:
        if self.current is None:
            raise SessionError("no game running")
        return {
            "t": "gameStart",
            "kind": self.current.kind,
            "table": list(self.current.table.bins),
        }

    @staticmethod
    def game_end_frame(record: GameRecord) -> dict:
        return {
            "t": "gameEnd",
            "scores": {str(a): s for a, s in record.end_scores.items()},
            "kind": record.header.kind,
            "counted": record.counted,
        }
