"""Append-only JSONL game logs and deterministic replay.

One file per game: a header line (session config, roster, scoring table,
seed), one move event per line, and an end line carrying the game duration
and end-of-game scores. Replaying the accepted events from the header's
seat placement reproduces every intermediate board state; the validator
re-checks each event against the jump rule and fails loudly, naming the line.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterator, Optional

from .grid import (
    Cell,
    Color,
    Direction,
    GridState,
    UtilityTable,
    agent_score,
    index_cell,
    move_target,
    relocate,
)


class LogFormatError(Exception):
    """A log file line could not be parsed or is schema-invalid."""

    def __init__(self, message: str, line_no: Optional[int] = None):
        self.line_no = line_no
        where = f" (line {line_no})" if line_no is not None else ""
        super().__init__(f"{message}{where}")


class ReplayError(Exception):
    """An event contradicts the movement rules during replay."""

    def __init__(self, message: str, event_index: int):
        self.event_index = event_index
        super().__init__(f"event {event_index}: {message}")


@dataclass(frozen=True)
class MoveEvent:
    """One logged game action: who pressed what, and what happened."""

    t_ms: int
    agent: int
    direction: Direction
    src: Cell
    dst: Cell  # equals src for rejected moves
    accepted: bool
    score_after: int

    def to_json(self) -> dict:
        return {
            "type": "move",
            "tMs": self.t_ms,
            "agent": self.agent,
            "dir": self.direction.value,
            "from": list(self.src),
            "to": list(self.dst),
            "accepted": self.accepted,
            "scoreAfter": self.score_after,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "MoveEvent":
        try:
            return cls(
                t_ms=int(doc["tMs"]),
                agent=int(doc["agent"]),
                direction=Direction(doc["dir"]),
                src=(int(doc["from"][0]), int(doc["from"][1])),
                dst=(int(doc["to"][0]), int(doc["to"][1])),
                accepted=bool(doc["accepted"]),
                score_after=int(doc["scoreAfter"]),
            )
        except (KeyError, ValueError, TypeError, IndexError) as exc:
            raise LogFormatError(f"bad move event: {exc}") from None


@dataclass(frozen=True)
class RosterEntry:
    agent: int
    color: Color
    seat: int  # row-major cell index of the initial placement
    name: Optional[str] = None

    def to_json(self) -> dict:
        return {
            "agent": self.agent,
            "color": self.color.value,
            "seat": self.seat,
            "name": self.name,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "RosterEntry":
        try:
            return cls(
                agent=int(doc["agent"]),
                color=Color(doc["color"]),
                seat=int(doc["seat"]),
                name=doc.get("name"),
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise LogFormatError(f"bad roster entry: {exc}") from None


@dataclass(frozen=True)
class GameLogHeader:
    session_id: str
    kind: str  # preset name, or "trial"
    game_index: Optional[int]  # 1..4 for counted games, None for trial
    table: UtilityTable
    roster: tuple[RosterEntry, ...]
    seed: int
    config: dict = field(default_factory=dict)

    def initial_grid(self) -> GridState:
        positions = {e.agent: index_cell(e.seat) for e in self.roster}
        colors = {e.agent: e.color for e in self.roster}
        return GridState.from_agents(positions, colors)

    def to_json(self) -> dict:
        return {
            "type": "header",
            "sessionId": self.session_id,
            "kind": self.kind,
            "gameIndex": self.game_index,
            "table": self.table.to_json(),
            "roster": [e.to_json() for e in self.roster],
            "seed": self.seed,
            "config": self.config,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "GameLogHeader":
        try:
            return cls(
                session_id=str(doc["sessionId"]),
                kind=str(doc["kind"]),
                game_index=None if doc["gameIndex"] is None else int(doc["gameIndex"]),
                table=UtilityTable.from_json(doc["table"]),
                roster=tuple(RosterEntry.from_json(e) for e in doc["roster"]),
                seed=int(doc["seed"]),
                config=dict(doc.get("config", {})),
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise LogFormatError(f"bad header: {exc}") from None


@dataclass(frozen=True)
class GameLog:
    header: GameLogHeader
    events: tuple[MoveEvent, ...]
    end_ms: int
    end_scores: dict[int, int]

    def initial_grid(self) -> GridState:
        return self.header.initial_grid()


class GameLogWriter:
    """Incremental writer used by the live service: header up front, events
    as they happen, end line on close. Every line is flushed immediately."""

    def __init__(self, path: str | Path, header: GameLogHeader):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh: Optional[IO[str]] = open(self.path, "w", encoding="utf-8")
        self._write(header.to_json())

    def append(self, event: MoveEvent) -> None:
        if self._fh is None:
            raise LogFormatError("writer already closed")
        self._write(event.to_json())

    def close(self, end_ms: int, end_scores: dict[int, int]) -> None:
        if self._fh is None:
            return
        self._write(
            {
                "type": "end",
                "tMs": end_ms,
                "scores": {str(a): s for a, s in end_scores.items()},
            }
        )
        self._fh.close()
        self._fh = None

    def abort(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def _write(self, doc: dict) -> None:
        assert self._fh is not None
        self._fh.write(json.dumps(doc, separators=(",", ":")) + "\n")
        self._fh.flush()


def write_log(path: str | Path, log: GameLog) -> None:
    writer = GameLogWriter(path, log.header)
    for ev in log.events:
        writer.append(ev)
    writer.close(log.end_ms, log.end_scores)


def read_log(path: str | Path) -> GameLog:
    """Parse one JSONL game log; raises LogFormatError naming the bad line."""
    header: Optional[GameLogHeader] = None
    events: list[MoveEvent] = []
    end_ms: Optional[int] = None
    end_scores: dict[int, int] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise LogFormatError(f"not valid JSON: {exc}", line_no) from None
            if not isinstance(doc, dict) or "type" not in doc:
                raise LogFormatError("record must be an object with a type", line_no)
            kind = doc["type"]
            try:
                if kind == "header":
                    if header is not None:
                        raise LogFormatError("duplicate header")
                    header = GameLogHeader.from_json(doc)
                elif kind == "move":
                    if header is None:
                        raise LogFormatError("move before header")
                    if end_ms is not None:
                        raise LogFormatError("move after end record")
                    events.append(MoveEvent.from_json(doc))
                elif kind == "end":
                    if header is None:
                        raise LogFormatError("end before header")
                    if end_ms is not None:
                        raise LogFormatError("duplicate end record")
                    end_ms = int(doc["tMs"])
                    end_scores = {int(a): int(s) for a, s in doc["scores"].items()}
                else:
                    raise LogFormatError(f"unknown record type {kind!r}")
            except LogFormatError as exc:
                if exc.line_no is None:
                    raise LogFormatError(str(exc), line_no) from None
                raise
            except (KeyError, ValueError, TypeError) as exc:
                raise LogFormatError(f"bad record: {exc}", line_no) from None
    if header is None:
        raise LogFormatError("log has no header line")
    if end_ms is None:
        raise LogFormatError("log has no end record")
    return GameLog(header, tuple(events), end_ms, end_scores)


def replay(log: GameLog, validate: bool = True) -> Iterator[tuple[MoveEvent, GridState]]:
    """Yield (event, state after event) for every event in order.

    With validate=True each event is checked against the movement rules:
    source cell, jump-rule target, blocked-move no-ops, the logged resulting
    score, and timestamp monotonicity within [0, end].
    """
    grid = log.initial_grid()
    table = log.header.table
    prev_ms = 0
    for i, ev in enumerate(log.events):
        if validate:
            if ev.t_ms < prev_ms:
                raise ReplayError(f"timestamp {ev.t_ms} decreases", i)
            if ev.t_ms > log.end_ms:
                raise ReplayError(f"timestamp {ev.t_ms} after game end", i)
            if ev.agent not in grid.colors:
                raise ReplayError(f"unknown agent {ev.agent}", i)
            actual_src = grid.cell_of(ev.agent)
            if ev.src != actual_src:
                raise ReplayError(
                    f"agent {ev.agent} is at {actual_src}, event says {ev.src}", i
                )
            target = move_target(grid, ev.src, ev.direction)
            if ev.accepted:
                if target is None:
                    raise ReplayError("accepted move has no jump target", i)
                if ev.dst != target:
                    raise ReplayError(
                        f"jump rule gives {target}, event says {ev.dst}", i
                    )
            else:
                if target is not None:
                    raise ReplayError("rejected move was actually possible", i)
                if ev.dst != ev.src:
                    raise ReplayError("rejected move must not relocate", i)
        if ev.accepted:
            grid = relocate(grid, ev.agent, ev.dst)
        if validate and agent_score(grid, table, ev.agent) != ev.score_after:
            raise ReplayError(
                f"logged scoreAfter {ev.score_after} != "
                f"{agent_score(grid, table, ev.agent)}",
                i,
            )
        prev_ms = ev.t_ms
        yield ev, grid


def replay_final(log: GameLog, validate: bool = True) -> tuple[GridState, dict[int, int]]:
    """Final board and per-agent end scores after a full replay."""
    grid = log.initial_grid()
    for _, grid in replay(log, validate=validate):
        pass
    scores = {a: agent_score(grid, log.header.table, a) for a in grid.agents}
    return grid, scores
