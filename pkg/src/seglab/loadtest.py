"""Scripted bot clients driving a live service over the real wire protocol.

Spawns N player bots (random or greedy policy) plus one admin connection
that starts a game, then measures what the service promised: acceptance,
zero observable invariant violations, and broadcast latency percentiles.
The persisted JSONL log stays the ground truth for replay checks; this
harness reports what the clients could see from their side of the wire.
"""

from __future__ import annotations

import asyncio
import json
import math
import time
from dataclasses import dataclass, field
from typing import Optional

from websockets.asyncio.client import connect
from websockets.exceptions import ConnectionClosed

from .grid import Color, Direction, GridState, UtilityTable, move_target
from .engine.api import _evaluate
from .rng import Pcg32, split_seed

BOT_POLICIES = ("random", "greedy")


@dataclass
class LoadtestReport:
    players: int
    policy: str
    target_moves_per_sec: float
    duration_s: float
    moves_sent: int = 0
    moves_accepted: int = 0
    frames_received: int = 0
    invariant_violations: int = 0
    violations: list[str] = field(default_factory=list)
    latency_ms: list[float] = field(default_factory=list)
    game_ended: bool = False
    end_scores: dict[str, int] = field(default_factory=dict)
    final_grid: Optional[list[list[int]]] = None
    errors: list[str] = field(default_factory=list)

    @property
    def acceptance_rate(self) -> float:
        return self.moves_accepted / self.moves_sent if self.moves_sent else 0.0

    def latency_percentiles(self) -> dict[str, float]:
        if not self.latency_ms:
            return {}
        xs = sorted(self.latency_ms)

        def pct(p: float) -> float:
            i = min(len(xs) - 1, max(0, math.ceil(p / 100 * len(xs)) - 1))
            return xs[i]

        return {"p50": pct(50), "p95": pct(95), "p99": pct(99)}

    def to_json(self) -> dict:
        return {
            "players": self.players,
            "policy": self.policy,
            "targetMovesPerSec": self.target_moves_per_sec,
            "durationS": self.duration_s,
            "movesSent": self.moves_sent,
            "movesAccepted": self.moves_accepted,
            "acceptanceRate": round(self.acceptance_rate, 4),
            "framesReceived": self.frames_received,
            "invariantViolations": self.invariant_violations,
            "violations": self.violations[:20],
            "latencyMs": self.latency_percentiles(),
            "gameEnded": self.game_ended,
            "errors": self.errors[:20],
        }


def frame_grid(frame: dict) -> GridState:
    """Rebuild a GridState from a server state frame."""
    positions: dict[int, tuple[int, int]] = {}
    for r, row in enumerate(frame["grid"]):
        for c, v in enumerate(row):
            if v:
                positions[v] = (r, c)
    colors = {int(a): Color(v) for a, v in frame.get("colors", {}).items()}
    return GridState.from_agents(positions, {a: colors[a] for a in positions})


class _Bot:
    def __init__(self, url: str, agent_id: int, policy: str, rate_hz: float,
                 seed: int, report: LoadtestReport):
        self.url = url
        self.agent_id = agent_id
        self.policy = policy
        self.rate_hz = rate_hz
        self.rng = Pcg32(seed, agent_id)
        self.report = report
        self.state: Optional[dict] = None
        self.table: Optional[UtilityTable] = None
        self.in_game = asyncio.Event()
        self.game_over = asyncio.Event()
        self.pending_since: Optional[float] = None
        self.pending_src: Optional[tuple[int, int]] = None
        self.last_clock = -1

    async def run(self) -> None:
        async with connect(self.url) as conn:
            await conn.send(json.dumps({"t": "join", "id": self.agent_id}))
            recv = asyncio.create_task(self._receive(conn))
            act = asyncio.create_task(self._act(conn))
            await self.game_over.wait()
            act.cancel()
            recv.cancel()

    async def _receive(self, conn) -> None:
        try:
            async for raw in conn:
                frame = json.loads(raw)
                self.report.frames_received += 1
                t = frame.get("t")
                if t == "gameStart":
                    self.table = UtilityTable("live", tuple(frame["table"]))
                    self.last_clock = -1
                    self.in_game.set()
                elif t == "state":
                    self._check_frame(frame)
                    self.state = frame
                    self._note_position(frame)
                elif t == "gameEnd":
                    self.report.game_ended = True
                    self.report.end_scores = dict(frame.get("scores", {}))
                    self.game_over.set()
                elif t == "error":
                    self.report.errors.append(frame.get("reason", "?"))
        except (ConnectionClosed, asyncio.CancelledError):
            self.game_over.set()

    def _check_frame(self, frame: dict) -> None:
        seen: set[int] = set()
        for row in frame["grid"]:
            for v in row:
                if v:
                    if v in seen:
                        self._violate(f"agent {v} on two cells")
                    seen.add(v)
        colors = frame.get("colors", {})
        for a in seen:
            if str(a) not in colors:
                self._violate(f"agent {a} has no color")
        if frame.get("phase") in ("game", "trial"):
            clock = frame.get("clockMs", 0)
            if clock < self.last_clock:
                self._violate(f"clock went backwards {self.last_clock}->{clock}")
            self.last_clock = clock

    def _violate(self, reason: str) -> None:
        self.report.invariant_violations += 1
        self.report.violations.append(reason)

    def _note_position(self, frame: dict) -> None:
        if self.pending_since is None:
            return
        pos = _find(frame["grid"], self.agent_id)
        if pos is not None and pos != self.pending_src:
            self.report.moves_accepted += 1
            self.report.latency_ms.append((time.monotonic() - self.pending_since) * 1000)
            self.pending_since = None
            self.pending_src = None

    async def _act(self, conn) -> None:
        await self.in_game.wait()
        try:
            while not self.game_over.is_set():
                await asyncio.sleep(self._interval())
                move = self._decide()
                if move is None:
                    continue
                direction, src = move
                # one pending move at a time keeps acceptance attribution sane
                if self.pending_since is not None:
                    if time.monotonic() - self.pending_since < 1.0:
                        continue
                    self.pending_since = None  # give up on (likely rejected) move
                    self.pending_src = None
                self.pending_since = time.monotonic()
                self.pending_src = src
                self.report.moves_sent += 1
                await conn.send(json.dumps({"t": "move", "dir": direction.value}))
        except (ConnectionClosed, asyncio.CancelledError):
            pass

    def _interval(self) -> float:
        # exponential inter-move time at the bot's share of the aggregate rate
        u = (self.rng.next_u32() + 1) / 4294967296.0
        return -math.log(u) / self.rate_hz

    def _decide(self) -> Optional[tuple[Direction, tuple[int, int]]]:
        if self.state is None or self.state.get("phase") not in ("game", "trial"):
            return None
        try:
            grid = frame_grid(self.state)
            src = grid.cell_of(self.agent_id)
        except Exception:
            return None
        dirs = list(Direction)
        if self.policy == "random":
            return dirs[self.rng.randbelow(4)], src
        # greedy: myopic best response from the last snapshot
        assert self.table is not None
        best_dir: Optional[Direction] = None
        best = _evaluate(grid, self.agent_id, src, self.table)
        for d in dirs:
            target = move_target(grid, src, d)
            if target is None:
                continue
            s = _evaluate(grid, self.agent_id, target, self.table)
            if s > best:
                best = s
                best_dir = d
        if best_dir is None:
            return None
        return best_dir, src


def _find(rows: list[list[int]], agent: int) -> Optional[tuple[int, int]]:
    for r, row in enumerate(rows):
        for c, v in enumerate(row):
            if v == agent:
                return (r, c)
    return None


async def _admin(url: str, players: int, done: asyncio.Event, timeout_s: float) -> None:
    async def drive() -> None:
        async with connect(url) as conn:
            await conn.send(json.dumps({"t": "join", "admin": True}))
            # wait for the roster to fill before starting the game
            while True:
                await conn.send(json.dumps({"t": "admin", "cmd": "state"}))
                frame = json.loads(await conn.recv())
                if frame.get("t") == "state":
                    joined = sum(1 for row in frame["grid"] for v in row if v)
                    if joined >= players:
                        break
                await asyncio.sleep(0.1)
            await conn.send(json.dumps({"t": "admin", "cmd": "startGame"}))
            async for raw in conn:
                frame = json.loads(raw)
                if frame.get("t") == "gameEnd":
                    done.set()
                    return
                if frame.get("t") == "error":
                    raise RuntimeError(f"admin error: {frame.get('reason')}")

    try:
        await asyncio.wait_for(drive(), timeout_s)
    except asyncio.TimeoutError:
        raise RuntimeError("game did not end within the timeout") from None


async def run_loadtest(
    url: str,
    players: int = 20,
    policy: str = "random",
    moves_per_sec: float = 4.0,
    duration_s: float = 120.0,
    seed: int = 0,
) -> LoadtestReport:
    """Join `players` bots, start one game via an admin, play it out."""
    if policy not in BOT_POLICIES:
        raise ValueError(f"policy must be one of {BOT_POLICIES}")
    report = LoadtestReport(players, policy, moves_per_sec, duration_s)
    rate = moves_per_sec / players if players else 0.0
    bots = [
        _Bot(url, i + 1, policy, rate, split_seed(seed, i + 1), report)
        for i in range(players)
    ]
    done = asyncio.Event()
    bot_tasks = [asyncio.create_task(b.run()) for b in bots]
    admin_task = asyncio.create_task(_admin(url, players, done, duration_s + 15.0))
    try:
        await admin_task
    finally:
        for t in bot_tasks:
            t.cancel()
        await asyncio.gather(*bot_tasks, return_exceptions=True)
    report.game_ended = report.game_ended or done.is_set()
    # last bot state frame doubles as the final-board sample
    for b in bots:
        if b.state is not None:
            report.final_grid = b.state["grid"]
            break
    return report
