"""WebSocket front of the game service.

One process hosts any number of fully independent sessions, addressed by URL
path (/ws/<session-id>). All mutations of a session happen under its lock on
the event loop — a single logical writer — so the event log is a total order
and every broadcast state frame is a consistent snapshot. Frames are JSON
text; see the protocol summary in the README.
"""

from __future__ import annotations

import asyncio
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from websockets.asyncio.server import ServerConnection, serve
from websockets.exceptions import ConnectionClosed

from ..gamelog import GameLogWriter
from ..grid import Direction
from ..rng import split_seed
from .session import GameRecord, Phase, Session, SessionConfig, SessionError

logger = logging.getLogger(__name__)

ADMIN_COMMANDS = ("startTrial", "startGame", "endGame", "finalScores", "state")


@dataclass
class _Client:
    conn: ServerConnection
    queue: "asyncio.Queue[str]"
    sender: asyncio.Task
    agent_id: Optional[int] = None  # None for admins
    admin: bool = False


@dataclass
class _LiveSession:
    session: Session
    lock: asyncio.Lock = field(default_factory=asyncio.Lock)
    clients: list[_Client] = field(default_factory=list)
    writer: Optional[GameLogWriter] = None
    timer: Optional[asyncio.Task] = None
    ticker: Optional[asyncio.Task] = None


class GameServer:
    """Hosts sessions, serializes their mutations, persists their logs."""

    def __init__(
        self,
        host: str = "127.0.0.1",
        port: int = 8765,
        data_dir: str | Path = "data",
        seed: int = 0,
        expected_players: int = 20,
        min_players: int = 13,
        game_ms: int = 120_000,
        tick_ms: int = 250,
    ):
        self.host = host
        self.port = port
        self.data_dir = Path(data_dir)
        self.seed = seed
        self.expected_players = expected_players
        self.min_players = min_players
        self.game_ms = game_ms
        self.tick_ms = tick_ms
        self.sessions: dict[str, _LiveSession] = {}
        self._t0 = time.monotonic()
        self._server = None

    # --- lifecycle --------------------------------------------------------

    async def start(self) -> None:
        # short close timeout: a client that stopped reading must not be able
        # to stall shutdown for the default 10 s handshake wait
        self._server = await serve(
            self._handler, self.host, self.port, close_timeout=1.0
        )
        self.port = self._server.sockets[0].getsockname()[1]
        logger.info("listening on ws://%s:%d", self.host, self.port)

    async def stop(self) -> None:
        """Flush logs (ending any running game) and drop all connections."""
        for live in self.sessions.values():
            async with live.lock:
                if live.session.in_game:
                    self._finish_game(live, self.now_ms())
        if self._server is not None:
            self._server.close()  # also closes the connections, concurrently
            await self._server.wait_closed()
            self._server = None

    async def run_forever(self) -> None:
        await self.start()
        assert self._server is not None
        await self._server.wait_closed()

    def now_ms(self) -> int:
        return int((time.monotonic() - self._t0) * 1000)

    # --- sessions ---------------------------------------------------------

    def _get_session(self, session_id: str) -> _LiveSession:
        live = self.sessions.get(session_id)
        if live is None:
            config = SessionConfig(
                session_id=session_id,
                seed=split_seed(self.seed, _fold(session_id)),
                expected_players=self.expected_players,
                min_players=self.min_players,
                game_ms=self.game_ms,
            )
            live = _LiveSession(Session(config))
            self.sessions[session_id] = live
            logger.info("session %s created (order %s)", session_id,
                        ",".join(live.session.game_order))
        return live

    # --- connection handling ------------------------------------------------

    async def _handler(self, conn: ServerConnection) -> None:
        path = conn.request.path if conn.request else "/"
        session_id = _session_id_from_path(path)
        live = self._get_session(session_id)
        queue: asyncio.Queue[str] = asyncio.Queue()
        client = _Client(conn=conn, queue=queue, sender=asyncio.create_task(_drain(queue, conn)))
        live.clients.append(client)
        try:
            async for raw in conn:
                try:
                    msg = json.loads(raw)
                    if not isinstance(msg, dict) or "t" not in msg:
                        raise ValueError("frame must be an object with a 't' field")
                except (json.JSONDecodeError, ValueError, UnicodeDecodeError) as exc:
                    self._send(client, {"t": "error", "reason": f"bad frame: {exc}"})
                    continue
                await self._dispatch(live, client, msg)
        except ConnectionClosed:
            pass
        finally:
            client.sender.cancel()
            if client in live.clients:
                live.clients.remove(client)

    def _send(self, client: _Client, frame: dict) -> None:
        client.queue.put_nowait(json.dumps(frame, separators=(",", ":")))

    def _broadcast(self, live: _LiveSession, frame: dict) -> None:
        text = json.dumps(frame, separators=(",", ":"))
        for c in live.clients:
            c.queue.put_nowait(text)

    # --- message dispatch ---------------------------------------------------

    async def _dispatch(self, live: _LiveSession, client: _Client, msg: dict) -> None:
        t = msg.get("t")
        async with live.lock:
            now = self.now_ms()
            # a running game past its deadline ends before anything else applies
            if live.session.game_over_due(now):
                self._finish_game(live, now)
            try:
                if t == "join":
                    self._on_join(live, client, msg, now)
                elif t == "move":
                    self._on_move(live, client, msg, now)
                elif t == "satisfied":
                    self._on_satisfied(live, client, msg, now)
                elif t == "admin":
                    self._on_admin(live, client, msg, now)
                else:
                    self._send(client, {"t": "error", "reason": f"unknown frame type {t!r}"})
            except SessionError as exc:
                self._send(client, {"t": "error", "reason": str(exc)})

    def _on_join(self, live: _LiveSession, client: _Client, msg: dict, now: int) -> None:
        session = live.session
        if msg.get("admin"):
            client.admin = True
        else:
            login = msg.get("id")
            if not isinstance(login, int):
                raise SessionError("join needs an integer id")
            if login in session.roster:
                # reconnect: rebind if no live connection holds this id
                if any(c.agent_id == login for c in live.clients):
                    raise SessionError(f"login id {login} is already connected")
                client.agent_id = login
            else:
                info = session.join(login, msg.get("name"))
                client.agent_id = info.agent_id
        if session.in_game:
            self._send(client, session.game_start_frame())
        self._send(client, session.state_frame(now))
        if client.agent_id is not None and session.phase is Phase.LOBBY:
            # everyone sees the roster grow
            self._broadcast(live, session.state_frame(now))

    def _on_move(self, live: _LiveSession, client: _Client, msg: dict, now: int) -> None:
        session = live.session
        if client.agent_id is None:
            raise SessionError("join before moving")
        try:
            direction = Direction(msg.get("dir"))
        except ValueError:
            raise SessionError(f"bad direction {msg.get('dir')!r}") from None
        if not session.in_game:
            session.handle_move(client.agent_id, direction, now)  # rejected, unlogged
            raise SessionError("no game is running")
        event = session.handle_move(client.agent_id, direction, now)
        if live.writer is not None:
            live.writer.append(event)
        if event.accepted:
            self._broadcast(live, session.state_frame(now))
        else:
            self._send(client, session.state_frame(now))

    def _on_satisfied(self, live: _LiveSession, client: _Client, msg: dict, now: int) -> None:
        session = live.session
        if client.agent_id is None:
            raise SessionError("join before toggling satisfied")
        flag = msg.get("v")
        if not isinstance(flag, bool):
            raise SessionError("satisfied needs a boolean 'v'")
        everyone = session.set_satisfied(client.agent_id, flag, now)
        if everyone:
            self._finish_game(live, now)
        else:
            self._broadcast(live, session.state_frame(now))

    def _on_admin(self, live: _LiveSession, client: _Client, msg: dict, now: int) -> None:
        if not client.admin:
            raise SessionError("admin role required")
        session = live.session
        cmd = msg.get("cmd")
        if cmd == "startTrial":
            session.start_trial(now)
            self._open_game(live, now)
        elif cmd == "startGame":
            session.start_game(msg.get("kind"), now)
            self._open_game(live, now)
        elif cmd == "endGame":
            if not session.in_game:
                raise SessionError("no game to end")
            self._finish_game(live, now)
        elif cmd == "finalScores":
            session.show_final_scores()
            self._broadcast(live, session.state_frame(now))
        elif cmd == "state":
            self._send(client, session.state_frame(now))
        else:
            raise SessionError(f"unknown admin command {cmd!r}")

    # --- game start/end plumbing ---------------------------------------------

    def _open_game(self, live: _LiveSession, now: int) -> None:
        session = live.session
        assert session.current is not None
        index = session.current.game_index or 0
        base = self.data_dir / session.config.session_id
        path = base / f"{index:02d}_{session.current.kind}.jsonl"
        bump = 0
        while path.exists():  # a restart must never clobber earlier logs
            bump += 1
            path = base / f"{index:02d}_{session.current.kind}.{bump}.jsonl"
        live.writer = GameLogWriter(path, session.log_header())
        live.timer = asyncio.create_task(self._deadline(live, session.current))
        live.ticker = asyncio.create_task(self._tick(live))
        self._broadcast(live, session.game_start_frame())
        self._broadcast(live, session.state_frame(now))

    def _finish_game(self, live: _LiveSession, now: int) -> GameRecord:
        record = live.session.end_game(now)
        if live.writer is not None:
            live.writer.close(record.end_ms, record.end_scores)
            live.writer = None
        for task in (live.timer, live.ticker):
            if task is not None and task is not asyncio.current_task():
                task.cancel()
        live.timer = live.ticker = None
        self._broadcast(live, live.session.game_end_frame(record))
        self._broadcast(live, live.session.state_frame(now))
        return record

    async def _deadline(self, live: _LiveSession, game) -> None:
        delay = self.game_ms / 1000.0
        try:
            await asyncio.sleep(delay)
            async with live.lock:
                if live.session.in_game and live.session.current is game:
                    self._finish_game(live, self.now_ms())
        except asyncio.CancelledError:
            pass

    async def _tick(self, live: _LiveSession) -> None:
        """Periodic broadcast cycle: clock refresh and deadline backstop."""
        try:
            while True:
                await asyncio.sleep(self.tick_ms / 1000.0)
                async with live.lock:
                    if not live.session.in_game:
                        return
                    now = self.now_ms()
                    if live.session.game_over_due(now):
                        self._finish_game(live, now)
                        return
                    self._broadcast(live, live.session.state_frame(now))
        except asyncio.CancelledError:
            pass


def _session_id_from_path(path: str) -> str:
    path = path.split("?", 1)[0]
    parts = [p for p in path.split("/") if p]
    if len(parts) >= 2 and parts[0] == "ws":
        return parts[1]
    return "main"


def _fold(text: str) -> int:
    """Stable 64-bit fold of a session id for per-session seed derivation."""
    acc = 1469598103934665603  # FNV-1a
    for b in text.encode("utf-8"):
        acc = ((acc ^ b) * 1099511628211) & ((1 << 64) - 1)
    return acc


async def _drain(queue: "asyncio.Queue[str]", conn: ServerConnection) -> None:
    try:
        while True:
            await conn.send(await queue.get())
    except (ConnectionClosed, asyncio.CancelledError):
        pass
