"""Real-time multiplayer game service: session state machine + websocket server."""

from .server import GameServer
from .session import (
    GAME_KINDS,
    GAME_MS,
    GameRecord,
    Phase,
    PlayerInfo,
    Session,
    SessionConfig,
    SessionError,
)

__all__ = [
    "GAME_KINDS",
    "GAME_MS",
    "GameRecord",
    "GameServer",
    "Phase",
    "PlayerInfo",
    "Session",
    "SessionConfig",
    "SessionError",
]
