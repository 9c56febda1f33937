"""seglab: a segregation laboratory.

One set of 6x6 grid-game rules exercised three ways: batch agent-based
simulation under two behavioral policies, a real-time multiplayer game
service, and an analysis pipeline over event-sourced move logs.
"""

from .grid import (
    Color,
    Direction,
    GridError,
    GridState,
    UtilityTable,
    apply_move,
    agent_score,
    move_target,
    neighbors,
    percent_same,
    preset,
    PRESETS,
    score,
)

__version__ = "0.1.0"

__all__ = [
    "Color",
    "Direction",
    "GridError",
    "GridState",
    "PRESETS",
    "UtilityTable",
    "agent_score",
    "apply_move",
    "move_target",
    "neighbors",
    "percent_same",
    "preset",
    "score",
]
