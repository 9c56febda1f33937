"""Log schema round trips, integrity failures, and replay validation."""

import json

import pytest

from seglab.engine import Policy, SimulationParams, run_logged
from seglab.gamelog import (
    GameLog,
    GameLogWriter,
    LogFormatError,
    MoveEvent,
    ReplayError,
    read_log,
    replay,
    replay_final,
    write_log,
)
from seglab.grid import Color, Direction, preset

from conftest import make_header, make_log

Y, B = Color.YELLOW, Color.BLUE
SAME = preset("same")


def small_log() -> GameLog:
    placements = {1: ((0, 0), Y), 2: ((0, 1), Y), 3: ((1, 0), B)}
    events = [
        MoveEvent(4000, 1, Direction.RIGHT, (0, 0), (0, 2), True, 100),
        MoveEvent(6000, 2, Direction.RIGHT, (0, 1), (0, 3), True, 100),
    ]
    return make_log(placements, SAME, events, 12_000, {1: 100, 2: 100, 3: 5})


class TestRoundTrip:
    def test_write_read_identity(self, tmp_path):
        log = small_log()
        path = tmp_path / "game.jsonl"
        write_log(path, log)
        back = read_log(path)
        assert back.header == log.header
        assert back.events == log.events
        assert back.end_ms == log.end_ms
        assert back.end_scores == log.end_scores

    def test_simulated_log_round_trips(self, tmp_path):
        p = SimulationParams(Policy.BEST_RESPONSE, SAME, 13, periods=500, runs=1,
                             seed=3, record_every=500)
        _, log = run_logged(p, 0)
        path = tmp_path / "sim.jsonl"
        write_log(path, log)
        assert read_log(path).events == log.events

    def test_writer_flushes_incrementally(self, tmp_path):
        log = small_log()
        path = tmp_path / "inc.jsonl"
        writer = GameLogWriter(path, log.header)
        writer.append(log.events[0])
        # file already contains header + first event before close
        lines = path.read_text().strip().splitlines()
        assert len(lines) == 2
        writer.close(log.end_ms, log.end_scores)
        assert len(path.read_text().strip().splitlines()) == 3  # + end line


class TestFormatErrors:
    def test_corrupt_json_names_line(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        write_log(path, small_log())
        lines = path.read_text().splitlines()
        lines[2] = '{"type":"move", not json'
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(LogFormatError) as err:
            read_log(path)
        assert err.value.line_no == 3

    def test_missing_header(self, tmp_path):
        path = tmp_path / "nohdr.jsonl"
        path.write_text('{"type":"end","tMs":1,"scores":{}}\n')
        with pytest.raises(LogFormatError):
            read_log(path)

    def test_missing_end(self, tmp_path):
        path = tmp_path / "noend.jsonl"
        write_log(path, small_log())
        lines = path.read_text().splitlines()
        path.write_text("\n".join(lines[:-1]) + "\n")
        with pytest.raises(LogFormatError):
            read_log(path)

    def test_move_after_end_rejected(self, tmp_path):
        path = tmp_path / "tail.jsonl"
        write_log(path, small_log())
        move_line = json.dumps(small_log().events[0].to_json())
        with open(path, "a") as fh:
            fh.write(move_line + "\n")
        with pytest.raises(LogFormatError):
            read_log(path)

    def test_bad_field_types_name_line(self, tmp_path):
        path = tmp_path / "types.jsonl"
        write_log(path, small_log())
        lines = path.read_text().splitlines()
        doc = json.loads(lines[1])
        doc["dir"] = "sideways"
        lines[1] = json.dumps(doc)
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(LogFormatError) as err:
            read_log(path)
        assert err.value.line_no == 2


class TestReplayValidation:
    def test_valid_log_replays(self):
        grid, scores = replay_final(small_log())
        assert scores == {1: 100, 2: 100, 3: 5}
        assert grid.cell_of(1) == (0, 2)
        assert grid.cell_of(2) == (0, 3)

    def test_wrong_jump_target(self):
        log = small_log()
        bad = MoveEvent(4000, 1, Direction.RIGHT, (0, 0), (0, 3), True, 100)
        broken = GameLog(log.header, (bad,) + log.events[1:], log.end_ms,
                         log.end_scores)
        with pytest.raises(ReplayError):
            replay_final(broken)

    def test_wrong_source_cell(self):
        log = small_log()
        bad = MoveEvent(4000, 1, Direction.RIGHT, (2, 2), (0, 2), True, 100)
        with pytest.raises(ReplayError):
            replay_final(GameLog(log.header, (bad,), log.end_ms, log.end_scores))

    def test_rejected_move_that_was_possible(self):
        log = small_log()
        bad = MoveEvent(4000, 1, Direction.RIGHT, (0, 0), (0, 0), False, 5)
        with pytest.raises(ReplayError):
            replay_final(GameLog(log.header, (bad,), log.end_ms, log.end_scores))

    def test_decreasing_timestamps(self):
        log = small_log()
        flipped = MoveEvent(3000, 2, Direction.RIGHT, (0, 1), (0, 3), True, 100)
        broken = GameLog(log.header, (log.events[0], flipped), log.end_ms,
                         log.end_scores)
        with pytest.raises(ReplayError):
            replay_final(broken)

    def test_event_after_game_end(self):
        log = small_log()
        late = MoveEvent(13_000, 2, Direction.RIGHT, (0, 1), (0, 3), True, 100)
        broken = GameLog(log.header, (log.events[0], late), log.end_ms,
                         log.end_scores)
        with pytest.raises(ReplayError):
            replay_final(broken)

    def test_wrong_score_after(self):
        log = small_log()
        bad = MoveEvent(4000, 1, Direction.RIGHT, (0, 0), (0, 2), True, 42)
        with pytest.raises(ReplayError):
            replay_final(GameLog(log.header, (bad,), log.end_ms, log.end_scores))

    def test_blocked_move_replays_as_noop(self):
        placements = {1: ((0, 5), Y), 2: ((0, 0), Y)}
        events = [MoveEvent(100, 1, Direction.RIGHT, (0, 5), (0, 5), False, 5)]
        log = make_log(placements, SAME, events, 1000, {1: 5, 2: 5})
        grid, _ = replay_final(log)
        assert grid.cell_of(1) == (0, 5)

    def test_replay_yields_intermediate_states(self):
        states = [g for _, g in replay(small_log())]
        assert states[0].cell_of(1) == (0, 2)
        assert states[0].cell_of(2) == (0, 1)
        assert states[1].cell_of(2) == (0, 3)

    def test_initial_grid_from_roster_seats(self):
        header = make_header({1: ((2, 3), Y), 2: ((4, 0), B)}, SAME)
        g = header.initial_grid()
        assert g.cell_of(1) == (2, 3)
        assert g.cell_of(2) == (4, 0)
        assert g.colors[2] is B
