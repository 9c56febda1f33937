"""Session state machine: roster, randomized order, play, scoring, lifecycle."""

from collections import Counter

import pytest
from scipy import stats

from seglab.gamelog import GameLog, replay_final
from seglab.grid import Color, Direction, agent_score, preset
from seglab.service import GAME_KINDS, Phase, Session, SessionConfig, SessionError

Y, B = Color.YELLOW, Color.BLUE


def make_session(seed=0, players=0, min_players=13, game_ms=120_000, **kw):
    cfg = SessionConfig(session_id="s", seed=seed, min_players=min_players,
                        game_ms=game_ms, **kw)
    s = Session(cfg)
    for login in range(1, players + 1):
        s.join(login)
    return s


class TestConfig:
    def test_roster_bounds_rejected(self):
        with pytest.raises(SessionError):
            SessionConfig(expected_players=5)
        with pytest.raises(SessionError):
            SessionConfig(expected_players=37)

    def test_valid_range_accepted(self):
        SessionConfig(expected_players=13)
        SessionConfig(expected_players=36)


class TestGameOrder:
    def test_fixed_seed_fixed_order(self):
        assert make_session(seed=7).game_order == make_session(seed=7).game_order

    def test_order_is_a_permutation(self):
        for seed in range(50):
            assert sorted(make_session(seed=seed).game_order) == sorted(GAME_KINDS)

    def test_uniform_over_24_permutations(self):
        counts = Counter(make_session(seed=s).game_order for s in range(10_000))
        assert len(counts) == 24
        chi = stats.chisquare(list(counts.values()))
        assert chi.pvalue > 0.01


class TestJoin:
    def test_seat_raster_mapping(self):
        s = make_session()
        assert s.join(1).seat == 0
        assert s.grid.cell_of(1) == (0, 0)
        assert s.join(8).seat == 7
        assert s.grid.cell_of(8) == (1, 1)

    def test_twenty_joins_split_evenly(self):
        s = make_session(players=20)
        counts = Counter(p.color for p in s.roster.values())
        assert counts[Y] == 10 and counts[B] == 10

    def test_odd_roster_differs_by_one(self):
        s = make_session(players=21)
        counts = Counter(p.color for p in s.roster.values())
        assert sorted(counts.values()) == [10, 11]

    def test_majority_color_is_seeded_coin(self):
        majorities = Counter()
        for seed in range(400):
            s = make_session(seed=seed, players=21)
            counts = Counter(p.color for p in s.roster.values())
            majorities[max(counts, key=counts.get)] += 1
        assert abs(majorities[Y] / 400 - 0.5) < 0.1

    def test_duplicate_login_rejected(self):
        s = make_session(players=3)
        with pytest.raises(SessionError):
            s.join(2)

    def test_login_out_of_range_rejected(self):
        s = make_session()
        for bad in (0, 37, -1):
            with pytest.raises(SessionError):
                s.join(bad)

    def test_join_after_start_rejected(self):
        s = make_session(players=13)
        s.start_game(None, 0)
        with pytest.raises(SessionError):
            s.join(20)


class TestLifecycle:
    def test_trial_then_games_in_order(self):
        s = make_session(players=13)
        s.start_trial(0)
        assert s.phase is Phase.TRIAL
        s.end_game(10_000)
        for i, kind in enumerate(s.game_order):
            s.start_game(kind, 0)
            assert s.phase is Phase.GAME
            assert s.current.game_index == i + 1
            s.end_game(120_000)
        assert s.games_played == 4

    def test_out_of_order_start_rejected(self):
        s = make_session(players=13)
        wrong = s.game_order[1]
        with pytest.raises(SessionError):
            s.start_game(wrong, 0)

    def test_trial_after_first_game_rejected(self):
        s = make_session(players=13)
        s.start_game(None, 0)
        s.end_game(1000)
        with pytest.raises(SessionError):
            s.start_trial(2000)

    def test_start_requires_min_players(self):
        s = make_session(players=5)
        with pytest.raises(SessionError):
            s.start_game(None, 0)

    def test_fifth_game_rejected(self):
        s = make_session(players=13)
        for kind in s.game_order:
            s.start_game(kind, 0)
            s.end_game(1000)
        with pytest.raises(SessionError):
            s.start_game(None, 0)

    def test_clock_cap(self):
        s = make_session(players=13, game_ms=120_000)
        s.start_game(None, 1000)
        assert not s.game_over_due(120_999)
        assert s.game_over_due(121_000)
        assert s.state_frame(500_000)["clockMs"] == 120_000


class TestPlay:
    def test_accepted_move_logged_and_clears_satisfied(self):
        s = make_session(players=13)
        s.start_game(None, 0)
        assert not s.set_satisfied(1, True, 100)
        assert s.satisfied == {1}
        ev = s.handle_move(13, Direction.DOWN, 200)
        assert ev.accepted
        assert s.satisfied == set()
        assert s.current.events == [ev]

    def test_blocked_move_logged_as_rejected(self):
        s = make_session(players=13)
        s.start_game(None, 0)
        ev = s.handle_move(1, Direction.UP, 100)  # seat (0,0): no up
        assert not ev.accepted
        assert ev.src == ev.dst == (0, 0)
        assert s.current.events == [ev]

    def test_move_outside_game_rejected_and_unlogged(self):
        s = make_session(players=13)
        ev = s.handle_move(1, Direction.DOWN, 0)
        assert not ev.accepted
        s.start_game(None, 0)
        assert s.current.events == []

    def test_unknown_agent_is_protocol_error(self):
        s = make_session(players=13)
        s.start_game(None, 0)
        with pytest.raises(SessionError):
            s.handle_move(30, Direction.DOWN, 0)

    def test_jump_rule_applies(self):
        s = make_session(players=13)
        s.start_game(None, 0)
        # seat row 0 is full (logins 1..6): agent 1 jumps over everyone? no -
        # row full means no empty cell: the move is rejected
        ev = s.handle_move(1, Direction.RIGHT, 100)
        assert not ev.accepted
        # down the column: (1,0) holds login 7, (2,0) holds 13 -> first empty (3,0)
        ev = s.handle_move(1, Direction.DOWN, 120)
        assert ev.accepted and ev.dst == (3, 0)

    def test_session_log_replays(self):
        s = make_session(players=14)
        s.start_game(None, 0)
        moves = [(1, Direction.DOWN), (8, Direction.RIGHT), (2, Direction.DOWN),
                 (1, Direction.UP), (14, Direction.LEFT)]
        t = 0
        for agent, d in moves:
            t += 500
            s.handle_move(agent, d, t)
        record = s.end_game(30_000)
        log = GameLog(record.header, record.events, record.end_ms,
                      record.end_scores)
        grid, scores = replay_final(log)
        assert grid == s.grid
        assert scores == record.end_scores


class TestScoring:
    def test_cumulative_only_counts_games(self):
        s = make_session(players=13)
        s.start_trial(0)
        trial = s.end_game(5000)
        assert not trial.counted
        assert all(v == 0 for v in s.cumulative.values())
        for kind in s.game_order:
            s.start_game(kind, 0)
            s.end_game(1000)
        totals = dict(s.final_scores())
        for agent in s.roster:
            assert totals[agent] > 0

    def test_final_scores_sum_four_games(self):
        s = make_session(players=13)
        per_game = []
        for kind in s.game_order:
            s.start_game(kind, 0)
            per_game.append(s.end_game(1000).end_scores)
        for agent, total in s.final_scores():
            assert total == sum(g[agent] for g in per_game)

    def test_final_before_four_games_rejected(self):
        s = make_session(players=13)
        s.start_game(None, 0)
        s.end_game(1000)
        with pytest.raises(SessionError):
            s.final_scores()

    def test_ties_keep_join_order(self):
        s = make_session(players=13)
        for kind in s.game_order:
            s.start_game(kind, 0)
            s.end_game(1000)
        scores = s.final_scores()
        for (a1, v1), (a2, v2) in zip(scores, scores[1:]):
            assert v1 > v2 or (v1 == v2 and a1 < a2)  # joins were 1,2,3,...


class TestStateFrame:
    def test_normative_fields_and_spellings(self):
        s = make_session(players=13)
        frame = s.state_frame(0)
        assert frame["t"] == "state"
        for key in ("phase", "grid", "scores", "clockMs"):
            assert key in frame
        assert len(frame["grid"]) == 6
        assert all(len(row) == 6 for row in frame["grid"])

    def test_game_start_frame_table(self):
        s = make_session(players=13)
        game = s.start_game(None, 0)
        frame = s.game_start_frame()
        assert frame["t"] == "gameStart"
        assert frame["kind"] == game.kind
        assert frame["table"] == list(preset(game.kind).bins)
        assert len(frame["table"]) == 11

    def test_live_scores_during_game(self):
        s = make_session(players=14)
        s.start_game(None, 0)
        frame = s.state_frame(42)
        table = s.current.table
        for agent in s.roster:
            assert frame["scores"][str(agent)] == agent_score(s.grid, table, agent)

    def test_totals_in_final_phase(self):
        s = make_session(players=13)
        for kind in s.game_order:
            s.start_game(kind, 0)
            s.end_game(1000)
        s.show_final_scores()
        frame = s.state_frame(0)
        assert frame["phase"] == "final"
        assert "totals" in frame
