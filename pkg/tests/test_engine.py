"""Simulation dynamics: placement, candidate evaluation, both policies, runs."""

import math
import random
from collections import Counter

import pytest

from seglab.engine import (
    Placement,
    Policy,
    SimulationParams,
    batch,
    best_response_choice,
    candidate_set,
    evaluate_candidate,
    initial_placement,
    random_relocation_choice,
    run,
    run_logged,
    run_seed,
    step,
)
from seglab.engine.api import _place
from seglab.grid import Color, Direction, GridError, GridState, agent_score, preset
from seglab.metrics import snapshot
from seglab.rng import Pcg32, split_seed

from conftest import oracle_argmax, oracle_candidates, random_grid

Y, B = Color.YELLOW, Color.BLUE
SAME = preset("same")
SAD = preset("same-and-diverse")
DIVERSE = preset("diverse")


def params(policy=Policy.BEST_RESPONSE, table=SAME, n=20, periods=1000,
           runs=2, seed=0, record_every=500, placement=Placement.UNIFORM):
    return SimulationParams(policy, table, n, periods, runs, seed,
                            record_every, placement)


class TestInitialPlacement:
    def test_full_board_splits_evenly(self):
        g = initial_placement(36, seed=1)
        assert g.n_agents == 36
        counts = Counter(g.colors.values())
        assert counts[Y] == 18 and counts[B] == 18

    def test_same_seed_same_board(self):
        assert initial_placement(20, 7) == initial_placement(20, 7)
        assert initial_placement(20, 7) != initial_placement(20, 8)

    def test_bounds(self):
        with pytest.raises(GridError):
            initial_placement(37, 0)
        with pytest.raises(GridError):
            initial_placement(0, 0)

    def test_cell_occupancy_uniform_over_seeds(self):
        # n=20: every cell occupied in ~20/36 of draws, +-2 percentage points
        trials = 10_000
        hits = [0] * 36
        for s in range(trials):
            g = initial_placement(20, s)
            for i, v in enumerate(g.cells):
                if v:
                    hits[i] += 1
        expected = 20 / 36
        for h in hits:
            assert abs(h / trials - expected) < 0.02

    def test_odd_roster_majority_is_a_fair_coin(self):
        majorities = Counter()
        for s in range(2000):
            g = initial_placement(21, s)
            counts = Counter(g.colors.values())
            assert sorted(counts.values()) == [10, 11]
            majorities[max(counts, key=counts.get)] += 1
        assert abs(majorities[Y] / 2000 - 0.5) < 0.05

    def test_raster_fills_seat_order(self):
        g = initial_placement(5, 3, placement=Placement.RASTER)
        assert [g.cells[i] for i in range(5)] == [1, 2, 3, 4, 5]
        assert all(v == 0 for v in g.cells[5:])
        # alternating colors
        assert g.colors[1] != g.colors[2]
        assert g.colors[2] != g.colors[3]


class TestCandidateSet:
    def test_full_board_leaves_only_current(self):
        g = initial_placement(36, 0)
        agent = g.agents[0]
        assert candidate_set(g, agent) == [g.cell_of(agent)]

    def test_lone_agent_at_center_has_five(self):
        g = GridState.from_agents({1: (2, 2)}, {1: Y})
        cands = candidate_set(g, 1)
        assert len(cands) == 5
        assert set(cands) == {(2, 2), (1, 2), (3, 2), (2, 1), (2, 3)}

    def test_jump_results_per_rule(self):
        g = GridState.from_agents({1: (0, 0), 2: (0, 1)}, {1: Y, 2: B})
        assert set(candidate_set(g, 1)) == {(0, 0), (1, 0), (0, 2)}

    def test_matches_oracle(self, py_rng):
        for _ in range(100):
            g = random_grid(py_rng, py_rng.randint(1, 35))
            agent = py_rng.choice(g.agents)
            assert set(candidate_set(g, agent)) == set(oracle_candidates(g, agent))


class TestEvaluateCandidate:
    def test_current_cell_equals_actual_score(self, py_rng):
        for _ in range(50):
            g = random_grid(py_rng, py_rng.randint(2, 30))
            agent = py_rng.choice(g.agents)
            cur = g.cell_of(agent)
            assert evaluate_candidate(g, agent, cur, SAD) == agent_score(g, SAD, agent)

    def test_moving_away_from_only_neighbor_scores_minimum(self):
        # same-color pair stacked vertically; the up-jump lands clear of both
        g = GridState.from_agents({1: (3, 0), 2: (4, 0)}, {1: Y, 2: Y})
        assert evaluate_candidate(g, 1, (3, 0), SAME) == 100  # 100% same
        assert (2, 0) in candidate_set(g, 1)
        assert evaluate_candidate(g, 1, (2, 0), SAME) == 5

    def test_origin_counts_as_vacated(self):
        g = GridState.from_agents({1: (3, 0)}, {1: Y})
        # (2, 0) is Moore-adjacent only to the origin, which empties on the move
        assert evaluate_candidate(g, 1, (2, 0), SAME) == 5

    def test_non_candidate_is_domain_error(self):
        g = GridState.from_agents({1: (0, 0)}, {1: Y})
        with pytest.raises(GridError):
            evaluate_candidate(g, 1, (5, 5), SAME)


class TestBestResponseChoice:
    def test_satisfied_at_maximum_stays(self):
        # adjacent same-color pair under Same: 100% same is the table max
        g = GridState.from_agents({1: (0, 0), 2: (0, 1)}, {1: Y, 2: Y})
        rng = Pcg32(0)
        before = rng.state
        for _ in range(25):
            assert best_response_choice(g, 1, SAME, rng) == (0, 0)
        assert rng.state == before  # the gate consumes no randomness

    def test_strictly_best_current_below_max_stays(self, py_rng):
        # search random boards for a singleton argmax at the current cell
        found = 0
        for _ in range(3000):
            g = random_grid(py_rng, py_rng.randint(5, 30))
            agent = py_rng.choice(g.agents)
            cur = g.cell_of(agent)
            argmax = oracle_argmax(g, agent, SAD)
            if argmax == {cur} and agent_score(g, SAD, agent) < SAD.max_points:
                assert best_response_choice(g, agent, SAD, Pcg32(1)) == cur
                found += 1
                if found >= 10:
                    break
        assert found >= 10

    def test_five_way_tie_roughly_uniform(self):
        g = GridState.from_agents({1: (2, 2)}, {1: Y})
        cands = set(candidate_set(g, 1))
        counts = Counter(
            best_response_choice(g, 1, SAME, Pcg32(split_seed(5, i), i))
            for i in range(2000)
        )
        assert set(counts) == cands
        for c in cands:
            assert abs(counts[c] / 2000 - 0.2) < 0.05

    def test_choice_always_in_oracle_argmax(self, py_rng):
        for i in range(200):
            g = random_grid(py_rng, py_rng.randint(2, 36))
            agent = py_rng.choice(g.agents)
            table = preset(py_rng.choice(
                ("same", "diverse", "same-and-diverse", "same-or-different")
            ))
            choice = best_response_choice(g, agent, table, Pcg32(i))
            assert choice in oracle_argmax(g, agent, table)


class TestRandomRelocationChoice:
    def test_at_global_max_never_moves(self):
        # yellow next to blue under Diverse: 0% same scores the max
        g = GridState.from_agents({1: (0, 0), 2: (0, 1)}, {1: Y, 2: B})
        rng = Pcg32(3)
        for _ in range(50):
            assert random_relocation_choice(g, 1, DIVERSE, rng) == (0, 0)

    def test_two_open_directions_split_evenly(self):
        # corner agent, unsatisfied under Same: targets are down and right-jump
        g = GridState.from_agents({1: (0, 0), 2: (0, 1)}, {1: Y, 2: B})
        targets = Counter(
            random_relocation_choice(g, 1, SAME, Pcg32(split_seed(9, i), i))
            for i in range(10_000)
        )
        assert set(targets) == {(1, 0), (0, 2)}
        for t in targets:
            assert abs(targets[t] / 10_000 - 0.5) < 0.025

    def test_blocked_and_unsatisfied_stays(self):
        g = initial_placement(36, 11)  # full board: nobody has a jump target
        unsatisfied = [
            a for a in g.agents if agent_score(g, SAME, a) < SAME.max_points
        ]
        assert unsatisfied
        agent = unsatisfied[0]
        assert random_relocation_choice(g, agent, SAME, Pcg32(1)) == g.cell_of(agent)


class TestStep:
    def test_lone_agent_random_walks_under_best_response(self):
        g = GridState.from_agents({1: (2, 2)}, {1: Y})
        p = params(n=1)
        rng = Pcg32(4)
        seen = {g.cell_of(1)}
        for _ in range(50):
            g = step(g, p, rng)
            seen.add(g.cell_of(1))
        assert len(seen) > 3  # it moves around

    def test_fully_satisfied_random_relocation_is_fixed_point(self):
        g = GridState.from_agents({1: (0, 0), 2: (0, 1)}, {1: Y, 2: Y})
        p = params(policy=Policy.RANDOM_RELOCATION, table=SAME, n=2)
        rng = Pcg32(6)
        for _ in range(50):
            assert step(g, p, rng) is g

    def test_fixed_seed_reproduces_trajectory(self):
        p = params(n=15, table=SAD)
        for policy in Policy:
            p2 = SimulationParams(policy, SAD, 15, 500, 1, 42, 100)
            a, b = Pcg32(1, 0), Pcg32(1, 0)
            ga = gb = initial_placement(15, 42)
            for _ in range(200):
                ga = step(ga, p2, a)
                gb = step(gb, p2, b)
            assert ga == gb


class TestRunAndBatch:
    def test_zero_periods_returns_initial_placement(self):
        p = params(periods=0, record_every=1)
        r = run(p, 0)
        expected = initial_placement(
            20, split_seed(p.seed, 0), p.placement, stream=0
        )
        assert r.final_grid == expected
        assert len(r.trace) == 1

    def test_trace_length_invariant(self):
        for periods, every in ((1000, 300), (999, 1000), (1, 1), (0, 5)):
            p = params(periods=periods, record_every=every)
            r = run(p, 0)
            assert len(r.trace) == periods // every + 1

    def test_counts_conserved_across_run(self):
        p = params(periods=2000, table=SAD)
        r = run(p, 1)
        assert r.final_grid.n_agents == 20
        counts = Counter(r.final_grid.colors.values())
        assert counts[Y] == 10 and counts[B] == 10

    def test_final_snapshot_matches_metrics_module(self):
        p = params(periods=1500, table=SAD, record_every=1500)
        r = run(p, 3)
        s = snapshot(r.final_grid, SAD)
        last = r.trace[-1]
        assert math.isclose(s.segregation, last.segregation, rel_tol=0, abs_tol=0)
        assert s.avg_score == last.avg_score
        assert s.avg_neighbors == last.avg_neighbors

    def test_run_logged_matches_kernel_run(self):
        for policy in Policy:
            p = SimulationParams(policy, SAD, 14, 800, 1, 77, 400)
            direct = run(p, 0)
            logged, log = run_logged(p, 0)
            assert logged.final_grid == direct.final_grid
            assert logged.trace == direct.trace
            assert log.end_ms == 800
            assert all(e.accepted for e in log.events)

    def test_batch_deterministic_and_order_independent(self):
        p = params(runs=6, periods=500)
        b1 = batch(p, workers=1)
        b2 = batch(p, workers=3)
        assert b1.rows == b2.rows
        assert [r.run for r in b1.rows] == list(range(6))

    def test_batch_summary_stats(self):
        p = params(runs=5, periods=300)
        b = batch(p)
        segs = [r.segregation for r in b.rows]
        mean = sum(segs) / len(segs)
        assert math.isclose(b.summary.mean_segregation, mean)
        var = sum((v - mean) ** 2 for v in segs) / (len(segs) - 1)
        assert math.isclose(b.summary.std_segregation, math.sqrt(var))

    def test_run_seed_derivation(self):
        p = params(seed=123)
        assert run_seed(p, 0) == split_seed(123, 0)
        assert run(p, 5).seed == split_seed(123, 5)


class TestInvariantProperties:
    def test_best_response_never_lowers_evaluated_score(self, py_rng):
        # the argmax includes the current cell, so the move can't hurt
        for i in range(100):
            g = random_grid(py_rng, py_rng.randint(3, 30))
            agent = py_rng.choice(g.agents)
            before = agent_score(g, SAD, agent)
            choice = best_response_choice(g, agent, SAD, Pcg32(i))
            assert evaluate_candidate(g, agent, choice, SAD) >= before
