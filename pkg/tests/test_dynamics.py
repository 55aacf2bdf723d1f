import csv
import io
import itertools
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fictplay.dynamics import (BestResponses, DynamicsState, Steps, TiebreakRule, afp_step,
                               delta_stats, eligibility_violations, first_play_times, fp_step,
                               log_spaced_times, replay_accumulators, run, select, simulate, simulate_reference, steps_for_budget,
                               theorem1_bound_check)
from fictplay.game import MatrixGame, Player, best_response_set
from fictplay.generators import (SpecError, cyclic_game, parse_game_spec, random_gaussian, rps,
                                 rps_saferock, transitive_game)
from fictplay.rng import SplitMix64

TIEBREAKS = [TiebreakRule.first(), TiebreakRule.last(), TiebreakRule.random()]


def run_lengths(seq):
    return [len(list(g)) for _, g in itertools.groupby(seq)]


class TestSelect:
    def test_deterministic_rules(self):
        assert select(TiebreakRule.first(), {1, 2}) == 1
        assert select(TiebreakRule.last(), {1, 2}) == 2
        assert select(TiebreakRule.fixed_order((0, 1, 2)), {1, 2}) == 1
        assert select(TiebreakRule.fixed_order((2, 0, 1)), {0, 1}) == 0
        assert select(TiebreakRule.fixed_order((2, 1, 0)), {0, 1}) == 1

    def test_empty(self):
        with pytest.raises(ValueError):
            select(TiebreakRule.first(), [])

    def test_random_uniform_frequencies(self):
        rng = SplitMix64(99)
        counts = Counter(select(TiebreakRule.random(), {0, 1, 2}, rng) for _ in range(10_000))
        for k in range(3):
            assert abs(counts[k] / 10_000 - 1 / 3) < 0.02

    def test_random_singleton_draws_nothing(self):
        rng = SplitMix64(4)
        before = rng.state
        assert select(TiebreakRule.random(), {5}, rng) == 5
        assert rng.state == before

    def test_parse(self):
        assert TiebreakRule.parse("order:2,0,1").order == (2, 0, 1)
        assert str(TiebreakRule.parse("order:2,0,1")) == "order:2,0,1"
        assert TiebreakRule.parse("random").kind == "random"
        for bad in ("order:0,0", "sideways", "first:1", "order:a"):
            with pytest.raises((SpecError, ValueError)):
                TiebreakRule.parse(bad)


class TestSequences:
    def test_fp_rps_first_index(self):
        tr = simulate(rps(), "fp", "symmetric", 10)
        assert (tr.row_idx + 1).tolist() == [1, 2, 2, 2, 3, 3, 3, 3, 3, 1]

    def test_afp_rps_first_index(self):
        tr = simulate(rps(), "afp", "symmetric", 6)
        assert (tr.row_idx + 1).tolist() == [1, 2, 2, 3, 3, 1]

    def test_fp_spiral_run_lengths(self):
        # ties broken Rock, Paper, Scissors; the final run is truncated
        tr = run(parse_game_spec("rps"), "fp", "symmetric", Steps(50),
                 TiebreakRule.fixed_order((0, 1, 2)))
        lengths = run_lengths(tr.row_idx)[:-1]
        assert all(b > a for a, b in zip(lengths, lengths[1:]))

    def test_afp_br_budget_50_is_25_steps(self):
        tr = run(parse_game_spec("rps"), "afp", "symmetric", BestResponses(50))
        assert len(tr) == 25 and tr.br[-1] == 50

    def test_initial_accumulator_is_column(self):
        g = random_gaussian(4, 5, 1)
        for i in range(4):
            for j in range(5):
                s = DynamicsState.start(g, "fp", "two-player", init=(i, j))
                assert np.array_equal(s.V, g.payoffs[:, j])
                assert np.array_equal(s.U, g.payoffs[i, :])

    @pytest.mark.parametrize("rule", TIEBREAKS, ids=str)
    def test_fp_transitive_nondecreasing(self, rule):
        tr = simulate(transitive_game(5), "fp", "symmetric", 500, rule, seed=3)
        assert np.all(np.diff(tr.row_idx) >= 0)

    @pytest.mark.parametrize("rule", TIEBREAKS, ids=str)
    def test_afp_transitive_plays_min_t_n(self, rule):
        n = 7
        tr = simulate(transitive_game(n), "afp", "symmetric", 40, rule, seed=5)
        assert tr.row_idx.tolist() == [min(t, n) - 1 for t in range(1, 41)]

    @pytest.mark.parametrize("rule", TIEBREAKS, ids=str)
    def test_naive_afp_never_plays_saferock(self, rule):
        tr = simulate(rps_saferock(), "naive-afp", "two-player", 3000, rule, seed=8)
        assert 3 not in tr.row_idx[1:]
        assert tr.row_counts[3] == 0
        assert np.all(tr.wc_row <= 0)


class TestBudgets:
    def test_steps_for_budget(self):
        assert steps_for_budget("fp", BestResponses(7)) == 7
        assert steps_for_budget("afp", BestResponses(8)) == 4
        assert steps_for_budget("naive-afp", BestResponses(8)) == 4
        assert steps_for_budget("afp", Steps(9)) == 9
        assert steps_for_budget("afp", BestResponses(9), fp_init=2) == 6
        with pytest.raises(SpecError):
            steps_for_budget("afp", BestResponses(7))
        with pytest.raises(SpecError):
            steps_for_budget("fp", BestResponses(0))

    def test_br_counts(self):
        g = random_gaussian(4, 4, 2)
        assert simulate(g, "fp", "two-player", 20).br.tolist() == list(range(1, 21))
        assert simulate(g, "afp", "two-player", 20).br.tolist() == list(range(2, 41, 2))
        fi = simulate(g, "afp", "two-player", 8, fp_init=2)
        assert fi.br.tolist() == [1, 2, 3, 5, 7, 9, 11, 13]
        assert fi.ant_row[:3].tolist() == [-1, -1, -1] and np.all(fi.ant_row[3:] >= 0)
        assert fi.at_best_responses(4) == 2 and fi.at_best_responses(0) == -1

    def test_invalid_combinations(self):
        with pytest.raises(SpecError):
            simulate(rps_saferock(), "fp", "symmetric", 5)
        with pytest.raises(SpecError):
            simulate(rps(), "fp", "two-player", 5, init=(3, 0))
        with pytest.raises(SpecError):
            run(parse_game_spec("rps"), "afp", "symmetric", BestResponses(5))


CONFIGS = [(alg, mode, tb, k)
           for alg in ("fp", "afp", "naive-afp")
           for mode in ("symmetric", "two-player")
           for tb in ("first", "last", "random", "order:2,0,3,1")
           for k in (0, 2)]


class TestKernelMatchesReference:
    @pytest.mark.parametrize("alg,mode,tb,k", CONFIGS)
    def test_integer_game(self, alg, mode, tb, k):
        g = cyclic_game(4)
        args = (g, alg, mode, 120, TiebreakRule.parse(tb), 17, (1, 2), k)
        assert simulate(*args).to_csv() == simulate_reference(*args).to_csv()

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2 ** 40),
           st.sampled_from(["fp", "afp", "naive-afp"]), st.sampled_from(["first", "last", "random"]),
           st.integers(0, 3))
    def test_gaussian_games(self, m, n, seed, alg, tb, k):
        g = random_gaussian(m, n, seed)
        args = (g, alg, "two-player", 60, TiebreakRule.parse(tb), seed, (0, 0), k)
        assert simulate(*args).to_csv() == simulate_reference(*args).to_csv()


class TestInvariants:
    @pytest.mark.parametrize("alg", ["fp", "afp", "naive-afp"])
    def test_counts_accumulators_and_gap(self, alg):
        g = MatrixGame(np.array([[3, -1, 0], [-2, 2, 1], [0, 1, -3]], dtype=float))
        tr = simulate(g, alg, "two-player", 300, TiebreakRule.random(), seed=1)
        assert tr.row_counts.sum() == tr.col_counts.sum() == len(tr)
        V = replay_accumulators(tr, g)
        assert np.array_equal(-V.max(axis=1) / tr.t, tr.wc_col)
        assert np.array_equal(tr.col_counts, np.bincount(tr.col_idx, minlength=3))
        assert np.all(tr.gap >= 0)

    @pytest.mark.parametrize("seed", range(5))
    def test_fp_play_legality(self, seed):
        g = random_gaussian(5, 4, seed)
        tr = simulate(g, "fp", "two-player", 200, TiebreakRule.random(), seed=seed)
        for k in range(1, len(tr)):
            x = np.bincount(tr.row_idx[:k], minlength=5) / k
            y = np.bincount(tr.col_idx[:k], minlength=4) / k
            # brute-force best response sets from the averages (float-tolerant)
            v = g.payoffs @ y
            u = x @ g.payoffs
            assert v[tr.row_idx[k]] >= v.max() - 1e-12
            assert u[tr.col_idx[k]] <= u.min() + 1e-12

    def test_symmetric_shares_counts(self):
        s = DynamicsState.start(cyclic_game(5), "afp", "symmetric")
        assert s.row_counts is s.col_counts
        for _ in range(10):
            afp_step(s)
        assert s.row_counts.sum() == s.t == 11

    def test_tie_free_runs_are_seed_independent(self):
        g = random_gaussian(6, 6, 3)
        a = simulate(g, "afp", "two-player", 200, TiebreakRule.random(), seed=1)
        b = simulate(g, "afp", "two-player", 200, TiebreakRule.random(), seed=2)
        assert a.to_csv() == b.to_csv()

    def test_determinism(self):
        spec = parse_game_spec("gauss:7x5:4")
        a = run(spec, "afp", "two-player", BestResponses(100), TiebreakRule.random(), seed=9)
        b = run(spec, "afp", "two-player", BestResponses(100), TiebreakRule.random(), seed=9)
        assert a.to_csv() == b.to_csv()

    def test_eligibility_on_random_games(self):
        for seed in range(5):
            g = random_gaussian(6, 6, seed)
            tr = simulate(g, "afp", "two-player", 500, TiebreakRule.random(), seed=seed)
            assert eligibility_violations(tr, g) == []

    def test_eligibility_detects_bad_play(self):
        g = cyclic_game(3)
        tr = simulate(g, "fp", "symmetric", 30)
        tr.row_idx[20:] = 0
        tr.col_idx[20:] = 0
        assert eligibility_violations(tr, g)


class TestBoundCheck:
    @pytest.mark.parametrize("alg", ["fp", "afp"])
    def test_gauss_5x5(self, alg):
        g = parse_game_spec("gauss:5x5:0").build()
        tr = simulate(g, alg, "two-player", 2000, TiebreakRule.random(), seed=0)
        assert theorem1_bound_check(tr, g)

    def test_constant_trace_fails(self):
        g = random_gaussian(3, 3, 0)
        tr = simulate(g, "fp", "two-player", 5000)
        tr.gap[:] = 4.0 * g.max_abs
        check = theorem1_bound_check(tr, g)
        assert not check and check.worst_ratio > 1


class TestDeltaStats:
    @pytest.mark.parametrize("n", [3, 4])
    @pytest.mark.parametrize("rule", TIEBREAKS, ids=str)
    def test_afp_cyclic_max_delta(self, n, rule):
        tr = simulate(cyclic_game(n), "afp", "symmetric", 20_000, rule, seed=n)
        assert delta_stats(tr, cyclic_game(n)).max_delta.max() <= 2

    @pytest.mark.parametrize("rule", TIEBREAKS, ids=str)
    def test_fp_c3_nondecreasing(self, rule):
        tr = simulate(rps(), "fp", "symmetric", 20_000, rule, seed=1)
        d = delta_stats(tr, rps())
        assert np.all(np.diff(d.max_delta) >= 0)
        assert d.first_reach[1] == 1
        # Delta equals the replayed accumulator on integer games
        assert np.array_equal(d.max_delta, replay_accumulators(tr, rps()).max(axis=1))

    def test_change_times(self):
        tr = simulate(rps(), "fp", "symmetric", 10)
        d = delta_stats(tr, rps())
        assert d.tau == [2, 5, 10]
        assert first_play_times(tr) == {0: 1, 1: 2, 2: 5}

    def test_requires_symmetric(self):
        tr = simulate(rps(), "fp", "two-player", 10)
        with pytest.raises(ValueError):
            delta_stats(tr, rps())


class TestTraceCsv:
    def test_columns_and_blanks(self):
        tr = simulate(rps(), "fp", "symmetric", 5)
        rows = list(csv.reader(io.StringIO(tr.to_csv())))
        assert rows[0] == ["t", "br_per_player", "row_idx", "col_idx", "ant_row_idx",
                           "ant_col_idx", "wc_row", "wc_col", "gap"]
        assert len(rows) == 6
        assert rows[1][4] == "" and rows[1][5] == ""
        assert float(rows[1][8]) == 2.0

    def test_final_strategies(self):
        tr = simulate(rps(), "fp", "symmetric", 10)
        assert np.allclose(tr.row_strategy, [0.2, 0.3, 0.5])
        assert tr.row_strategy.sum() == pytest.approx(1)


def test_log_spaced_times():
    t = log_spaced_times(1, 1000, 30)
    assert t[0] == 1 and t[-1] == 1000 and np.all(np.diff(t) > 0)


def test_best_response_sets_agree_with_fp_step():
    g = random_gaussian(4, 4, 12)
    s = DynamicsState.start(g, "fp", "two-player")
    for _ in range(20):
        y = s.col_counts / s.t
        x = s.row_counts / s.t
        brs_row = best_response_set(g, Player.ROW, y)
        brs_col = best_response_set(g, Player.COL, x)
        rec = fp_step(s)
        assert rec.row in brs_row and rec.col in brs_col


class TestTransitiveClosedForms:
    """Exact statements that hold on the literal T^n (see the acceptance notes)."""

    @pytest.mark.parametrize("rule", TIEBREAKS + [TiebreakRule.fixed_order(range(19, -1, -1))],
                             ids=str)
    def test_fp_first_play_times(self, rule):
        n = 20
        tr = simulate(transitive_game(n, scaled=True), "fp", "symmetric", 2000, rule, seed=2)
        first = first_play_times(tr)
        tau = [first[k] for k in range(n)]
        # gaps start at 1 and grow by at least 1, hence tau_k >= 1 + k(k-1)/2
        assert all(tau[k - 1] >= 1 + k * (k - 1) // 2 for k in range(1, n + 1))
        assert tau[:6] == [1, 2, 4, 7, 11, 16]

    @pytest.mark.parametrize("n", [5, 10, 20])
    def test_afp_max_payoff(self, n):
        game = transitive_game(n, scaled=True)
        tr = simulate(game, "afp", "symmetric", n, TiebreakRule.random(), seed=n)
        vmax = replay_accumulators(tr, game).max(axis=1)
        assert vmax[0] == n  # t = 1: the only positive entry is T_{2,1} = n/n
        assert [int(v) for v in vmax[1:n - 1]] == [n - t + 2 for t in range(2, n)]
