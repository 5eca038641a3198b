import numpy as np
import pytest

from smallcell.channel import ChannelRealization
from smallcell.tssolver import TSProblem, water_fill
from smallcell.soa import soa_allocate
from smallcell.baselines import (InterferenceAllocation, evaluate_concurrent,
                                 iwfa_solve, oracle_orthogonal,
                                 ORACLE_MAX_ASSIGNMENTS)


def make_realization(cross, noise=1.0):
    cross = np.asarray(cross, dtype=float)
    num_links = cross.shape[0]
    direct = np.einsum("iik->ik", cross) / noise
    return ChannelRealization(cross_gain=cross, direct_gain=direct,
                              positions=np.zeros((2 * num_links, 2)),
                              noise_power_mw=noise, tone_bandwidth_hz=180e3)


def random_realization(rng, num_links=3, num_tones=4, cross_scale=0.1):
    cross = cross_scale * rng.lognormal(0.0, 1.0, (num_links, num_links, num_tones))
    idx = np.arange(num_links)
    cross[idx, idx, :] = rng.lognormal(0.0, 1.0, (num_links, num_tones))
    return make_realization(cross)


class TestEvaluateConcurrent:
    def test_zero_power_zero_rate(self):
        real = random_realization(np.random.default_rng(0))
        rates = evaluate_concurrent(real, np.zeros((3, 4)))
        assert np.all(rates == 0.0)

    def test_single_link_is_interference_free(self):
        g = np.array([[[2.0, 1.0]]])
        real = make_realization(g, noise=0.5)
        p = np.array([[1.0, 3.0]])
        want = np.log1p(np.array([2.0 / 0.5, 3.0 / 0.5])).sum()
        assert evaluate_concurrent(real, p)[0] == pytest.approx(want)

    def test_symmetric_links_get_equal_rates(self):
        cross = np.empty((2, 2, 1))
        cross[0, 0, 0] = cross[1, 1, 0] = 4.0
        cross[0, 1, 0] = cross[1, 0, 0] = 1.0
        real = make_realization(cross)
        rates = evaluate_concurrent(real, np.full((2, 1), 2.0))
        # sinr = 4*2 / (1 + 1*2) for both
        assert rates[0] == rates[1] == pytest.approx(np.log1p(8.0 / 3.0))

    def test_interference_hurts(self):
        cross = np.empty((2, 2, 1))
        cross[0, 0, 0] = cross[1, 1, 0] = 4.0
        cross[0, 1, 0] = cross[1, 0, 0] = 1.0
        real = make_realization(cross)
        alone = evaluate_concurrent(real, np.array([[2.0], [0.0]]))[0]
        both = evaluate_concurrent(real, np.full((2, 1), 2.0))[0]
        assert both < alone


class TestIwfa:
    def test_single_link_matches_water_fill(self):
        rng = np.random.default_rng(1)
        g = rng.lognormal(0.0, 1.0, (1, 1, 6))
        real = make_realization(g, noise=0.25)
        out = iwfa_solve(real, [2.0])
        assert out.converged and out.rounds == 1
        assert np.allclose(out.power[0], water_fill(g[0, 0] / 0.25, 2.0))

    def test_zero_cross_gain_converges_first_round(self):
        rng = np.random.default_rng(2)
        cross = np.zeros((2, 2, 5))
        idx = np.arange(2)
        cross[idx, idx, :] = rng.lognormal(0.0, 1.0, (2, 5))
        out = iwfa_solve(make_realization(cross), [1.0, 3.0])
        assert out.converged and out.rounds == 1
        for i, b in enumerate([1.0, 3.0]):
            assert np.allclose(out.power[i], water_fill(cross[i, i] / 1.0, b))

    def test_budgets_hold_every_round(self):
        real = random_realization(np.random.default_rng(3), cross_scale=0.5)
        budgets = np.array([1.0, 2.0, 0.5])
        for rounds in (1, 2, 3):
            out = iwfa_solve(real, budgets, max_rounds=rounds)
            assert np.all(out.power >= 0.0)
            assert np.allclose(out.power.sum(axis=1), budgets)

    def test_fixed_point_is_mutual_best_response(self):
        real = random_realization(np.random.default_rng(4), cross_scale=0.2)
        budgets = np.array([1.0, 1.0, 1.0])
        out = iwfa_solve(real, budgets)
        assert out.converged
        cross, noise = real.cross_gain, real.noise_power_mw
        for i in range(3):
            floor = noise + np.einsum("jk,jk->k", cross[:, i, :], out.power) \
                - cross[i, i, :] * out.power[i]
            best = water_fill(cross[i, i, :] / floor, 1.0)
            assert np.allclose(out.power[i], best, atol=1e-5)

    def test_round_budget_cut_reports_unconverged(self):
        real = random_realization(np.random.default_rng(5), cross_scale=0.8)
        out = iwfa_solve(real, np.ones(3), max_rounds=1)
        assert out.rounds == 1 and not out.converged

    def test_rates_match_reported_powers(self):
        real = random_realization(np.random.default_rng(6))
        out = iwfa_solve(real, np.ones(3))
        assert np.allclose(out.rate, evaluate_concurrent(real, out.power))
        assert isinstance(out, InterferenceAllocation)

    def test_bad_arguments(self):
        real = random_realization(np.random.default_rng(7))
        with pytest.raises(ValueError):
            iwfa_solve(real, np.ones(3), max_rounds=0)
        with pytest.raises(ValueError):
            iwfa_solve(real, np.ones(3), eps=0.0)


class TestOracle:
    def test_single_link_two_tones(self):
        prob = TSProblem(gains=[[1.0, 1.0]], weights=[1.0], budgets=[2.0])
        alloc, obj = oracle_orthogonal(prob)
        assert obj == pytest.approx(2.0 * np.log(2.0))
        assert np.allclose(alloc.power, [[1.0, 1.0]])
        assert np.all(alloc.share == 1.0)

    def test_dominates_greedy(self):
        rng = np.random.default_rng(8)
        for _ in range(10):
            gains = rng.lognormal(0.0, 1.0, (2, 4))
            prob = TSProblem(gains=gains, weights=[1.0, 2.0], budgets=[1.0, 1.0])
            _, best = oracle_orthogonal(prob)
            assert best >= soa_allocate(prob, "waterfill").objective - 1e-9

    def test_strong_links_split_the_band(self):
        # each link clearly prefers its own half of the tones
        gains = np.array([[5.0, 4.0, 0.1, 0.1], [0.1, 0.1, 5.0, 4.0]])
        prob = TSProblem(gains=gains, weights=[1.0, 1.0], budgets=[2.0, 2.0])
        alloc, _ = oracle_orthogonal(prob)
        assert np.all(alloc.share[0, :2] == 1.0)
        assert np.all(alloc.share[1, 2:] == 1.0)

    def test_enumeration_guard(self):
        gains = np.ones((3, 11))
        prob = TSProblem(gains=gains, weights=np.ones(3), budgets=np.ones(3))
        assert 4 ** 11 > ORACLE_MAX_ASSIGNMENTS
        with pytest.raises(ValueError):
            oracle_orthogonal(prob)

    def test_tones_can_stay_idle(self):
        # a zero-gain tone earns nothing, the oracle leaves it unassigned
        prob = TSProblem(gains=[[1.0, 0.0]], weights=[1.0], budgets=[1.0])
        alloc, obj = oracle_orthogonal(prob)
        assert alloc.share[0, 1] == 0.0
        assert obj == pytest.approx(np.log(2.0))
