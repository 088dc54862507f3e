"""Tests for the discrete left-right HMMs.

The forward recursion is checked against a brute-force enumeration of all
N^T state paths in plain Python floats; Baum-Welch against EM's defining
properties (monotone likelihood, fixed points, beating the generator).
"""

import math
from itertools import product

import numpy as np
import pytest

from signflow.codebook import SymbolSequence
from signflow.hmm import (
    EPS_P,
    DiscreteHMM,
    baum_welch,
    classify_gesture,
    forward_log_likelihood,
    init_left_right,
)
from signflow.skeleton import EmptyInputError


def enumerate_log_likelihood(hmm, obs):
    """Sum joint path probabilities over every state path, scalar math."""
    total = 0.0
    for path in product(range(hmm.n_states), repeat=len(obs)):
        p = hmm.pi[path[0]] * hmm.B[path[0], obs[0]]
        for t in range(1, len(obs)):
            p *= hmm.A[path[t - 1], path[t]] * hmm.B[path[t], obs[t]]
        total += p
    return math.log(total) if total > 0.0 else float("-inf")


def random_left_right(rng, n, k):
    pi = rng.dirichlet(np.ones(n))
    A = np.zeros((n, n))
    for i in range(n - 1):
        u = rng.uniform(0.05, 0.95)
        A[i, i], A[i, i + 1] = u, 1.0 - u
    A[n - 1, n - 1] = 1.0
    B = rng.uniform(0.1, 1.0, size=(n, k))
    B /= B.sum(axis=1, keepdims=True)
    return DiscreteHMM(n_states=n, n_symbols=k, pi=pi, A=A, B=B)


def sample_sequence(rng, hmm, length):
    state = int(rng.choice(hmm.n_states, p=hmm.pi))
    out = []
    for _ in range(length):
        out.append(int(rng.choice(hmm.n_symbols, p=hmm.B[state])))
        state = int(rng.choice(hmm.n_states, p=hmm.A[state]))
    return SymbolSequence(symbols=np.array(out))


class TestInitLeftRight:
    def test_four_state_layout(self):
        m = init_left_right(4, 100)
        want_A = np.array([
            [0.5, 0.5, 0.0, 0.0],
            [0.0, 0.5, 0.5, 0.0],
            [0.0, 0.0, 0.5, 0.5],
            [0.0, 0.0, 0.0, 1.0],
        ])
        np.testing.assert_array_equal(m.A, want_A)
        np.testing.assert_array_equal(m.pi, [1, 0, 0, 0])
        np.testing.assert_array_equal(m.B, np.full((4, 100), 0.01))

    def test_single_state(self):
        m = init_left_right(1, 2)
        np.testing.assert_array_equal(m.A, [[1.0]])
        np.testing.assert_array_equal(m.pi, [1.0])
        np.testing.assert_array_equal(m.B, [[0.5, 0.5]])

    def test_rows_stochastic(self):
        for n in (1, 2, 5, 8):
            m = init_left_right(n, 7)
            np.testing.assert_allclose(m.A.sum(axis=1), 1.0, atol=1e-12)
            np.testing.assert_allclose(m.B.sum(axis=1), 1.0, atol=1e-12)
            assert m.pi.sum() == 1.0

    def test_zero_counts_rejected(self):
        with pytest.raises(ValueError):
            init_left_right(0, 5)
        with pytest.raises(ValueError):
            init_left_right(5, 0)


class TestDiscreteHMMValidation:
    def test_left_right_violation_rejected(self):
        A = np.array([[0.5, 0.25, 0.25], [0.0, 0.5, 0.5], [0.0, 0.0, 1.0]])
        B = np.full((3, 2), 0.5)
        with pytest.raises(ValueError):
            DiscreteHMM(3, 2, np.array([1.0, 0, 0]), A, B)

    def test_bad_row_sum_rejected(self):
        m = init_left_right(3, 2)
        bad_B = m.B.copy()
        bad_B[0, 0] = 0.9
        with pytest.raises(ValueError):
            DiscreteHMM(3, 2, m.pi, m.A, bad_B)


class TestForward:
    def test_single_state_product_of_emissions(self):
        m = init_left_right(1, 2)
        ll = forward_log_likelihood(m, np.array([0, 1, 0]))
        assert abs(ll - math.log(0.125)) < 1e-12

    def test_impossible_symbol_gives_neg_inf(self):
        m = DiscreteHMM(1, 2, np.array([1.0]), np.array([[1.0]]),
                        np.array([[1.0, 0.0]]))
        assert forward_log_likelihood(m, np.array([0, 1])) == float("-inf")

    def test_matches_path_enumeration(self):
        rng = np.random.default_rng(21)
        for trial in range(60):
            n = int(rng.integers(1, 4))
            k = int(rng.integers(2, 5))
            t = int(rng.integers(1, 7))
            m = random_left_right(rng, n, k)
            obs = rng.integers(0, k, size=t)
            got = forward_log_likelihood(m, obs)
            want = enumerate_log_likelihood(m, obs)
            assert abs(got - want) <= 1e-9 * abs(want)

    def test_long_sequence_no_underflow(self):
        m = init_left_right(6, 10)
        rng = np.random.default_rng(22)
        obs = rng.integers(0, 10, size=5000)
        ll = forward_log_likelihood(m, obs)
        assert math.isfinite(ll)
        # uniform emissions: every path emits (1/10)^T
        assert abs(ll - 5000 * math.log(0.1)) < 1e-6

    def test_symbol_out_of_range(self):
        m = init_left_right(2, 3)
        with pytest.raises(ValueError):
            forward_log_likelihood(m, np.array([0, 3]))

    def test_empty_rejected(self):
        m = init_left_right(2, 3)
        with pytest.raises(EmptyInputError):
            forward_log_likelihood(m, np.array([], dtype=int))

    def test_accepts_symbol_sequence_type(self):
        m = init_left_right(2, 3)
        s = SymbolSequence(symbols=np.array([0, 1, 2]))
        assert forward_log_likelihood(m, s) == forward_log_likelihood(m, s.symbols)


class TestBaumWelch:
    def test_constant_data_concentrates_emissions(self):
        m = init_left_right(3, 5)
        train = [SymbolSequence(symbols=np.zeros(12, dtype=int)) for _ in range(4)]
        trained, report = baum_welch(m, train, max_iter=20)
        assert np.all(trained.B[:, 0] >= 1.0 - 5 * EPS_P)
        assert report.iterations >= 1

    def test_max_iter_zero_is_noop(self):
        m = init_left_right(3, 4)
        train = [SymbolSequence(symbols=np.array([0, 1, 2]))]
        trained, report = baum_welch(m, train, max_iter=0)
        np.testing.assert_array_equal(trained.A, m.A)
        np.testing.assert_array_equal(trained.B, m.B)
        assert report.log_likelihoods == []
        assert not report.converged

    def test_monotone_log_likelihood(self):
        rng = np.random.default_rng(23)
        for trial in range(12):
            n = int(rng.integers(2, 5))
            k = int(rng.integers(3, 7))
            gen = random_left_right(rng, n, k)
            train = [sample_sequence(rng, gen, int(rng.integers(5, 15)))
                     for _ in range(6)]
            m = init_left_right(n, k)
            _, report = baum_welch(m, train, max_iter=15, tol=-math.inf)
            ll = np.array(report.log_likelihoods)
            assert np.all(np.diff(ll) >= -1e-8), f"trial {trial}: {ll}"

    def test_structure_preserved_after_every_iteration(self):
        rng = np.random.default_rng(24)
        gen = random_left_right(rng, 3, 4)
        train = [sample_sequence(rng, gen, 10) for _ in range(5)]
        init = init_left_right(3, 4)
        off = ~np.array([[1, 1, 0], [0, 1, 1], [0, 0, 1]], dtype=bool)
        for iters in range(1, 9):
            m, _ = baum_welch(init, train, max_iter=iters, tol=-math.inf)
            assert np.all(m.A[off] == 0.0)
            np.testing.assert_allclose(m.A.sum(axis=1), 1.0, atol=1e-9)
            np.testing.assert_allclose(m.B.sum(axis=1), 1.0, atol=1e-9)
            np.testing.assert_array_equal(m.pi, [1.0, 0.0, 0.0])
            assert np.all(m.B >= EPS_P * (1 - 1e-12))

    def test_beats_generator_on_training_set(self):
        rng = np.random.default_rng(25)
        gen = random_left_right(rng, 2, 4)
        train = [sample_sequence(rng, gen, 12) for _ in range(10)]
        trained, _ = baum_welch(init_left_right(2, 4), train, max_iter=60, tol=1e-9)
        ll_gen = sum(enumerate_log_likelihood(gen, s.symbols) for s in train)
        ll_fit = sum(enumerate_log_likelihood(trained, s.symbols) for s in train)
        assert ll_fit >= ll_gen - 1e-6

    def test_empty_training_rejected(self):
        with pytest.raises(EmptyInputError):
            baum_welch(init_left_right(2, 3), [])

    def test_out_of_range_training_symbol(self):
        with pytest.raises(ValueError):
            baum_welch(init_left_right(2, 3), [SymbolSequence(symbols=np.array([0, 5]))])

    def test_convergence_flag(self):
        m = init_left_right(2, 3)
        train = [SymbolSequence(symbols=np.array([0, 0, 1, 1, 2, 2]))] * 3
        _, report = baum_welch(m, train, max_iter=200, tol=1e-6)
        assert report.converged
        assert report.iterations < 200


class TestClassifyGesture:
    def test_identical_models_tie_to_class_zero(self):
        m = init_left_right(3, 4)
        obs = np.array([0, 1, 2, 3])
        resp = classify_gesture([m, m, m], obs)
        assert resp.best_class == 0
        assert np.all(resp.values == resp.values[0])

    def test_trained_model_wins_on_its_data(self):
        rng = np.random.default_rng(26)
        const = [SymbolSequence(symbols=np.full(10, 2))] * 4
        specialist, _ = baum_welch(init_left_right(2, 5), const, max_iter=20)
        rival = init_left_right(2, 5)
        resp = classify_gesture([rival, specialist], np.full(10, 2))
        assert resp.best_class == 1

    def test_length_normalization(self):
        m = init_left_right(2, 3)
        obs = np.array([0, 1, 2, 0, 1, 2])
        resp = classify_gesture([m], obs)
        raw = forward_log_likelihood(m, obs)
        assert abs(resp.values[0] - raw / 6) < 1e-12

    def test_matches_per_model_oracle(self):
        rng = np.random.default_rng(27)
        for trial in range(20):
            models = [random_left_right(rng, 2, 4) for _ in range(3)]
            obs = rng.integers(0, 4, size=5)
            resp = classify_gesture(models, obs)
            oracle = np.array([enumerate_log_likelihood(m, obs) for m in models]) / 5
            np.testing.assert_allclose(resp.values, oracle, rtol=1e-9)
            assert resp.best_class == int(oracle.argmax())

    def test_no_models_rejected(self):
        with pytest.raises(EmptyInputError):
            classify_gesture([], np.array([0]))
