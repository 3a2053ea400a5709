"""Tests for finite-state ground-truth processes"""

import itertools

import numpy as np
import pytest

from config import DEFAULT_CHAIN
from models.chain import (
    FiniteProcess, StateCylinder, check_stochastic, is_irreducible, period, stationary_distribution,
    second_eigenvalue_modulus, validate_mixing, fdd_probability, symbol_emissions, block_forward,
    block_backward, observed_marginal, observed_cdf, observed_symbols, sample_paths, sample_path
)
from models.errors import ProcessError, ReducibleChainError, PeriodicChainError


def test_stationary_distribution_of_default_chain(default_proc):
    np.testing.assert_allclose(default_proc.stationary, [2 / 3, 1 / 3], atol=1e-14)
    np.testing.assert_allclose(default_proc.stationary @ default_proc.transition, default_proc.stationary,
                               atol=1e-14)


def test_stationary_distribution_is_invariant_for_random_chains():
    rng = np.random.default_rng(5)
    for S in range(2, 9):
        P = rng.dirichlet(np.ones(S), size=S)
        q = stationary_distribution(P)
        assert q.sum() == pytest.approx(1.0)
        assert np.abs(q @ P - q).max() < 1e-12


def test_check_stochastic_rejects_bad_rows():
    with pytest.raises(ProcessError):
        check_stochastic([[0.5, 0.4], [0.2, 0.8]])
    with pytest.raises(ProcessError):
        check_stochastic([[1.1, -0.1], [0.2, 0.8]])
    with pytest.raises(ProcessError):
        check_stochastic([[1.0, 0.0, 0.0]])


def test_irreducibility_and_period():
    swap = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert is_irreducible(swap)
    assert period(swap) == 2
    assert period(np.array(DEFAULT_CHAIN["P"])) == 1
    absorbing = np.array([[1.0, 0.0], [0.5, 0.5]])
    assert not is_irreducible(absorbing)
    with pytest.raises(ReducibleChainError):
        stationary_distribution(absorbing)
    with pytest.raises(PeriodicChainError):
        validate_mixing(FiniteProcess.markov(swap))


def test_second_eigenvalue(default_proc):
    assert second_eigenvalue_modulus(default_proc.transition) == pytest.approx(0.7)


def test_fdd_probability(default_proc):
    assert fdd_probability(default_proc, StateCylinder(0, [{0}, {0}])) == pytest.approx(0.6)
    assert fdd_probability(default_proc, StateCylinder(5, [{0, 1}])) == pytest.approx(1.0)
    # consistency: summing out the last coordinate
    total = sum(fdd_probability(default_proc, StateCylinder(0, [{1}, {s}])) for s in (0, 1))
    assert total == pytest.approx(fdd_probability(default_proc, StateCylinder(0, [{1}])))



def _subsets(S):
    return [frozenset(c) for k in range(S + 1) for c in itertools.combinations(range(S), k)]


def _enumerated_probability(P, q, offset, factors):
    """Sum of path weights over every state sequence of the window 0..offset+len-1"""
    total = 0.0
    for path in itertools.product(range(len(q)), repeat=offset + len(factors)):
        if any(path[offset + j] not in f for j, f in enumerate(factors)):
            continue
        weight = q[path[0]]
        for a, b in zip(path, path[1:]):
            weight *= P[a, b]
        total += weight
    return total


@pytest.mark.parametrize("S, seed", [(2, 0), (3, 1), (4, 2)])
def test_fdd_consistency_over_all_short_cylinders(S, seed):
    P = np.random.default_rng(seed).dirichlet(np.ones(S), size=S)
    proc = FiniteProcess.markov(P)
    q = proc.stationary
    subsets = _subsets(S)
    full = frozenset(range(S))
    for length in (1, 2, 3):
        for factors in itertools.product(subsets, repeat=length):
            p = fdd_probability(proc, StateCylinder(0, factors))
            assert p == pytest.approx(_enumerated_probability(P, q, 0, factors), abs=1e-12)
            # an unconstrained time before or after leaves the probability unchanged
            assert fdd_probability(proc, StateCylinder(0, (full,) + factors)) == pytest.approx(p, abs=1e-12)
            assert fdd_probability(proc, StateCylinder(0, factors + (full,))) == pytest.approx(p, abs=1e-12)
            # disjoint split of the last factor is additive
            last = sorted(factors[-1])
            if len(last) > 1:
                head, tail = frozenset(last[:1]), frozenset(last[1:])
                parts = sum(fdd_probability(proc, StateCylinder(0, factors[:-1] + (part,))) for part in (head, tail))
                assert parts == pytest.approx(p, abs=1e-12)


@pytest.mark.parametrize("offset", [1, 2, 3])
def test_fdd_is_shift_invariant(offset):
    P = np.random.default_rng(9).dirichlet(np.ones(3), size=3)
    proc = FiniteProcess.markov(P)
    subsets = _subsets(3)
    for factors in itertools.product(subsets, repeat=2):
        shifted = StateCylinder(0, factors).shift(offset)
        expected = _enumerated_probability(P, proc.stationary, offset, factors)
        assert fdd_probability(proc, shifted) == pytest.approx(expected, abs=1e-12)


def test_from_dict_validation():
    with pytest.raises(ProcessError):
        FiniteProcess.from_dict({"P": [[1.0]], "colour": "red"})
    with pytest.raises(ProcessError):
        FiniteProcess.from_dict({"P": [[1.0]], "weights": [1.0]})
    with pytest.raises(ProcessError):
        FiniteProcess.from_dict({"states": 3, "P": DEFAULT_CHAIN["P"]})
    with pytest.raises(ProcessError):
        FiniteProcess.markov(np.full((9, 9), 1 / 9))
    with pytest.raises(ProcessError):
        FiniteProcess.markov(DEFAULT_CHAIN["P"], observe=[[0.0], [1.0], [2.0]])


def test_dict_roundtrip(default_proc, iid_proc):
    for proc in (default_proc, iid_proc):
        again = FiniteProcess.from_dict(proc.to_dict())
        np.testing.assert_allclose(again.transition, proc.transition)
        np.testing.assert_allclose(again.observe, proc.observe)
        assert again.kind == proc.kind


def test_iid_process(iid_proc):
    np.testing.assert_allclose(iid_proc.transition, np.tile([0.5, 0.3, 0.2], (3, 1)))
    np.testing.assert_allclose(iid_proc.stationary, [0.5, 0.3, 0.2])


def test_observed_symbols_collapse(collapsing_proc):
    symbols, of_state = observed_symbols(collapsing_proc)
    np.testing.assert_array_equal(symbols, [[0.0, 1.0], [1.0, 0.0]])
    np.testing.assert_array_equal(of_state, [0, 0, 1])
    E = symbol_emissions(collapsing_proc)
    np.testing.assert_array_equal(E, [[1, 1, 0], [0, 0, 1]])


def test_observed_marginals(collapsing_proc):
    q = collapsing_proc.stationary
    first = observed_marginal(collapsing_proc, 0)
    np.testing.assert_allclose(first.atom_locations, [0.0, 1.0])
    np.testing.assert_allclose(first.atom_masses, [q[0] + q[1], q[2]])


def test_observed_cdf(default_proc, collapsing_proc):
    assert observed_cdf(default_proc, [0.5])[0] == pytest.approx(2 / 3)
    q = collapsing_proc.stationary
    np.testing.assert_allclose(observed_cdf(collapsing_proc, [[0.0, 1.0], [1.0, 0.0], [0.5, 0.5]]),
                               [q[0] + q[1], q[2], 0.0])


@pytest.mark.parametrize("L", [1, 2, 3])
def test_block_vectors(collapsing_proc, L):
    E = symbol_emissions(collapsing_proc)
    fw = block_forward(collapsing_proc, E, L)
    bw = block_backward(collapsing_proc, E, L)
    assert fw.shape == (len(E) ** L, collapsing_proc.n_states)
    np.testing.assert_allclose(fw.sum(axis=0), collapsing_proc.stationary, atol=1e-14)
    np.testing.assert_allclose(bw.sum(axis=0), np.ones(collapsing_proc.n_states), atol=1e-14)
    # block probabilities agree between the two directions
    np.testing.assert_allclose(fw.sum(axis=1), bw @ collapsing_proc.stationary, atol=1e-14)


def test_sample_paths_match_fdds(default_proc):
    rng = np.random.default_rng(2024)
    N = 200_000
    states, values = sample_paths(default_proc, rng, N, 2)
    assert values.shape == (N, 2, 1)
    np.testing.assert_array_equal(values[..., 0], states.astype(float))
    freq = np.mean((states[:, 0] == 0) & (states[:, 1] == 0))
    p = 0.6
    assert abs(freq - p) < 5 * np.sqrt(p * (1 - p) / N)


def test_sample_path_lengths(default_proc):
    rng = np.random.default_rng(1)
    states, values = sample_paths(default_proc, rng, 3, 0)
    assert states.shape == (3, 0) and values.shape == (3, 0, 1)
    s, x = sample_path(default_proc, rng, 10)
    assert s.shape == (10,) and x.shape == (10, 1)
    with pytest.raises(ProcessError):
        sample_path(default_proc, rng, 0)


def test_single_state_path_is_constant():
    proc = FiniteProcess.markov([[1.0]], observe=[[2.5]])
    states, values = sample_path(proc, np.random.default_rng(3), 50)
    np.testing.assert_array_equal(states, 0)
    np.testing.assert_array_equal(values, 2.5)


def test_sample_path_is_seed_deterministic(collapsing_proc):
    first = sample_path(collapsing_proc, np.random.default_rng(17), 500)
    second = sample_path(collapsing_proc, np.random.default_rng(17), 500)
    np.testing.assert_array_equal(first[0], second[0])
    np.testing.assert_array_equal(first[1], second[1])


@pytest.mark.slow
def test_transition_frequencies_of_long_path(default_proc):
    N = 10**6
    states, _ = sample_path(default_proc, np.random.default_rng(2718), N)
    counts = np.zeros((2, 2))
    np.add.at(counts, (states[:-1], states[1:]), 1.0)
    estimate = counts / counts.sum(axis=1, keepdims=True)
    assert np.abs(estimate - default_proc.transition).max() < 3 / np.sqrt(N)
