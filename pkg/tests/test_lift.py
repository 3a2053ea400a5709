"""Tests for the uniform lift, its projection and exact lifted measures"""

import itertools

import numpy as np
import pytest
from scipy import stats

from models.chain import StateCylinder, fdd_probability, observed_marginals, sample_paths
from models.errors import CylinderError, SupportError
from models.lift import (
    IntervalCylinder, Partition, DRAW_LOG_COLUMNS, lift_point, lift_path, lift_paths, project,
    cylinder_measure, canonical_measure, saturate, refined_partition, partition_cells,
    cell_emissions, estimate_cylinder_measure
)
from models.marginal import MixedMarginal, MarginalProfile, random_marginal


def test_lift_point_lands_in_atom_interval():
    rng = np.random.default_rng(0)
    bern = [MixedMarginal.bernoulli(0.3)]
    for _ in range(100):
        u0 = lift_point(bern, [0.0], rng)[0]
        u1 = lift_point(bern, [1.0], rng)[0]
        assert 0.0 < u0 < 0.7
        assert 0.7 < u1 < 1.0


def test_continuous_coordinates_are_deterministic():
    rng = np.random.default_rng(0)
    uniform = [MixedMarginal.uniform(-1.0, 3.0)]
    pair = lift_path(uniform, np.array([[0.0], [1.0], [2.5]]), rng)
    np.testing.assert_allclose(pair.u_path[:, 0], [0.25, 0.5, 0.875])
    assert len(pair.draw_log) == 0
    assert list(pair.draw_log.columns) == DRAW_LOG_COLUMNS


def test_draw_log_records_every_atom_entry():
    rng = np.random.default_rng(9)
    marginals = [MixedMarginal.bernoulli(0.5), MixedMarginal.uniform()]
    x = np.array([[0.0, 0.2], [1.0, 0.7], [1.0, 0.1]])
    pair = lift_path(marginals, x, rng)
    assert pair.draw_log[["n", "k"]].values.tolist() == [[0, 0], [1, 0], [2, 0]]
    np.testing.assert_array_equal(pair.draw_log["u"].to_numpy(), pair.u_path[:, 0])


def test_factor_identity_on_random_marginals():
    """project(lift(x)) == x exactly on atoms and within 1e-12 elsewhere"""
    rng = np.random.default_rng(42)
    for _ in range(200):
        d = int(rng.integers(1, 4))
        marginals = [random_marginal(rng, MarginalProfile(kind="mixed")) for _ in range(d)]
        x = np.stack([m.sample(rng, 15) for m in marginals], axis=1)
        back = project(marginals, lift_path(marginals, x, rng).u_path)
        for k, m in enumerate(marginals):
            atoms = m.atom_lookup(x[:, k]) >= 0
            np.testing.assert_array_equal(back[atoms, k], x[atoms, k])
            np.testing.assert_allclose(back[~atoms, k], x[~atoms, k], rtol=1e-12, atol=1e-12)


def test_support_errors_name_row_and_column():
    rng = np.random.default_rng(0)
    bern = [MixedMarginal.uniform(), MixedMarginal.bernoulli(0.3)]
    x = np.array([[0.5, 0.0], [0.5, 1.0], [0.5, 2.5]])
    with pytest.raises(SupportError) as info:
        lift_path(bern, x, rng)
    assert info.value.index == 2
    assert info.value.coordinate == 1


def test_flat_spot_values_are_rejected():
    gap = [MixedMarginal.from_dict({"continuous": [[0.0, 0.0], [1.0, 0.5], [2.0, 0.5], [3.0, 1.0]]})]
    with pytest.raises(SupportError):
        lift_point(gap, [1.5], np.random.default_rng(0))


def test_lift_is_seed_deterministic(default_proc, default_marginals):
    _, x = sample_paths(default_proc, np.random.default_rng(1), 1, 50)
    a = lift_path(default_marginals, x[0], np.random.default_rng(77))
    b = lift_path(default_marginals, x[0], np.random.default_rng(77))
    np.testing.assert_array_equal(a.u_path, b.u_path)


@pytest.mark.slow
def test_lifted_stationary_samples_are_uniform(default_proc, default_marginals):
    rng = np.random.default_rng(2)
    N = 100_000
    _, x = sample_paths(default_proc, rng, N, 1)
    u = lift_paths(default_marginals, x, rng)[:, 0, 0]
    assert stats.kstest(u, "uniform").statistic < 1.63 / np.sqrt(N)


def test_order_preservation():
    rng = np.random.default_rng(4)
    marginals = [random_marginal(rng, MarginalProfile(kind=k)) for k in ("discrete", "continuous", "mixed")]
    u = rng.uniform(1e-9, 1 - 1e-9, (5000, 3))
    upper = np.minimum(u + (1 - u) * rng.random((5000, 3)), 1 - 1e-12)
    assert np.all(project(marginals, u) <= project(marginals, upper))


def _symbol_preimage(marginals, proc, word):
    steps = []
    for w in word:
        point = proc.symbols[w]
        steps.append(tuple(
            ((m.atom_intervals()[m.atom_index(point[k])].lo, m.atom_intervals()[m.atom_index(point[k])].hi),)
            for k, m in enumerate(marginals)
        ))
    return IntervalCylinder(0, tuple(steps))


@pytest.mark.parametrize("name", ["default_proc", "collapsing_proc", "iid_proc"])
def test_restriction_identity(name, request):
    proc = request.getfixturevalue(name)
    marginals = observed_marginals(proc)
    for length in (1, 2, 3):
        for word in itertools.product(range(len(proc.symbols)), repeat=length):
            factors = [np.nonzero(proc.symbol_of_state == w)[0] for w in word]
            expected = fdd_probability(proc, StateCylinder(0, factors))
            assert cylinder_measure(marginals, proc, _symbol_preimage(marginals, proc, word)) == pytest.approx(
                expected, abs=1e-12)


def test_cylinder_measure_of_subintervals(default_proc, default_marginals):
    q0 = default_proc.stationary[0]
    D = IntervalCylinder.single(1, 0, ((0.1, 0.3),))
    assert cylinder_measure(default_marginals, default_proc, D) == pytest.approx(0.2)
    two = IntervalCylinder(0, ((((0.0, 0.5),),), (((0.7, 0.9),),)))
    expected = q0 * (0.5 / q0) * 0.1 * (0.2 / (1 - q0))
    assert cylinder_measure(default_marginals, default_proc, two) == pytest.approx(expected)


def test_cylinder_measure_additivity_and_shift(default_proc, default_marginals):
    whole = IntervalCylinder(0, ((((0.1, 0.5),),), (((0.7, 0.95),),)))
    left = IntervalCylinder(0, ((((0.1, 0.3),),), (((0.7, 0.95),),)))
    right = IntervalCylinder(0, ((((0.3, 0.5),),), (((0.7, 0.95),),)))
    mu = lambda D: cylinder_measure(default_marginals, default_proc, D)
    assert mu(whole) == pytest.approx(mu(left) + mu(right), abs=1e-15)
    assert mu(whole.shift(4)) == pytest.approx(mu(whole), abs=1e-15)
    assert mu(IntervalCylinder.full(1, 3)) == pytest.approx(1.0)


def test_straddling_factor_is_rejected(default_proc, default_marginals):
    with pytest.raises(CylinderError):
        cylinder_measure(default_marginals, default_proc, IntervalCylinder.single(1, 0, ((0.5, 0.8),)))
    with pytest.raises(CylinderError):
        IntervalCylinder.single(1, 0, ((0.2, 0.5), (0.4, 0.6)))


def test_cylinder_measure_mixes_canonical_measures(default_proc, default_marginals):
    """mu(D) = sum over X-windows of nu(window) * mu_window(D)"""
    D = IntervalCylinder(0, ((((0.1, 0.3),),), (((0.7, 0.9),),)))
    total = 0.0
    for states in itertools.product(range(default_proc.n_states), repeat=2):
        nu = fdd_probability(default_proc, StateCylinder(0, [{s} for s in states]))
        total += nu * canonical_measure(default_marginals, default_proc.observe[list(states)], D)
    assert total == pytest.approx(cylinder_measure(default_marginals, default_proc, D), abs=1e-15)


def test_canonical_measure_on_continuous_coordinates():
    uniform = [MixedMarginal.uniform()]
    D = IntervalCylinder.single(1, 0, ((0.2, 0.4),))
    assert canonical_measure(uniform, [[0.3]], D) == 1.0
    assert canonical_measure(uniform, [[0.5]], D) == 0.0


def test_saturation_recovers_projected_probability(default_proc, default_marginals):
    D = IntervalCylinder(0, ((((0.1, 0.3),),), (((0.7, 0.9),),)))
    S = saturate(default_marginals, D)
    q0 = default_proc.stationary[0]
    assert S.factors[0][0] == ((0.0, pytest.approx(q0)),)
    expected = fdd_probability(default_proc, StateCylinder(0, [{0}, {1}]))
    assert cylinder_measure(default_marginals, default_proc, S) == pytest.approx(expected, abs=1e-14)


def test_refined_partition(default_proc, default_marginals):
    q0 = default_proc.stationary[0]
    partition = refined_partition(default_marginals, 2)
    np.testing.assert_allclose(partition.cuts[0], [q0 / 2, q0, q0 + (1 - q0) / 2])
    assert partition.n_cells == 4
    assert len(partition_cells(partition)) == 4
    np.testing.assert_array_equal(partition.locate(np.array([[0.1], [0.5], [0.7], [0.99]])), [0, 1, 2, 3])
    with pytest.raises(CylinderError):
        refined_partition(default_marginals, 0)
    with pytest.raises(CylinderError):
        Partition(((0.5, 1.2),))


@pytest.mark.parametrize("r", [1, 2, 3])
def test_cell_emissions_are_conditional_laws(collapsing_proc, r):
    marginals = observed_marginals(collapsing_proc)
    partition = refined_partition(marginals, r)
    E = cell_emissions(marginals, collapsing_proc, partition)
    assert E.shape == (partition.n_cells, collapsing_proc.n_states)
    np.testing.assert_allclose(E.sum(axis=0), 1.0, atol=1e-14)
    # collapsed states emit identically
    np.testing.assert_array_equal(E[:, 0], E[:, 1])


def test_monte_carlo_cylinder_estimate(default_proc, default_marginals):
    D = IntervalCylinder(0, ((((0.1, 0.5),),), (((0.7, 0.95),),)))
    exact = cylinder_measure(default_marginals, default_proc, D)
    estimate, stderr = estimate_cylinder_measure(default_marginals, default_proc, D,
                                                 np.random.default_rng(8), 200_000)
    assert abs(estimate - exact) < 5 * stderr
