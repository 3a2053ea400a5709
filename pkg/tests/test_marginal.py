"""Tests for mixed marginal distribution functions"""

import numpy as np
import pytest

from models.errors import MarginalError
from models.marginal import (
    MixedMarginal, AtomIndex, ContinuityPoint, MarginalProfile, random_marginal
)

MIXED_DOC = {"atoms": [{"a": 1.0, "p": 0.5}], "continuous": [[0.0, 0.0], [1.0, 0.5]]}


@pytest.fixture
def mixed():
    return MixedMarginal.from_dict(MIXED_DOC)


def test_cdf_examples(mixed):
    """cdf of point mass, Bernoulli and the atom plus uniform mixture"""
    seven = MixedMarginal.point_mass(7.0)
    assert seven.cdf(6.9) == 0.0
    assert seven.cdf(7.0) == 1.0
    assert mixed.cdf(0.5) == pytest.approx(0.25)
    bern = MixedMarginal.bernoulli(0.3)
    assert bern.cdf(0.0) == pytest.approx(0.7)
    assert bern.cdf(1.0) == 1.0
    assert bern.cdf(-0.1) == 0.0


def test_cdf_left():
    assert MixedMarginal.point_mass(7.0).cdf_left(7.0) == 0.0
    assert MixedMarginal.bernoulli(0.3).cdf_left(1.0) == pytest.approx(0.7)
    uniform = MixedMarginal.uniform()
    assert uniform.cdf_left(0.4) == pytest.approx(uniform.cdf(0.4))
    assert uniform.cdf(0.4) == pytest.approx(0.4)


def test_quantile_examples(mixed):
    seven = MixedMarginal.point_mass(7.0)
    np.testing.assert_array_equal(seven.quantile(np.array([0.01, 0.5, 0.99])), 7.0)
    assert mixed.quantile(0.25) == pytest.approx(0.5)
    assert mixed.quantile(0.75) == 1.0
    bern = MixedMarginal.bernoulli(0.3)
    assert bern.quantile(0.7) == 0.0
    assert bern.quantile(0.70001) == 1.0


@pytest.mark.parametrize("s", [0.0, 1.0, -0.2, 1.5])
def test_quantile_rejects_levels_outside_open_interval(s):
    with pytest.raises(MarginalError):
        MixedMarginal.uniform().quantile(s)


def test_atom_intervals():
    intervals = MixedMarginal.bernoulli(0.3).atom_intervals()
    assert [(iv.lo, iv.hi) for iv in intervals] == [(0.0, pytest.approx(0.7)), (pytest.approx(0.7), 1.0)]
    assert MixedMarginal.uniform().atom_intervals() == []
    (only,) = MixedMarginal.point_mass(7.0).atom_intervals()
    assert (only.lo, only.hi) == (0.0, 1.0)
    assert only.contains(0.5) and not only.contains(0.0)


def test_classify(mixed):
    assert MixedMarginal.bernoulli(0.3).classify(0.5) == AtomIndex(0)
    assert MixedMarginal.uniform().classify(0.5) == ContinuityPoint()
    assert mixed.classify(0.9) == AtomIndex(0)


def test_validation_errors():
    with pytest.raises(MarginalError):
        MixedMarginal(atoms=((0.0, 0.5), (1.0, 0.4)))
    with pytest.raises(MarginalError):
        MixedMarginal(atoms=((1.0, 0.5), (0.0, 0.5)))
    with pytest.raises(MarginalError):
        MixedMarginal.from_dict({"atoms": [], "density": []})


def test_discrete_aggregates_duplicates():
    m = MixedMarginal.discrete([1.0, 0.0, 1.0, 2.0], [0.25, 0.5, 0.25, 0.0])
    np.testing.assert_allclose(m.atom_locations, [0.0, 1.0])
    np.testing.assert_allclose(m.atom_masses, [0.5, 0.5])
    assert m.is_discrete


def test_dict_roundtrip(mixed):
    assert MixedMarginal.from_dict(mixed.to_dict()).to_dict() == mixed.to_dict()


def test_flat_spots_are_not_support():
    m = MixedMarginal.from_dict({"continuous": [[0.0, 0.0], [1.0, 0.5], [2.0, 0.5], [3.0, 1.0]]})
    assert not m.is_support(1.5)
    assert m.is_support(1.0)
    assert m.is_support(2.5)
    assert not m.is_support(-1.0)
    assert m.quantile(0.5) == pytest.approx(1.0)


@pytest.mark.parametrize("kind", ["discrete", "continuous", "mixed"])
def test_random_marginal_profiles(kind):
    rng = np.random.default_rng(7)
    for _ in range(50):
        m = random_marginal(rng, MarginalProfile(kind=kind))
        total = m.atom_masses.sum() + m.continuous_mass
        assert total == pytest.approx(1.0, abs=1e-12)
        if kind == "continuous":
            assert len(m.atoms) == 0
        if kind == "discrete":
            assert m.is_discrete


@pytest.mark.parametrize("kind", ["discrete", "continuous", "mixed"])
def test_galois_property(kind):
    """quantile(s) <= t  iff  s <= cdf(t)"""
    rng = np.random.default_rng(11)
    for _ in range(20):
        m = random_marginal(rng, MarginalProfile(kind=kind))
        s = rng.uniform(0.0, 1.0, 500)
        s = s[(s > 0) & (s < 1)]
        t = rng.uniform(-12.0, 12.0, len(s))
        np.testing.assert_array_equal(m.quantile(s) <= t, s <= m.cdf(t))


def test_quantile_is_monotone_and_constant_on_atom_intervals():
    rng = np.random.default_rng(3)
    for _ in range(20):
        m = random_marginal(rng, MarginalProfile(kind="mixed"))
        s = np.sort(rng.uniform(1e-9, 1 - 1e-9, 1000))
        assert np.all(np.diff(m.quantile(s)) >= 0)
        for iv in m.atom_intervals():
            inside = rng.uniform(iv.lo, iv.hi, 50)
            inside = inside[(inside > iv.lo) & (inside < iv.hi)]
            np.testing.assert_array_equal(m.quantile(inside), m.atom_locations[iv.atom_index])
            assert all(m.classify(v) == AtomIndex(iv.atom_index) for v in inside[:5])
