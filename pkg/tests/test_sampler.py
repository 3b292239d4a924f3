import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orbital import rng
from orbital.errors import DegenerateSpec, EmptyBatch
from orbital.ifs import IFS, Affine1D, Affine2D, CondensationSystem
from orbital.measure import DiscreteMeasure, canonicalize, ks_distance
from orbital.sampler import (
    Atoms,
    PointMass,
    SampleBatch,
    UniformBox,
    UniformInterval,
    block_bootstrap_ks,
    chaos_game_restart,
    empirical_measure,
    geometric_lengths,
    sample_mu0,
    sample_orbital,
)
from orbital.series import enumerate_series

from conftest import dirac, exercise, halves


def test_sample_mu0_examples():
    g = rng.stream(1)
    assert sample_mu0(PointMass((0.0,)), g).tolist() == [0.0]
    assert sample_mu0(Atoms(dirac(0.0)), g).tolist() == [0.0]
    x = UniformInterval(0, 0.5).sample(rng.stream(7), 10**6)[:, 0]
    sigma = (0.5 / math.sqrt(12)) / 1e3
    assert abs(x.mean() - 0.25) <= 3 * sigma
    assert x.min() >= 0 and x.max() < 0.5


def test_degenerate_specs():
    with pytest.raises(DegenerateSpec):
        UniformInterval(1.0, 1.0)
    with pytest.raises(DegenerateSpec):
        UniformBox((0.0, 0.0), (1.0, 0.0))


def test_atoms_sampler_frequencies():
    spec = Atoms(DiscreteMeasure([[0.0], [1.0], [2.0]], [0.2, 0.3, 0.5]))
    x = spec.sample(rng.stream(3), 200_000)[:, 0]
    for v, w in [(0.0, 0.2), (1.0, 0.3), (2.0, 0.5)]:
        assert abs(np.mean(x == v) - w) <= 4 * math.sqrt(w * (1 - w) / x.size)


def test_uniform_box_in_range():
    x = UniformBox((0.0, 1.0), (1.0, 3.0)).sample(rng.stream(0), 1000)
    assert x.shape == (1000, 2)
    assert np.all(x[:, 0] < 1) and np.all(x[:, 1] >= 1)


def test_geometric_lengths():
    assert geometric_lengths(np.array([0.0, 0.49, 0.5, 0.74, 0.75]), 0.5).tolist() == [0, 0, 1, 1, 2]
    assert geometric_lengths(np.array([0.3]), 0.0).tolist() == [0]


def test_q_zero_gives_mu0_draws():
    sys = exercise(p=1.0)
    for batch in (
        sample_orbital(sys, PointMass((0.0,)), 1, 100),
        chaos_game_restart(sys, PointMass((0.0,)), 1, 100),
    ):
        assert np.all(batch.points == 0)


def test_exact_sampler_support_and_zero_frequency():
    count = 200_000
    batch = sample_orbital(exercise(), PointMass((0.0,)), 11, count)
    x = batch.points[:, 0]
    n = batch.lengths
    np.testing.assert_array_equal(x, 1 - 2.0 ** -n.astype(float))
    assert abs(np.mean(x == 0) - 0.5) <= 3 * math.sqrt(0.25 / count)


def test_batch_metadata_and_determinism():
    a = sample_orbital(halves(), PointMass((0.0,)), 5, 1000)
    b = sample_orbital(halves(), PointMass((0.0,)), 5, 1000)
    assert a.count == 1000 and len(a.points) == 1000
    assert a.generator_id == rng.GENERATOR_ID
    np.testing.assert_array_equal(a.points, b.points)
    c = sample_orbital(halves(), PointMass((0.0,)), 6, 1000)
    assert not np.array_equal(a.points, c.points)


@pytest.mark.parametrize("method", ["exact", "chaos"])
def test_worker_count_invariance(method):
    fn = sample_orbital if method == "exact" else chaos_game_restart
    count = 3 * rng.CHUNK_SIZE + 17
    a = fn(halves(), PointMass((0.0,)), 9, count, workers=1)
    b = fn(halves(), PointMass((0.0,)), 9, count, workers=4)
    assert a.points.tobytes() == b.points.tobytes()


def test_chaos_stride_and_epochs():
    batch = chaos_game_restart(halves(), PointMass((0.0,)), 2, 5000, stride=3)
    assert batch.points.shape == (5000, 1)
    assert np.all(np.diff(batch.epochs) >= 0)


def test_chaos_matches_series_in_2d():
    A = ((0.5, 0.0), (0.0, 0.5))
    maps = (Affine2D(A, (0.0, 0.0)), Affine2D(A, (0.5, 0.0)), Affine2D(A, (0.25, 0.5)))
    sys = CondensationSystem(IFS(maps, np.full(3, 1 / 3)), dirac(0.5, 0.5), 0.25)
    chaos = chaos_game_restart(sys, PointMass((0.5, 0.5)), 4, 100_000)
    exact = sample_orbital(sys, PointMass((0.5, 0.5)), 4, 100_000)
    for k in range(2):
        assert abs(chaos.points[:, k].mean() - exact.points[:, k].mean()) < 0.01


def test_empirical_measure_examples():
    m = empirical_measure(SampleBatch(np.array([[0.3]]), 0, 1, "x", "exact"))
    assert m.atoms.tolist() == [[0.3]] and m.weights.tolist() == [1.0]
    m = canonicalize(empirical_measure(SampleBatch(np.array([[0.0], [0.0], [1.0], [1.0]]), 0, 4, "x", "exact")))
    assert m.weights.tolist() == [0.5, 0.5]
    with pytest.raises(EmptyBatch):
        empirical_measure(SampleBatch(np.zeros((0, 1)), 0, 0, "x", "exact"))


def test_length_law_p03():
    sys = exercise(p=0.3)
    count = 10**6
    n = sample_orbital(sys, PointMass((0.0,)), 21, count).lengths
    for k in range(11):
        prob = 0.3 * 0.7**k
        se = math.sqrt(prob * (1 - prob) / count)
        assert abs(np.mean(n == k) - prob) <= 4 * se


def test_block_bootstrap_shapes():
    exact = sample_orbital(exercise(), PointMass((0.0,)), 1, 20_000)
    chaos = chaos_game_restart(exercise(), PointMass((0.0,)), 2, 20_000)
    ks, tol = block_bootstrap_ks(exact, chaos, reps=50)
    assert 0 <= ks <= 1 and 0 < tol < 0.2
    with pytest.raises(ValueError):
        block_bootstrap_ks(exact, exact)


dyadic = st.integers(-4, 4).map(lambda k: k / 4)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(dyadic, dyadic), min_size=1, max_size=3), dyadic, st.integers(0, 2**32))
def test_exact_samples_lie_on_series_support(coefs, x0, seed):
    maps = tuple(Affine1D(a, b) for a, b in coefs)
    sys = CondensationSystem(IFS(maps, np.full(len(maps), 1 / len(maps))), dirac(x0), 0.5)
    batch = sample_orbital(sys, PointMass((x0,)), seed, 500)
    cap = 8
    keep = batch.lengths <= cap
    support = set(enumerate_series(sys, cap).measure.atoms[:, 0].tolist())
    assert set(batch.points[keep, 0].tolist()) <= support
