import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from smcresample.rng import Rng, next_uniform, rng_new, uniform_at

import oracles


def test_reference_vectors_seed_zero():
    # published SplitMix64 outputs for seed 0
    raw = oracles.splitmix64_stream(0, 3)
    assert raw == [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]
    assert Rng(0).uniforms(3).tolist() == oracles.uniforms(0, 3)


@pytest.mark.parametrize("seed", [0, 1, 7, 2**63 + 5, 2**64 - 1])
def test_stream_matches_stateful_splitmix(seed):
    assert Rng(seed).uniforms(50).tolist() == oracles.uniforms(seed, 50)


def test_seed_zero_first_draw_in_range():
    u = next_uniform(rng_new(0))
    assert 0.0 < u <= 1.0


def test_same_seed_same_stream():
    a = rng_new(42)
    b = rng_new(42)
    assert [a.next_uniform() for _ in range(1000)] == [b.next_uniform() for _ in range(1000)]


def test_different_seeds_differ_early():
    a, b = Rng(1).uniforms(10), Rng(2).uniforms(10)
    assert np.any(a != b)


def test_batch_and_scalar_draws_agree():
    r1, r2 = Rng(9), Rng(9)
    batch = np.concatenate([r1.uniforms(3), r1.uniforms(0), r1.uniforms(17)])
    single = [r2.next_uniform() for _ in range(20)]
    assert batch.tolist() == single
    assert r1 == r2


def test_kernel_draw_matches_python():
    r = Rng(123)
    expected = r.uniforms(5)
    got = [uniform_at(np.uint64(123), np.uint64(k)) for k in range(5)]
    assert got == expected.tolist()


def test_moments_of_a_million_draws():
    u = Rng(2024).uniforms(1_000_000)
    assert u.min() > 0.0 and u.max() <= 1.0
    assert abs(u.mean() - 0.5) < 0.002
    assert abs(u.var() - 1.0 / 12.0) < 0.002


def test_kolmogorov_smirnov_uniformity():
    u = Rng(31337).uniforms(100_000)
    assert stats.kstest(u, "uniform").pvalue > 0.01


def test_spawn_is_deterministic_and_leaves_parent_alone():
    parent = Rng(5)
    c1, c2 = parent.spawn(0), parent.spawn(0)
    assert c1 == c2 and parent.counter == 0
    assert c1.uniforms(4).tolist() == c2.uniforms(4).tolist()
    assert parent.spawn(1).key != parent.spawn(0).key


def test_copy_replays_remaining_stream():
    r = Rng(77)
    r.uniforms(10)
    c = r.copy()
    assert r.uniforms(5).tolist() == c.uniforms(5).tolist()


def test_normals_have_unit_moments():
    z = Rng(3).normals(200_001)
    assert z.shape == (200_001,)
    assert abs(z.mean()) < 0.01
    assert abs(z.var() - 1.0) < 0.01


@pytest.mark.parametrize("bad", [-1, 2**64, 1.5, "3", True])
def test_rejects_bad_seeds(bad):
    with pytest.raises((ValueError, TypeError)):
        Rng(bad)


@settings(max_examples=200)
@given(st.integers(min_value=0, max_value=2**64 - 1))
def test_draws_stay_in_half_open_interval(seed):
    u = Rng(seed).uniforms(64)
    assert np.all(u > 0.0) and np.all(u <= 1.0)
