import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from llr_lab.errors import ParameterError
from llr_lab.rng import (SeedSpec, Stream, derive_stream, exponential_from_uniform,
                         sample_exponential, sample_standard_normal, sample_unit_uniform)

GOLDEN = json.loads((Path(__file__).parent / "golden" / "streams.json").read_text())
N = 10**6


def test_same_seed_same_stream(seed):
    a, b = derive_stream(seed, 5), derive_stream(seed, 5)
    assert np.array_equal(a.uniform(100), b.uniform(100))


def test_path_composition(seed):
    a = derive_stream(seed.child(0), 3)
    b = Stream(SeedSpec(seed.root_seed, (0, 3)))
    assert np.array_equal(a.uniform(50), b.uniform(50))


def test_sibling_streams_uncorrelated(seed):
    u0 = derive_stream(seed, 0).uniform(N)
    u1 = derive_stream(seed, 1).uniform(N)
    assert abs(np.corrcoef(u0, u1)[0, 1]) < 4 / math.sqrt(N)


def test_distinct_paths_differ(seed):
    assert derive_stream(seed, 0).uniform() != derive_stream(seed.child(0), 0).uniform()


@given(st.integers(0, 2**64 - 1), st.lists(st.integers(0, 2**64 - 1), max_size=4))
def test_derivation_is_pure(root, path):
    s = SeedSpec(root, tuple(path))
    assert Stream(s).uniform() == Stream(SeedSpec(root, tuple(path))).uniform()


@pytest.mark.parametrize("bad", [-1, 2**64, 1.5, True, "3"])
def test_seed_validation(bad):
    with pytest.raises(ParameterError):
        SeedSpec(bad)
    with pytest.raises(ParameterError):
        SeedSpec(0).child(bad)


def test_uniform_moments_and_ks(seed):
    u = derive_stream(seed, 10).uniform(N)
    assert abs(u.mean() - 0.5) < 4 * (1 / math.sqrt(12)) / 1e3
    assert stats.kstest(u, "uniform").statistic < 0.002
    assert u.min() >= 0.0 and u.max() < 1.0


def test_scalar_samplers_advance_counter(seed):
    s = derive_stream(seed, 11)
    v = [sample_unit_uniform(s), sample_exponential(s, 2.0), sample_standard_normal(s)]
    assert s.draws == 3
    assert 0 <= v[0] < 1 and v[1] > 0


def test_exponential_mean(seed):
    x = derive_stream(seed, 12).exponential(1.0, N)
    assert abs(x.mean() - 1.0) < 4e-3


def test_exponential_inverse_cdf():
    assert exponential_from_uniform(1 - math.exp(-2), 1.0) == pytest.approx(2.0, rel=1e-15)
    assert exponential_from_uniform(1 - math.exp(-2), 4.0) == pytest.approx(0.5, rel=1e-15)


@pytest.mark.parametrize("rate", [0, -1.0, math.inf, math.nan])
def test_exponential_rate_errors(seed, rate):
    with pytest.raises(ParameterError):
        sample_exponential(derive_stream(seed, 0), rate)


def test_normal_moments_and_ks(seed):
    z = derive_stream(seed, 13).standard_normal(N)
    assert abs(z.mean()) < 4e-3
    assert abs(z.var() - 1) < 0.01
    assert stats.kstest(z, "norm").statistic < 0.002


def test_golden_values():
    root = SeedSpec(GOLDEN["root_seed"])
    assert derive_stream(root, 0).uniform(5).tolist() == GOLDEN["uniform_path_0"]
    assert derive_stream(root, 1).exponential(2.0, 5).tolist() == GOLDEN["exponential_rate_2_path_1"]
    assert derive_stream(root, 2).standard_normal(5).tolist() == GOLDEN["standard_normal_path_2"]
    assert derive_stream(root.child(7), 3).uniform(3).tolist() == GOLDEN["uniform_path_7_3"]
