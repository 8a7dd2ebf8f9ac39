import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from llr_lab.errors import ParameterError, RunError
from llr_lab.montecarlo import (EstimateRow, InfinityModel, MomentAccumulator, PoissonModel,
                                exact_sum, ks_pvalue, ks_statistic, model_seed,
                                run_replications, sweep)
from llr_lab.poisson import TruncationPolicy

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@given(st.lists(finite, max_size=60))
def test_exact_sum_is_exact(xs):
    assert Fraction(exact_sum(xs), 2**1127) == sum((Fraction(x) for x in xs), Fraction(0))


def test_exact_sum_rejects_nonfinite():
    with pytest.raises(ParameterError):
        exact_sum([1.0, math.inf])


@given(st.lists(st.tuples(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6)), min_size=1, max_size=50),
       st.data())
def test_merge_equals_concatenation(pairs, data):
    z, x = map(np.array, zip(*pairs))
    cut = data.draw(st.integers(0, len(pairs)))
    whole = MomentAccumulator.from_arrays(z, x)
    parts = MomentAccumulator.from_arrays(z[:cut], x[:cut]).merge(
        MomentAccumulator.from_arrays(z[cut:], x[cut:]))
    assert parts == whole
    one_by_one = MomentAccumulator()
    for a, b in pairs:
        one_by_one.update(a, b)
    assert one_by_one == whole


def test_accumulator_statistics(seed):
    rng = np.random.default_rng(5)
    z, x = rng.standard_normal(1000), rng.exponential(size=1000)
    acc = MomentAccumulator.from_arrays(z, x)
    z2, x2 = z**2, x**2
    assert acc.n == 1000
    assert acc.mean_z2 == pytest.approx(z2.mean(), rel=1e-13)
    assert acc.mean_x2 == pytest.approx(x2.mean(), rel=1e-13)
    assert acc.m2_z2 == pytest.approx(((z2 - z2.mean()) ** 2).sum(), rel=1e-12)
    assert acc.m2_x2 == pytest.approx(((x2 - x2.mean()) ** 2).sum(), rel=1e-12)
    assert acc.cross == pytest.approx(((z2 - z2.mean()) * (x2 - x2.mean())).sum(), rel=1e-12)
    assert math.isnan(MomentAccumulator().mean_z2)


def test_ks_hand_values():
    uniform = lambda t: np.clip(t, 0, 1)
    assert ks_statistic([0.5], uniform) == 0.5
    assert ks_statistic([0.25, 0.75], uniform) == 0.25
    with pytest.raises(ParameterError):
        ks_statistic([], uniform)


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=40))
def test_ks_matches_scipy(xs):
    d = ks_statistic(xs, stats.norm.cdf)
    ref = stats.kstest(xs, "norm", method="exact")
    assert d == pytest.approx(ref.statistic, abs=1e-12)
    assert ks_pvalue(d, len(xs)) == pytest.approx(ref.pvalue, rel=1e-6, abs=1e-12)


def test_infinity_model_calibration(seed):
    r = run_replications(InfinityModel(), 10**6, seed)
    assert abs(r.B_hat - 1) <= 4 * r.se_B
    assert abs(r.M_hat - 2) <= 4 * r.se_M
    assert abs(r.E_hat - 0.5) <= 4 * r.se_E
    assert r.rho == math.inf and r.rho2B is None and r.rho2M is None


def test_large_rho_efficiency(seed):
    m = PoissonModel(10.0)
    r = run_replications(m, 10**5, model_seed(seed, m))
    assert abs(r.E_hat - 0.5) <= 0.05


def test_row_invariants(seed):
    r = run_replications(PoissonModel(1.5), 3000, seed, chunk_size=700)
    assert r.E_hat == r.B_hat / r.M_hat
    assert min(r.se_B, r.se_M, r.se_E) >= 0
    assert r.rho2B == 1.5**2 * r.B_hat and r.accepted and r.N == 3000


def test_worker_count_does_not_matter(seed):
    rows = {run_replications(PoissonModel(0.8), 5000, seed, chunk_size=512, workers=w)
            .to_json_bytes() for w in (1, 2, 4, 8)}
    assert len(rows) == 1


def test_chunk_layout_changes_streams_not_validity(seed):
    a = run_replications(InfinityModel(), 4000, seed, chunk_size=1000)
    b = run_replications(InfinityModel(), 4000, seed, chunk_size=1000)
    assert a == b


def test_replication_errors(seed):
    with pytest.raises(ParameterError):
        run_replications(InfinityModel(), 99, seed)
    with pytest.raises(ParameterError):
        run_replications(InfinityModel(), 1000, seed, chunk_size=0)
    with pytest.raises(RunError):
        run_replications(PoissonModel(0.1, TruncationPolicy(max_events=5)), 100, seed)


def test_rejection_threshold():
    row = EstimateRow(1.0, 10**5, 1, 0, 1, 0, 1, 0, 1, 1, truncated_count=10)
    assert row.accepted
    assert not EstimateRow(1.0, 10**5, 1, 0, 1, 0, 1, 0, 1, 1, truncated_count=11).accepted


def test_sweep_edge_cases(seed):
    assert sweep([], 1000, seed) == []
    with pytest.raises(ParameterError):
        sweep([1.0, 1.0], 1000, seed)
    with pytest.raises(ParameterError):
        sweep([2.0, 1.0], 1000, seed)


def test_sweep_rows_independent_of_grid(seed):
    full = sweep([0.7, 1.5, 3.0], 2000, seed)
    alone = sweep([1.5], 2000, seed)
    assert full[1] == alone[0]
    with_limits = sweep([1.5, 3.0], 2000, seed, include_limits=True)
    assert [r.rho for r in with_limits] == [0.0, 1.5, 3.0, math.inf]
    assert with_limits[1] == full[1] and with_limits[2] == full[2]


@pytest.mark.slow
def test_sweep_trends(seed):
    rows = sweep([0.1, 0.5, 2.0, 10.0], 10**5, seed)
    b0 = 16 * 1.2020569031595942
    for lo, hi in zip(rows, rows[1:]):
        slack = 4 * math.hypot(lo.rho**2 * lo.se_B, hi.rho**2 * hi.se_B)
        # rho^2 B approaches B0 as rho decreases, B approaches 1 as rho grows
        assert abs(lo.rho2B - b0) <= abs(hi.rho2B - b0) + slack
        assert abs(hi.B_hat - 1) <= abs(lo.B_hat - 1) + 4 * math.hypot(lo.se_B, hi.se_B)
        assert hi.E_hat <= lo.E_hat + 4 * math.hypot(lo.se_E, hi.se_E)
