import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import optimize, stats

from mdl.errors import InputError, ResourceError
from mdl.mc_estimator import (brute_force_max_tail, clopper_pearson, empirical_tail,
                              enumeration_size, estimate_field_max_tail,
                              estimate_field_max_tails, estimate_max_tail, estimate_max_tails,
                              run_blocks)
from mdl.process_zoo import (ConstantSigma, FieldModel, IidParetoSym, IidSign, TwoStateSigma,
                             VolModulated)
from mdl.rng import block_sizes, default_workers, stream


def cp_oracle(k, n, confidence):
    """Interval endpoints solved from the binomial cdf directly."""
    a = (1 - confidence) / 2
    lo = 0.0 if k == 0 else optimize.brentq(lambda p: stats.binom.sf(k - 1, n, p) - a, 0, 1,
                                            xtol=1e-15)
    hi = 1.0 if k == n else optimize.brentq(lambda p: stats.binom.cdf(k, n, p) - a, 0, 1,
                                            xtol=1e-15)
    return lo, hi


class TestClopperPearson:
    @pytest.mark.parametrize("k,n", [(0, 10), (10, 10), (3, 10), (500, 1000), (1, 100_000)])
    @pytest.mark.parametrize("confidence", [0.9, 0.99])
    def test_against_binomial_oracle(self, k, n, confidence):
        np.testing.assert_allclose(clopper_pearson(k, n, confidence),
                                   cp_oracle(k, n, confidence), atol=1e-9)

    @given(st.integers(1, 500), st.data())
    def test_contains_point(self, n, data):
        k = data.draw(st.integers(0, n))
        lo, hi = clopper_pearson(k, n)
        assert 0 <= lo <= k / n <= hi <= 1

    @pytest.mark.parametrize("args", [(1, 0), (5, 4), (-1, 4)])
    def test_rejects(self, args):
        with pytest.raises(InputError):
            clopper_pearson(*args)


class TestPathEstimates:
    def test_sign_two_steps(self):
        est = estimate_max_tail(IidSign(), 2, 1.0, 1_000_000, seed=11, confidence=0.95)
        assert est.ci_low <= 0.5 <= est.ci_high
        assert est.ci_high - est.ci_low < 0.002

    def test_width_at_default_confidence(self):
        # 99% intervals are wider by the ratio of normal quantiles
        est = estimate_max_tail(IidSign(), 2, 1.0, 1_000_000, seed=11)
        assert est.ci_high - est.ci_low == pytest.approx(2 * 2.5758 * 0.0005, rel=0.01)

    def test_threshold_above_support(self):
        est = estimate_max_tail(IidSign(), 4, 4.0, 1000, seed=1)
        assert est.exact and est.point == 0 and est.ci_high == 0

    def test_zero_sigma(self):
        est = estimate_max_tail(VolModulated(sigma=ConstantSigma(0.0)), 16, 1e-9, 1000, 1)
        assert est.point == 0 and est.ci_high == 0

    @pytest.mark.parametrize("workers", [2, 8])
    def test_worker_invariance(self, workers):
        m = IidParetoSym(1.8)
        base = estimate_max_tails(m, [8, 64], [3.0, 10.0], 300_000, 5, workers=1)
        other = estimate_max_tails(m, [8, 64], [3.0, 10.0], 300_000, 5, workers=workers)
        assert [e.exceedances for e in base] == [e.exceedances for e in other]

    def test_env_workers(self, monkeypatch):
        monkeypatch.setenv("MDL_WORKERS", "3")
        assert default_workers() == 3
        monkeypatch.setenv("MDL_WORKERS", "zero")
        with pytest.raises(InputError):
            default_workers()

    def test_monotone_in_threshold(self):
        thr = [0.5, 1.0, 2.0, 4.0, 8.0]
        ests = estimate_max_tails(IidParetoSym(1.8), [16] * 5, thr, 20_000, 3)
        counts = [e.exceedances for e in ests]
        assert counts == sorted(counts, reverse=True)

    def test_monotone_in_length(self):
        ests = estimate_max_tails(IidParetoSym(1.8), [2, 4, 8], [3.0] * 3, 20_000, 3)
        counts = [e.exceedances for e in ests]
        assert counts == sorted(counts)

    @pytest.mark.parametrize("model,n,thr", [
        (IidSign(), 6, 2.0), (IidSign(), 9, 3.0),
        (VolModulated(IidSign(), TwoStateSigma(0.5, 1.5)), 5, 2.2),
    ])
    def test_matches_enumeration(self, model, n, thr):
        exact = float(brute_force_max_tail(model, n, thr))
        covered = 0
        for seed in range(5):
            est = estimate_max_tail(model, n, thr, 100_000, seed=seed)
            covered += est.ci_low <= exact <= est.ci_high
        # a 99% interval misses twice in five runs with probability about 1e-3
        assert covered >= 4

    def test_rejects_bad_input(self):
        with pytest.raises(InputError):
            estimate_max_tails(IidSign(), [4], [1.0, 2.0], 10, 0)
        with pytest.raises(InputError):
            estimate_max_tail(IidSign(), 4, 0.0, 10, 0)
        with pytest.raises(InputError):
            estimate_max_tail(IidSign(), 4, 1.0, 10, -1)


class TestFieldEstimates:
    def test_single_site(self):
        est = estimate_field_max_tail(FieldModel.rademacher(2), (1, 1), 0.5, 1000, 0)
        assert est.point == 1.0

    def test_two_by_two(self):
        est = estimate_field_max_tail(FieldModel.rademacher(2), (2, 2), 3.5, 200_000, 4)
        assert est.ci_low <= 0.25 <= est.ci_high

    def test_above_support(self):
        est = estimate_field_max_tail(FieldModel.rademacher(2), (3, 3), 9.0, 100, 0)
        assert est.exact and est.point == 0

    def test_matches_enumeration_three_dims(self):
        fm = FieldModel.rademacher(3)
        exact = float(brute_force_max_tail(fm, (2, 2, 3), 5.0))
        est = estimate_field_max_tail(fm, (2, 2, 3), 5.0, 200_000, 6)
        assert est.ci_low <= exact <= est.ci_high

    def test_site_budget(self):
        with pytest.raises(ResourceError):
            estimate_field_max_tails(FieldModel.rademacher(2), (1 << 12, 1 << 11), [1.0], 1, 0)


class TestBruteForce:
    def test_examples(self):
        assert brute_force_max_tail(IidSign(), 2, 1.0) == Fraction(1, 2)
        assert brute_force_max_tail(FieldModel.rademacher(2), (1, 1), 0.5) == 1
        assert brute_force_max_tail(FieldModel.rademacher(2), (2, 2), 3.5) == Fraction(1, 4)

    def test_reflection_identity(self):
        # P{max |S_k| >= 3} for 7 signs, counted path by path
        signs = np.array(np.meshgrid(*[[-1, 1]] * 7)).reshape(7, -1).T
        direct = np.mean(np.abs(np.cumsum(signs, axis=1)).max(axis=1) > 2.5)
        assert float(brute_force_max_tail(IidSign(), 7, 2.5)) == direct

    def test_sizes(self):
        assert enumeration_size(IidSign(), 5) == 5
        assert enumeration_size(FieldModel.rademacher(3), (2, 3, 4)) == 9
        assert enumeration_size(VolModulated(IidSign(), TwoStateSigma()), 4) == 5
        with pytest.raises(InputError):
            enumeration_size(IidParetoSym(), 3)

    def test_limit(self):
        with pytest.raises(ResourceError):
            brute_force_max_tail(IidSign(), 40, 1.0)


class TestBlocks:
    def test_block_sizes_cover_trials(self):
        sizes = block_sizes(100_001, 64)
        assert sum(sizes) == 100_001 and len(set(sizes[:-1])) == 1

    def test_streams_differ_by_block(self):
        a = stream(1, "x", 0).random(4)
        b = stream(1, "x", 1).random(4)
        c = stream(1, "y", 0).random(4)
        assert not np.array_equal(a, b) and not np.array_equal(a, c)

    def test_run_blocks_sums(self):
        total = run_blocks(lambda rng, size: np.array([size]), 1000, 1 << 15, 0, "t", 4)
        assert total[0] == 1000


class TestEmpiricalTail:
    def test_examples(self):
        g = empirical_tail([1.0, 2.0, 2.0, 5.0])
        assert g(0.5) == 1.0 and g(1.0) == 0.75 and g(2.0) == 0.25 and g(5.0) == 0.0

    @given(st.lists(st.floats(0, 1e6), min_size=1, max_size=50))
    def test_nonincreasing(self, xs):
        g = empirical_tail(xs)
        grid = sorted(set(xs) | {0.0, max(xs) + 1})
        vals = [g(t) for t in grid]
        assert all(a >= b for a, b in zip(vals, vals[1:]))
        assert vals[-1] == 0
