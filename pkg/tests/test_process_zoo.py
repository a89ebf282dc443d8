import math

import numpy as np
import pytest

from mdl.errors import AnalyticTailUnavailable, DomainError, InputError, ResourceError
from mdl.process_zoo import (CallableSigma, ConstantSigma, FieldModel, IidParetoSym, IidSign,
                             IidUniformSphere, TwoStateSigma, VolModulated,
                             conditional_moment_tail, enumerate_sign_paths, increment_tail,
                             is_completely_commuting, model_from_dict, sample_field,
                             sample_path, verify_orthomartingale)
from mdl.rng import stream
from mdl.smooth_space import SmoothSpaceSpec
from mdl.tails import DiscreteTail, ParetoTail, ZeroTail, check_tail


def within_binomial(count, trials, p, sigmas=3.0):
    return abs(count / trials - p) <= sigmas * math.sqrt(p * (1 - p) / trials)


class TestSamplePath:
    def test_sign_support(self):
        x = sample_path(IidSign(), 3, stream(1, "t"))
        assert x.shape == (3, 1) and set(np.abs(x).ravel()) == {1.0}

    def test_zero_sigma_path(self):
        x = sample_path(VolModulated(sigma=ConstantSigma(0.0)), 10, stream(1, "t"))
        assert np.all(x == 0)

    def test_pareto_tail_frequency(self):
        x = IidParetoSym(1.5).sample(stream(2, "t"), 100_000, 1)
        assert within_binomial(int(np.sum(np.abs(x) > 2)), x.size, 2**-1.5)

    def test_deterministic_given_stream(self):
        m = IidParetoSym(1.8)
        np.testing.assert_array_equal(sample_path(m, 5, stream(3, "a", 2)),
                                      sample_path(m, 5, stream(3, "a", 2)))

    def test_rejects_empty(self):
        with pytest.raises(InputError):
            sample_path(IidSign(), 0, stream(0))

    @pytest.mark.parametrize("model", [
        IidSign(), IidParetoSym(2.5), IidUniformSphere(),
        VolModulated(sigma=TwoStateSigma(0.5, 1.5)),
    ], ids=lambda m: m.kind)
    def test_mean_zero(self, model):
        x = model.sample(stream(4, "mean"), 1_000_000, 1)[:, 0, :]
        se = x.std(axis=0) / math.sqrt(x.shape[0])
        assert np.all(np.abs(x.mean(axis=0)) <= 4 * se)

    def test_uniform_sphere_unit_norm(self):
        sp = SmoothSpaceSpec.euclidean(3)
        x = IidUniformSphere(sp).sample(stream(0), 100, 4)
        np.testing.assert_allclose(sp.norms(x), 1.0)

    def test_stationarity_of_vol_model(self):
        m = VolModulated(sigma=TwoStateSigma(0.5, 2.0))
        x = m.sample(stream(5, "stat"), 200_000, 6)[..., 0] ** 2
        first, later = x[:, 0], x[:, 5]
        se = math.sqrt(first.var() / first.size + later.var() / later.size)
        assert abs(first.mean() - later.mean()) <= 4 * se

    def test_vol_model_martingale_difference(self):
        # the sign of X_i given the past is symmetric
        m = VolModulated(sigma=TwoStateSigma(0.5, 2.0))
        x = m.sample(stream(6, "md"), 200_000, 3)[..., 0]
        prod = x[:, 1] * np.sign(x[:, 0])
        assert abs(prod.mean()) <= 4 * prod.std() / math.sqrt(prod.size)


class TestTails:
    def test_sign_step(self):
        g = increment_tail(IidSign())
        assert g(0.5) == 1 and g(1.0) == 0

    def test_pareto(self):
        g = increment_tail(IidParetoSym(1.8))
        assert g(3.0) == pytest.approx(3.0**-1.8) and g(0.5) == 1

    def test_zero_sigma(self):
        assert isinstance(increment_tail(VolModulated(sigma=ConstantSigma(0.0))), ZeroTail)

    def test_two_state_tail_matches_samples(self):
        m = VolModulated(IidParetoSym(2.5), TwoStateSigma(0.5, 2.0))
        x = np.abs(m.sample(stream(7), 200_000, 1)).ravel()
        g = m.increment_tail()
        for t in (0.7, 1.5, 4.0):
            assert within_binomial(int(np.sum(x > t)), x.size, g(t), 4)

    def test_callable_sigma_has_no_analytic_tail(self):
        m = VolModulated(sigma=CallableSigma(lambda prev: np.ones(prev.shape[:-1]), 1.0))
        with pytest.raises(AnalyticTailUnavailable):
            m.increment_tail()

    def test_conditional_moment_sign(self):
        g = conditional_moment_tail(IidSign(), 2.0)
        assert g(0.99) == 1 and g(1.0) == 0

    def test_conditional_moment_pareto(self):
        g = conditional_moment_tail(IidParetoSym(1.8), 1.5)
        assert isinstance(g, DiscreteTail) and g.atoms == (pytest.approx(6.0),)

    def test_pareto_moment_matches_integral(self):
        from scipy import integrate
        ref = integrate.quad(lambda s: ParetoTail(1.8)(s ** (1 / 1.5)), 0, math.inf,
                             limit=500)[0]
        assert IidParetoSym(1.8).norm_moment(1.5) == pytest.approx(ref, rel=1e-6)

    def test_divergent_moment(self):
        with pytest.raises(DomainError):
            conditional_moment_tail(IidParetoSym(1.5), 1.5)

    def test_conditional_sum_two_state(self):
        m = VolModulated(sigma=TwoStateSigma(1.0, 2.0))
        g = m.conditional_sum_tail(3, 2.0)
        # sum of sigma_i^2 over 3 steps: 3 + 3K with K ~ Bin(3, 1/2)
        assert g(3.5) == pytest.approx(7 / 8) and g(11.9) == pytest.approx(1 / 8)

    @pytest.mark.parametrize("model", [
        IidSign(), IidParetoSym(1.8), IidUniformSphere(),
        VolModulated(IidParetoSym(2.5), TwoStateSigma(0.1, 3.0)),
        FieldModel((IidParetoSym(1.8), IidParetoSym(1.8))),
    ], ids=lambda m: getattr(m, "kind", "field"))
    def test_every_tail_is_valid(self, model):
        check_tail(model.increment_tail(), grid=np.geomspace(1e-3, 1e3, 1000))


class TestFields:
    def test_rank_one_pattern(self):
        f = sample_field(FieldModel.rademacher(2), (2, 2), stream(8))
        assert set(np.abs(f).ravel()) == {1.0}
        assert np.linalg.matrix_rank(f) == 1

    def test_single_site(self):
        f = FieldModel.rademacher(2).sample(stream(8), 10_000, (1, 1))
        assert f.shape == (10_000, 1, 1) and set(f.ravel()) == {-1.0, 1.0}

    def test_three_dim_identity(self):
        f = FieldModel.rademacher(3).sample(stream(9), 100, (2, 2, 2))
        # every axis variable appears four times, so the product of the 8 entries is 1
        assert np.all(f.reshape(100, -1).prod(axis=1) == 1.0)
        np.testing.assert_array_equal(f[:, 0, 0, 0] * f[:, 1, 1, 0], f[:, 1, 0, 0] * f[:, 0, 1, 0])

    def test_budget(self):
        with pytest.raises(ResourceError):
            FieldModel.rademacher(2).sample(stream(0), 1, (1 << 12, 1 << 11))

    def test_pareto_product_tail(self):
        fm = FieldModel((IidParetoSym(1.8), IidParetoSym(1.8)))
        m = np.abs(fm.sample(stream(10), 300_000, (1, 1))).ravel()
        g = fm.increment_tail()
        for t in (2.0, 10.0):
            assert within_binomial(int(np.sum(m > t)), m.size, g(t), 4)

    def test_field_conditional_moment(self):
        fm = FieldModel((IidParetoSym(2.5), IidParetoSym(2.5)))
        g = fm.conditional_moment_tail(2.0, 0)
        # E|eps^1|^2 |eps^2|^2 with E|eps|^2 = 5
        assert g(5.0 * 4.0) == pytest.approx(ParetoTail(2.5)(2.0))


class TestOrthomartingale:
    def test_product_field(self):
        assert verify_orthomartingale(FieldModel.rademacher(2), (2, 2))

    def test_absolute_values_fail(self):
        assert not verify_orthomartingale(FieldModel(FieldModel.rademacher(2).axes, "abs"), (2, 2))

    def test_sequence(self):
        assert verify_orthomartingale(IidSign(), 3)

    @pytest.mark.parametrize("n", [(2, 2, 2), (3, 3, 3), (1, 3, 2)])
    def test_three_dims(self, n):
        assert verify_orthomartingale(FieldModel.rademacher(3), n)

    def test_completely_commuting(self):
        assert is_completely_commuting(FieldModel.rademacher(2), (2, 3))

    def test_unsupported(self):
        with pytest.raises(InputError):
            verify_orthomartingale(FieldModel((IidParetoSym(),) * 2), (2, 2))

    def test_enumeration(self):
        paths = enumerate_sign_paths(3)
        assert paths.shape == (8, 3) and len({tuple(r) for r in paths}) == 8


class TestSerialisation:
    @pytest.mark.parametrize("model", [
        IidSign(), IidParetoSym(2.2, 0.5), IidUniformSphere(SmoothSpaceSpec.euclidean(3)),
        VolModulated(IidSign(), TwoStateSigma(0.2, 1.0)), VolModulated(),
        FieldModel.rademacher(3), FieldModel((IidParetoSym(1.8), IidSign()), "abs"),
    ], ids=lambda m: getattr(m, "kind", "field"))
    def test_round_trip(self, model):
        assert model_from_dict(model.to_dict()) == model

    @pytest.mark.parametrize("spec", [
        {"kind": "nope"}, {"kind": "iid_sign", "alpha": 2}, {"alpha": 2},
        {"kind": "iid_pareto_sym", "alpha": 0.5},
        {"kind": "vol_modulated", "sigma": {"kind": "weird"}},
    ])
    def test_rejects(self, spec):
        with pytest.raises(InputError):
            model_from_dict(spec)

    def test_callable_sigma_not_serialisable(self):
        with pytest.raises(InputError):
            VolModulated(sigma=CallableSigma(lambda p: p[..., 0] * 0, 1.0)).to_dict()
