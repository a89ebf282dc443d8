import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mdl.errors import InputError
from mdl.tails import (CallableTail, DiscreteTail, EmpiricalTail, ExponentialTail, MaxOfIidTail,
                       MixtureTail, ParetoTail, PowerTail, ProductParetoTail, ScaledTail,
                       ZeroTail, check_tail, inverse_sample, parse_tail)

TAILS = [
    ZeroTail(),
    DiscreteTail.step(1.0),
    DiscreteTail((0.5, 2.0, 3.0), (0.2, 0.3, 0.5)),
    EmpiricalTail([0.1, 0.7, 0.7, 4.0]),
    ParetoTail(1.8),
    ParetoTail(2.0, 3.0),
    ProductParetoTail(1.8, 3),
    ExponentialTail(2.0),
    ScaledTail(ParetoTail(1.5), 4.0),
    PowerTail(ExponentialTail(), 0.5, 2.0),
    MixtureTail((DiscreteTail.step(1.0), ParetoTail(2.5)), (0.3, 0.7)),
    MaxOfIidTail(ParetoTail(1.8), 10),
]


@pytest.mark.parametrize("tail", TAILS, ids=lambda t: type(t).__name__)
@given(a=st.floats(0, 1e6), b=st.floats(0, 1e6))
def test_tail_is_monotone_probability(tail, a, b):
    lo, hi = min(a, b), max(a, b)
    g_lo, g_hi = tail(lo), tail(hi)
    assert 0.0 <= g_hi <= g_lo <= 1.0


@pytest.mark.parametrize("tail", TAILS, ids=lambda t: type(t).__name__)
def test_tail_passes_grid_check(tail):
    check_tail(tail, grid=np.geomspace(1e-3, 1e3, 1000))


class TestValues:
    def test_step(self):
        g = DiscreteTail.step(1.0)
        assert g(0.999) == 1.0 and g(1.0) == 0.0

    def test_pareto(self):
        assert ParetoTail(1.8)(2.0) == pytest.approx(2 ** -1.8)
        assert ParetoTail(1.8)(0.5) == 1.0

    def test_discrete_merges_atoms(self):
        g = DiscreteTail((2.0, 1.0, 2.0), (0.25, 0.5, 0.25))
        assert g.atoms == (1.0, 2.0)
        assert g(1.5) == pytest.approx(0.5)
        assert g.left_limit(2.0) == pytest.approx(0.5)

    def test_rejects_excess_mass(self):
        with pytest.raises(InputError):
            DiscreteTail((1.0, 2.0), (0.7, 0.7))

    @pytest.mark.parametrize("samples,t,expected", [
        ([1, 1, 1], 0.5, 1.0),
        ([1, 2, 3], 2.0, 1 / 3),
        ([0], 1e-9, 0.0),
    ])
    def test_empirical(self, samples, t, expected):
        assert EmpiricalTail(samples)(t) == pytest.approx(expected)

    def test_empirical_rejects_empty(self):
        with pytest.raises(InputError):
            EmpiricalTail([])

    def test_max_of_iid(self):
        g = MaxOfIidTail(DiscreteTail((1.0,), (0.5,)), 3)
        assert g(0.5) == pytest.approx(1 - 0.5**3)

    def test_power_tail(self):
        # tail of 2 * Z^2 at t is G(sqrt(t / 2))
        g = PowerTail(ExponentialTail(), 2.0, 2.0)
        assert g(8.0) == pytest.approx(math.exp(-2.0))

    def test_product_pareto_matches_simulation(self):
        rng = np.random.default_rng(0)
        y = rng.pareto(1.8, size=(400_000, 3)) + 1.0
        prod = y.prod(axis=1)
        g = ProductParetoTail(1.8, 3)
        for t in (2.0, 10.0, 50.0):
            emp = np.mean(prod > t)
            se = math.sqrt(g(t) * (1 - g(t)) / prod.size)
            assert abs(emp - g(t)) < 5 * se

    def test_product_pareto_k1_is_pareto(self):
        t = np.geomspace(0.1, 1e4, 50)
        np.testing.assert_allclose(ProductParetoTail(2.2, 1, 3.0)(t), ParetoTail(2.2, 3.0)(t))


class TestStructure:
    def test_scaled_power_law(self):
        assert ScaledTail(ParetoTail(2.0), 3.0).power_law == (3.0, 9.0, 2.0)

    def test_power_tail_index(self):
        assert PowerTail(ParetoTail(1.8), 0.5).tail_index == pytest.approx(3.6)

    def test_callable_validation(self):
        with pytest.raises(InputError):
            CallableTail(lambda t: min(1.0, t))


class TestParse:
    @pytest.mark.parametrize("text,cls", [
        ("pareto:1.8", ParetoTail), ("step:1", DiscreteTail), ("exp", ExponentialTail),
        ("exp:2", ExponentialTail), ("prodpareto:1.8:2", ProductParetoTail), ("zero", ZeroTail),
    ])
    def test_kinds(self, text, cls):
        assert isinstance(parse_tail(text), cls)

    @pytest.mark.parametrize("text", ["pareto", "pareto:x", "gauss:1", "step:1:2:3"])
    def test_rejects(self, text):
        with pytest.raises(InputError):
            parse_tail(text)


class TestInverseSample:
    def test_discrete_frequencies(self):
        g = DiscreteTail((1.0, 2.0, 3.0), (0.2, 0.3, 0.5))
        x = inverse_sample(g, np.random.default_rng(1), 200_000)
        for atom, w in zip(g.atoms, g.weights):
            assert np.mean(x == atom) == pytest.approx(w, abs=0.005)

    @pytest.mark.parametrize("tail", [ParetoTail(2.0), ExponentialTail(1.5),
                                      ScaledTail(ParetoTail(3.0), 2.0)],
                             ids=lambda t: type(t).__name__)
    def test_tail_matches(self, tail):
        x = inverse_sample(tail, np.random.default_rng(2), 200_000)
        for t in (0.5, 1.5, 3.0):
            assert np.mean(x > t) == pytest.approx(tail(t), abs=0.005)

    def test_unsupported(self):
        with pytest.raises(InputError):
            inverse_sample(ProductParetoTail(2.0, 2), np.random.default_rng(0), 3)
