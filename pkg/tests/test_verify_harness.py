import math

import numpy as np
import pytest

from mdl.errors import DomainError, InputError
from mdl.mc_estimator import MCEstimate, exact_estimate, make_estimate
from mdl.process_zoo import ConstantSigma, FieldModel, IidParetoSym, IidSign, VolModulated
from mdl.tails import ExponentialTail, ParetoTail, ZeroTail
from mdl.verify_harness import (ArrayRow, Scenario, check_decay, classify,
                                complete_convergence_series, lemma2_property_check,
                                lemma3_property_check, run_scenario)

ZERO = VolModulated(sigma=ConstantSigma(0.0))


def est(point, lo, hi):
    return MCEstimate(0, 100, point, lo, hi, 0, 1)


class TestClassify:
    def test_pass(self):
        assert classify(est(0.1, 0.05, 0.2), 0.5) == ("pass", pytest.approx(0.2))

    def test_vacuous(self):
        assert classify(est(0.1, 0.05, 0.2), 1.5)[0] == "vacuous"
        assert classify(est(0.1, 0.05, 0.2), math.inf)[0] == "vacuous"

    def test_noise_and_fail(self):
        assert classify(est(0.3, 0.2, 0.4), 0.25)[0] == "mc_noise"
        assert classify(est(0.3, 0.28, 0.4), 0.25)[0] == "fail"

    def test_slack(self):
        assert classify(est(0.3, 0.28, 0.4), 0.25, slack=0.6)[0] == "pass"

    def test_non_probability(self):
        assert classify(est(3.0, 2.0, 4.0), 5.0, probability=False)[0] == "pass"

    def test_zero_rhs(self):
        assert classify(exact_estimate(0.0, 10, 0, 1, 0.99), 0.0) == ("pass", 0.0)

    @pytest.mark.parametrize("k", [0, 3, 50, 100])
    def test_pass_implies_ratio_bound(self, k):
        e = make_estimate(k, 100, 0, 1, 0.99)
        for rhs in (0.01, 0.1, 0.5, 1.0):
            status, ratio = classify(e, rhs, 0.1)
            if status == "pass":
                assert e.ci_high <= rhs * 1.1 and 0 <= ratio <= 1.1


class TestValidation:
    def test_q_not_above_p(self):
        sc = Scenario("t2", "T2", IidSign(), (1.0,), (8,), p=2, q=2)
        with pytest.raises(InputError, match="q > p"):
            sc.validate()

    @pytest.mark.parametrize("kwargs", [
        dict(theorem="T9"), dict(x_grid=()), dict(x_grid=(-1.0,)), dict(n_grid=()),
        dict(n_grid=(0,)), dict(p=2.5), dict(trials=0), dict(confidence=1.0),
        dict(mode="other"), dict(convention="other"), dict(seed=-1),
        dict(theorem="T3"), dict(theorem="T6_item1", s=2.0), dict(theorem="T5", p=2.0),
    ])
    def test_rejects(self, kwargs):
        base = dict(id="x", theorem="T2", model=IidSign(), x_grid=(1.0,), n_grid=(8,), p=2.0,
                    q=3.0)
        base.update(kwargs)
        with pytest.raises(InputError):
            Scenario(**base).validate()

    def test_field_dimension(self):
        with pytest.raises(InputError):
            Scenario("f", "T3", FieldModel.rademacher(2), (1.0,), ((4, 4, 4),), p=2,
                     q=5).validate()

    def test_lemma1_parameters(self):
        with pytest.raises(InputError):
            Scenario("l", "LEM1", IidSign(), (1.0,), (8,), p=2, q=1,
                     options={"beta": 2.0, "delta": 1.5}).validate()


class TestRunScenario:
    @pytest.mark.parametrize("theorem,kw", [
        ("T1", dict(p=2, q=3)), ("T2", dict(p=2, q=3)), ("T2_condvar", dict(p=2, q=3)),
        ("T5", dict(p=1.5, q=3)), ("T6_item1", dict(s=3)), ("T6_item2", dict(s=3)),
        ("COR", dict(s=3)), ("T7", dict(s=3)),
    ])
    def test_zero_model_passes(self, theorem, kw):
        rep = run_scenario(Scenario("z", theorem, ZERO, (1.0,), (2, 4), trials=1000, **kw))
        for c in rep.cells:
            assert c.lhs.point == 0 and c.lhs.ci_high == 0
            assert c.status in ("pass", "vacuous")

    def test_t2_sign_cell(self):
        # the threshold 4 * 16^(1/2) equals the largest possible |S_16|
        rep = run_scenario(Scenario("t2", "T2", IidSign(), (4.0,), (16,), p=2, q=3))
        (cell,) = rep.cells
        assert cell.lhs.exact and cell.lhs.point == 0
        assert cell.rhs > 1 and cell.status == "vacuous"
        assert not rep.hard_failures

    def test_t3_field_cell(self):
        rep = run_scenario(Scenario("t3", "T3", FieldModel.rademacher(2), (4.0,), ((8, 8),),
                                    p=2, q=5))
        (cell,) = rep.cells
        assert cell.status in ("pass", "vacuous") and rep.all_pass

    def test_informative_pass(self):
        rep = run_scenario(Scenario("t3", "T3", FieldModel.rademacher(2), (8.0,), ((8, 8),),
                                    p=2, q=5))
        (cell,) = rep.cells
        assert cell.status == "pass" and cell.rhs < 1 and rep.worst_ratio <= 1

    def test_oracle_and_mc_modes(self):
        base = dict(id="o", theorem="T2", model=IidSign(), x_grid=(1.0,), n_grid=(8,), p=2,
                    q=3, trials=100_000)
        exact = run_scenario(Scenario(**base)).cells[0].lhs
        mc = run_scenario(Scenario(**base, options={"lhs": "mc"})).cells[0].lhs
        assert exact.exact and not mc.exact
        assert mc.ci_low <= exact.point <= mc.ci_high

    def test_errors_attach_to_cells(self):
        # Pareto 1.5 has no conditional 2nd moment, so the bound cannot be formed
        rep = run_scenario(Scenario("e", "T2_condvar", IidParetoSym(1.5), (1.0,), (8,), p=2,
                                    q=3, trials=1000))
        (cell,) = rep.cells
        assert cell.status == "error" and "DomainError" in cell.note
        assert rep.hard_failures == [cell]

    def test_heavy_tail_sequence(self):
        rep = run_scenario(Scenario("h", "T2", IidParetoSym(1.8), (2.0, 8.0), (8, 64), p=1.5,
                                    q=3, trials=20_000))
        assert not rep.hard_failures and len(rep.cells) == 4

    def test_cor_note(self):
        rep = run_scenario(Scenario("c", "COR", IidSign(), (1.0,), (2,), s=3, trials=1000))
        assert any("a_n" in n for n in rep.notes)

    def test_t7_single_cell(self):
        rep = run_scenario(Scenario("s", "T7", IidSign(), (1.0, 2.0), (1, 2, 3), s=3,
                                    trials=1000))
        assert [c.n for c in rep.cells] == ["1..3", "1..3"]
        assert all(c.status == "pass" for c in rep.cells)

    def test_lemma1(self):
        rep = run_scenario(Scenario("l", "LEM1", IidParetoSym(2.5), (1.0, 2.0), (8,), p=2,
                                    q=1, trials=20_000))
        assert not rep.hard_failures

    def test_workers_do_not_change_counts(self):
        sc = Scenario("w", "T2", IidParetoSym(1.8), (2.0,), (64,), p=1.5, q=3, trials=50_000)
        a = run_scenario(sc, workers=1).cells[0].lhs.exceedances
        b = run_scenario(sc, workers=4).cells[0].lhs.exceedances
        assert a == b


class TestDecay:
    def test_zero_model(self):
        sc = Scenario("d", "T5", ZERO, (1.0,), tuple(range(4, 9)), p=1.5, q=3, trials=1000)
        rep = check_decay(sc)
        assert rep.a == (0.0,) * 5 and rep.decaying
        assert not any(rep.below_resolution)

    def test_top_half(self):
        sc = Scenario("d", "T5", IidParetoSym(1.8), (1.0,), tuple(range(2, 9)), p=1.5, q=3,
                      trials=5000)
        rep = check_decay(sc)
        assert rep.top_half == (5, 6, 7, 8) and rep.hypothesis_ok
        assert all(lo <= a <= hi for lo, a, hi in zip(rep.ci_low, rep.a, rep.ci_high))

    def test_rejects_other_theorems(self):
        with pytest.raises(InputError):
            check_decay(Scenario("d", "T2", IidSign(), (1.0,), (4,), p=2, q=3))


class TestLemma2:
    @pytest.mark.parametrize("g,q", [("zero", 1), ("zero", 2), ("two", 1), ("two", 2),
                                     ("min2_inv", 1), ("min2_inv", 2)])
    def test_named_functions(self, g, q):
        assert lemma2_property_check(g, 1.0, q, [2.0**k for k in range(11)]).passed

    def test_constant_two(self):
        rep = lemma2_property_check("two", 1.0, 1, [1.0])
        assert rep.lhs[0].point == 2.0 and rep.rhs[0] == pytest.approx(16.0)

    def test_custom_callable(self):
        rep = lemma2_property_check(lambda t: 2.0 if t <= 0.25 else t**-0.5, 2.0, 1.5, [1.0, 4.0])
        assert rep.passed

    def test_grid_must_be_dyadic(self):
        with pytest.raises(InputError):
            lemma2_property_check("zero", 1.0, 1, [3.0])


class TestLemma3:
    def test_exponential(self):
        rep = lemma3_property_check(ExponentialTail(), "X_equals_Y", (1.0,))
        assert rep.lhs[0].point == pytest.approx(math.exp(-2))
        assert rep.rhs[0] == pytest.approx(math.exp(-1))
        assert rep.passed

    @pytest.mark.parametrize("coupling", ["X_equals_Y", "ergodic_average"])
    def test_zero(self, coupling):
        rep = lemma3_property_check(ZeroTail(), coupling, (1.0,))
        assert rep.lhs[0].point == 0 and rep.rhs[0] == 0 and rep.passed

    def test_pareto_ergodic(self):
        rep = lemma3_property_check(ParetoTail(2.0), "ergodic_average", (4.0,),
                                    trials=100_000, seed=3)
        assert rep.passed and rep.rhs[0] == pytest.approx(1 / 16)

    def test_infinite_mean(self):
        with pytest.raises(DomainError):
            lemma3_property_check(ParetoTail(1.0))


class TestCompleteConvergence:
    def test_small_rows_vanish(self):
        rep = complete_convergence_series(lambda n: ArrayRow(IidSign(), n**-2.0, n),
                                          lambda n: 1.0, q=3, R=1, eps=1, N=10, trials=2000)
        assert all(t == 0 for t in rep.conclusion_terms[1:])

    def test_zero_array(self):
        rep = complete_convergence_series(lambda n: ArrayRow(IidSign(), 0.0, n),
                                          lambda n: 1.0, q=3, R=1, eps=1, N=5)
        for series in (rep.conclusion_terms, rep.hyp_max_terms, rep.hyp_var_terms,
                       rep.bound_terms):
            assert all(t == 0 for t in series)
        assert rep.summable

    def test_bound_chain_and_cauchy(self):
        rep = complete_convergence_series(lambda n: ArrayRow(IidSign(), 1.0 / n, n),
                                          lambda n: n**-2.0, q=3, R=1, eps=3, N=50,
                                          trials=10_000)
        assert np.all(np.asarray(rep.conclusion_ci_high) <= np.asarray(rep.bound_terms))
        assert rep.cauchy_gap() <= 1e-6

    def test_hypothesis_terms_closed_form(self):
        # a Rademacher row of length n scaled by 1/n: n * int_0^1 1{u < 1/n} u^2 du = n^-2 / 3
        rep = complete_convergence_series(lambda n: ArrayRow(IidSign(), 1.0 / n, n),
                                          lambda n: 1.0, q=3, R=1, eps=3, N=4, trials=100)
        np.testing.assert_allclose(rep.hyp_max_terms, [n**-2 / 3 for n in range(1, 5)],
                                   rtol=1e-9)

    def test_rejects(self):
        with pytest.raises(InputError):
            complete_convergence_series(lambda n: ArrayRow(IidSign(), 1.0, n), lambda n: 1.0,
                                        q=0, R=1, eps=1, N=3)
