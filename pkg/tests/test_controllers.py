import json
import math
import warnings

import numpy as np
import pytest

from streamfdr import metrics
from streamfdr.controllers import (ControllerConfig, MONOTONE_LORD_RULES, ORACLE_RULES,
                                   RULES, make_controller, rescale_factor,
                                   restore_controller, threshold_floor)
from streamfdr.gamma import lord_gamma, power_gamma
from streamfdr.simulation import GeneratorConfig, generate_stream, method_config

H = 100_000


def small_config(rule, **kw):
    kw.setdefault("horizon", H)
    return method_config(rule, **kw)


def run_on(rule_cfg, pvalues):
    return metrics.run_log(make_controller(rule_cfg), pvalues)


class TestConfigValidation:
    def test_unknown_rule(self):
        with pytest.raises(ValueError, match="unknown rule"):
            ControllerConfig(rule="bonferroni")

    def test_alpha_range(self):
        with pytest.raises(ValueError):
            ControllerConfig(rule="lord", alpha=0.0)
        with pytest.raises(ValueError):
            ControllerConfig(rule="lord", alpha=1.0)

    def test_tau_must_exceed_lambda(self):
        with pytest.raises(ValueError, match="tau must exceed lambda"):
            ControllerConfig(rule="addis", lam=0.6, tau=0.5, horizon=H)

    def test_w0_range(self):
        with pytest.raises(ValueError, match="w0"):
            ControllerConfig(rule="lord", alpha=0.1, w0=0.1, horizon=H)
        with pytest.raises(ValueError, match="w0"):
            ControllerConfig(rule="lord", alpha=0.1, w0=0.0, horizon=H)

    def test_delta_ignored_by_undecayed_rule(self):
        with pytest.warns(UserWarning, match="ignored by undecayed"):
            cfg = ControllerConfig(rule="lord", delta=0.9, horizon=H)
        assert cfg.delta == 1.0

    def test_saffron_forces_tau(self):
        with pytest.warns(UserWarning, match="forcing tau=1"):
            cfg = ControllerConfig(rule="saffron", tau=0.7, horizon=H)
        assert cfg.tau == 1.0
        assert cfg.lam == 0.5

    def test_lag_ignored_outside_dep_rules(self):
        with pytest.warns(UserWarning, match="lag is ignored"):
            cfg = ControllerConfig(rule="lord-decay", lag=4, horizon=H)
        assert cfg.lag == 0

    def test_per_family_gamma_defaults(self):
        assert ControllerConfig(rule="lord", horizon=H).gamma.kind == "lord-default"
        assert ControllerConfig(rule="addis", horizon=H).gamma.kind == "power-law"

    def test_fixed_accepts_closed_endpoints(self):
        assert ControllerConfig(rule="fixed", alpha=1.0).alpha == 1.0
        assert ControllerConfig(rule="fixed", alpha=0.0).alpha == 0.0
        with pytest.raises(ValueError):
            ControllerConfig(rule="fixed", alpha=1.5)


class TestLordThresholds:
    def test_no_rejection_spend_is_w0_gamma(self):
        cfg = small_config("lord", alpha=0.1, w0=0.05)
        ctrl = make_controller(cfg)
        g = lord_gamma(H)
        for t in range(1, 51):
            d = ctrl.step(1.0)
            assert not d.rejected
            assert d.threshold == 0.05 * g.weight(t)

    def test_threshold_after_single_rejection(self):
        # rejection at t=3: alpha_5 = w0*(g5 - g2) + alpha*g2
        cfg = small_config("lord", alpha=0.1, w0=0.05)
        ctrl = make_controller(cfg)
        g = lord_gamma(H)
        for t in range(1, 6):
            d = ctrl.step(0.0 if t == 3 else 1.0)
        assert d.step == 5
        assert d.threshold == 0.05 * (1.0 * g.weight(5) - 1.0 * g.weight(2)) \
            + 0.1 * g.weight(2)

    def test_lord_oracle_bounded_on_uniform_stream(self):
        rng = np.random.default_rng(7)
        cfg = small_config("lord")
        log = run_on(cfg, rng.random(100))
        report = metrics.verify_oracle_and_surplus(log, cfg)
        assert report.passed
        assert report.max_oracle <= 0.1 + 1e-10


class TestRamdasDecay:
    def test_pre_rejection_threshold(self):
        cfg = small_config("lord-decay-ramdas", alpha=0.1, w0=0.05, delta=0.99)
        ctrl = make_controller(cfg)
        g = lord_gamma(H)
        for t in range(1, 20):
            d = ctrl.step(1.0)
            assert d.threshold == 0.05 * g.weight(t)

    def test_rejection_term_decays_away(self):
        cfg = small_config("lord-decay-ramdas", alpha=0.1, w0=0.05, delta=0.99)
        ctrl = make_controller(cfg)
        g = lord_gamma(H)
        thresholds = []
        for t in range(1, 3001):
            thresholds.append(ctrl.step(0.0 if t == 10 else 1.0).threshold)
        # by t = 3000 the credit 0.99**(t-10) * g_(t-10) is below 1e-13
        assert thresholds[-1] <= 0.05 * g.weight(3000) + 1e-13

    def test_delta_one_reproduces_lord_bit_exactly(self):
        rng = np.random.default_rng(11)
        p = np.concatenate([rng.random(500), np.zeros(3), rng.random(500)])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            ramdas = small_config("lord-decay-ramdas", delta=1.0)
        lord = small_config("lord")
        log_a = run_on(ramdas, p)
        log_b = run_on(lord, p)
        np.testing.assert_array_equal(log_a.alpha, log_b.alpha)
        np.testing.assert_array_equal(log_a.rejected, log_b.rejected)


class TestLordDecay:
    def test_floor_value_on_long_null_run(self):
        cfg = small_config("lord-decay", alpha=0.1, delta=0.99, eta=1.0)
        ctrl = make_controller(cfg)
        d = None
        for _ in range(2000):
            d = ctrl.step(1.0)
        assert d.threshold == 0.1 * 1.0 * (1.0 - 0.99)
        assert d.threshold >= 1e-3
        assert d.floor_active
        assert threshold_floor(cfg) == d.threshold
        assert rescale_factor(cfg) == 1.0

    def test_delta_one_has_zero_floor(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            cfg = small_config("lord-decay", delta=1.0)
        assert threshold_floor(cfg) == 0.0

    def test_surplus_with_forced_rejections(self):
        cfg = small_config("lord-decay")
        rng = np.random.default_rng(3)
        p = rng.random(1000)
        p[[4, 299]] = 0.0
        log = run_on(cfg, p)
        assert log.rejected[4] and log.rejected[299]
        report = metrics.verify_oracle_and_surplus(log, cfg)
        assert report.passed
        assert report.min_surplus >= -1e-10


class TestAddisFamily:
    def test_first_step_threshold(self):
        cfg = small_config("addis", alpha=0.1, w0=0.05)
        ctrl = make_controller(cfg)
        g = power_gamma(1.6, H)
        d = ctrl.step(1.0)
        expected = min((0.5 - 0.25) * (0.05 * (g.weight(1) - g.weight(0))), 0.25)
        assert d.threshold == expected

    def test_candidate_indicator_advances_counters(self):
        cfg = small_config("addis")
        ctrl = make_controller(cfg)
        assert ctrl._s0 == 1
        ctrl.step(0.3)   # lambda=1/4 < 0.3 <= tau=1/2
        assert ctrl._s0 == 2
        ctrl.step(0.9)   # discarded: p > tau
        assert ctrl._s0 == 2
        ctrl.step(0.2)   # candidate region p <= lambda
        assert ctrl._s0 == 2

    def test_lambda_cap_reached_after_many_rejections(self):
        cfg = small_config("saffron", alpha=0.1, w0=0.05)
        ctrl = make_controller(cfg)
        capped = False
        for _ in range(40):
            d = ctrl.step(0.0)
            if d.threshold == cfg.lam:
                capped = True
        assert capped

    def test_saffron_oracle_bounded(self):
        rng = np.random.default_rng(5)
        cfg = small_config("saffron")
        log = run_on(cfg, rng.random(200))
        report = metrics.verify_oracle_and_surplus(log, cfg)
        assert report.passed

    def test_tau_one_addis_is_saffron_bit_exactly(self):
        rng = np.random.default_rng(13)
        p = rng.random(800)
        p[::97] = 0.001
        addis = small_config("addis", tau=1.0, lam=0.5)
        saffron = small_config("saffron")
        log_a = run_on(addis, p)
        log_b = run_on(saffron, p)
        np.testing.assert_array_equal(log_a.alpha, log_b.alpha)
        np.testing.assert_array_equal(log_a.oracle, log_b.oracle)

    def test_decay_floor(self):
        # p = 0.4 sits in the candidate band (lam, tau], so S0 advances every
        # step and gamma-tilde(S0) reaches its (1 - delta) floor
        cfg = small_config("addis-decay", alpha=0.1, delta=0.99, eta=1.0)
        ctrl = make_controller(cfg)
        for _ in range(500):
            d = ctrl.step(0.4)
        expected = min(0.1 * 1.0 * 0.25 * (1.0 - 0.99), 0.25)
        assert d.threshold == expected
        assert d.floor_active
        assert expected >= 2.5e-4


class TestDependencyRules:
    def test_lag_zero_reduces_to_plain_decay(self):
        rng = np.random.default_rng(17)
        p = rng.random(600)
        p[::71] = 0.0
        dep = small_config("lord-dep-decay", lag=0)
        plain = small_config("lord-decay")
        log_a = run_on(dep, p)
        log_b = run_on(plain, p)
        np.testing.assert_array_equal(log_a.alpha, log_b.alpha)

    def test_rejection_credit_delayed_by_lag(self):
        cfg = small_config("lord-dep-decay", lag=5, delta=0.99)
        ctrl = make_controller(cfg)
        tilde_floor = 0.1 * 1.0 * (1.0 - 0.99)
        thresholds = {}
        for t in range(1, 30):
            thresholds[t] = ctrl.step(0.0 if t == 10 else 1.0).threshold
        g = ControllerConfig(rule="lord-decay", horizon=H).gamma
        # gamma index t-10-5 stays <= 0 through t = 15
        for t in range(11, 16):
            assert thresholds[t] == pytest.approx(
                0.1 * max(g.weight(t), 0.01), rel=0, abs=0) or \
                thresholds[t] >= tilde_floor
            assert thresholds[t] == thresholds[t]  # no NaNs
        assert thresholds[15] < thresholds[16]  # credit arrives at t = 16

    def test_main_text_form_is_larger(self):
        rng = np.random.default_rng(23)
        p = rng.random(400)
        p[50] = 0.0
        proof = small_config("lord-dep-decay", lag=4)
        main = small_config("lord-dep-decay", lag=4, lag_decay_exponent=True)
        log_a = run_on(proof, p)
        log_b = run_on(main, p)
        assert np.all(log_b.alpha >= log_a.alpha - 1e-15)
        assert log_b.alpha.max() > log_a.alpha.max()

    def test_dep_surplus_nonnegative(self):
        rng = np.random.default_rng(29)
        p = rng.random(500)
        p[::83] = 0.0
        cfg = small_config("lord-dep-decay", lag=3)
        log = run_on(cfg, p)
        report = metrics.verify_oracle_and_surplus(log, cfg)
        assert report.passed


class TestFixedThreshold:
    def test_boundary_convention(self):
        ctrl = make_controller(ControllerConfig(rule="fixed", alpha=0.05))
        assert ctrl.step(0.01).rejected
        assert ctrl.step(0.05).rejected      # p <= alpha is inclusive
        assert not ctrl.step(0.051).rejected

    def test_oracle_is_nan(self):
        ctrl = make_controller(ControllerConfig(rule="fixed", alpha=0.05))
        assert math.isnan(ctrl.step(0.5).oracle_value)


class TestDependenceCorrection:
    def test_harmonic_divisor_schedule(self):
        base = small_config("lord-decay")
        corrected = small_config("lord-decay", dependence_correction=True)
        p = np.ones(10)
        log_a = run_on(base, p)
        log_b = run_on(corrected, p)
        assert log_b.alpha[0] == log_a.alpha[0]            # q(1) = 1
        assert log_b.alpha[1] == log_a.alpha[1] / 1.5      # q(2) = 1.5
        q10 = math.fsum(1.0 / k for k in range(1, 11))
        assert log_b.alpha[9] == pytest.approx(log_a.alpha[9] / q10, rel=1e-12)
        assert q10 == pytest.approx(2.9289682539682538, rel=1e-15)

    def test_correction_keeps_certificate(self):
        rng = np.random.default_rng(31)
        cfg = small_config("saffron-decay", dependence_correction=True)
        p = rng.random(400)
        p[::61] = 0.0
        log = run_on(cfg, p)
        assert metrics.verify_oracle_and_surplus(log, cfg).passed


class TestInputContract:
    @pytest.mark.parametrize("bad", [-0.1, 1.0000001, float("nan")])
    def test_out_of_range_p_raises(self, bad):
        ctrl = make_controller(small_config("lord-decay"))
        with pytest.raises(ValueError, match="p-value"):
            ctrl.step(bad)

    def test_rejection_contract_all_rules(self):
        rng = np.random.default_rng(37)
        p = rng.random(300) ** 2
        for rule in RULES:
            cfg = small_config(rule, lag=2) if rule in ("lord-dep-decay", "lord-dep-decay-w0") \
                else small_config(rule)
            log = run_on(cfg, p)
            np.testing.assert_array_equal(log.rejected, p <= log.alpha)


class TestDeterminismAndPruning:
    def test_identical_runs_bit_identical(self):
        rng = np.random.default_rng(41)
        p = rng.random(1000)
        for rule in ("lord", "saffron-decay", "lord-dep-decay"):
            cfg1 = small_config(rule, lag=2 if rule.startswith("lord-dep") else 0)
            cfg2 = small_config(rule, lag=2 if rule.startswith("lord-dep") else 0)
            log_a = run_on(cfg1, p)
            log_b = run_on(cfg2, p)
            np.testing.assert_array_equal(log_a.alpha, log_b.alpha)
            np.testing.assert_array_equal(log_a.oracle, log_b.oracle)

    def test_pruning_only_lowers_thresholds(self):
        stream = generate_stream(GeneratorConfig(length=3000, pi1=0.05, seed=43))
        exact = small_config("lord-decay", prune_epsilon=0.0)
        pruned = small_config("lord-decay", prune_epsilon=1e-6)
        log_a = run_on(exact, stream.p)
        log_b = run_on(pruned, stream.p)
        assert np.all(log_b.alpha <= log_a.alpha + 1e-15)
        assert metrics.verify_oracle_and_surplus(log_b, pruned).passed

    def test_monotone_in_injected_rejections(self):
        # flipping one R_s from 0 to 1 never lowers later thresholds
        rng = np.random.default_rng(47)
        p = rng.random(200)
        for rule in sorted(MONOTONE_LORD_RULES):
            cfg = small_config(rule, prune_epsilon=0.0,
                               lag=2 if rule in ("lord-dep-decay", "lord-dep-decay-w0") else 0)
            base = run_on(cfg, p)
            for s in (0, 50, 150):
                if base.rejected[s]:
                    continue
                p2 = p.copy()
                p2[s] = 0.0
                alt = run_on(cfg, p2)
                assert np.all(alt.alpha[s + 1:] >= base.alpha[s + 1:] - 1e-15), rule

    def test_ramdas_decay_is_not_monotone(self):
        # regression pin for why lord-decay-ramdas sits outside
        # MONOTONE_LORD_RULES: a first rejection at s multiplies the
        # w0-term by delta**(t-s), so distant thresholds drop below the
        # never-rejected trajectory
        cfg = small_config("lord-decay-ramdas", prune_epsilon=0.0)
        p = np.ones(200)
        base = run_on(cfg, p)
        p2 = p.copy()
        p2[0] = 0.0
        alt = run_on(cfg, p2)
        assert alt.alpha[-1] < base.alpha[-1]


class TestSnapshots:
    @pytest.mark.parametrize("rule", ["lord", "lord-decay", "lord-dep-decay",
                                      "addis", "saffron-decay", "fixed",
                                      "addis-decay-w0"])
    def test_round_trip_is_decision_exact(self, rule):
        rng = np.random.default_rng(53)
        p = rng.random(400)
        p[::41] = 0.001
        lag = 2 if rule.startswith("lord-dep") else 0
        cfg = small_config(rule, lag=lag) if rule != "fixed" \
            else ControllerConfig(rule="fixed", alpha=0.05)
        whole = metrics.run_log(make_controller(cfg), p)

        ctrl = make_controller(cfg)
        first = metrics.run_log(ctrl, p[:137])
        snap = ctrl.snapshot()
        resumed = restore_controller(cfg, snap)
        second = metrics.run_log(resumed, p[137:])
        np.testing.assert_array_equal(
            np.concatenate([first.alpha, second.alpha]), whole.alpha)
        np.testing.assert_array_equal(
            np.concatenate([first.rejected, second.rejected]), whole.rejected)
        np.testing.assert_array_equal(
            np.concatenate([first.oracle, second.oracle]), whole.oracle)

    def test_snapshot_rejects_other_config(self):
        cfg = small_config("lord-decay")
        ctrl = make_controller(cfg)
        ctrl.step(0.5)
        snap = ctrl.snapshot()
        other = small_config("lord-decay", alpha=0.2)
        with pytest.raises(ValueError, match="different configuration"):
            restore_controller(other, snap)

    def test_snapshot_rejects_garbage(self):
        cfg = small_config("lord-decay")
        with pytest.raises(ValueError, match="snapshot"):
            restore_controller(cfg, json.dumps({"format": "nope"}))

    def test_clone_matches_original(self):
        rng = np.random.default_rng(59)
        p = rng.random(300)
        p[::37] = 0.0
        for rule in ("lord-decay", "addis-decay"):
            cfg = small_config(rule)
            ctrl = make_controller(cfg)
            metrics.run_log(ctrl, p[:150])
            twin = ctrl.clone()
            rest_a = metrics.run_log(ctrl, p[150:])
            rest_b = metrics.run_log(twin, p[150:])
            np.testing.assert_array_equal(rest_a.alpha, rest_b.alpha)


class TestOracleRules:
    def test_eleven_rules_carry_oracles(self):
        assert len(ORACLE_RULES) == 11
        assert "fixed" not in ORACLE_RULES
