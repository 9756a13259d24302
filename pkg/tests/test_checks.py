"""The self-check battery passes clean and catches injected errors."""

import numpy as np
import pytest

from warpalign.checks import (
    CheckResult,
    check_dtw_bruteforce,
    check_loss_finite_differences,
    check_prior_normalization,
    check_softdtw_gibbs,
    check_softdtw_gradient,
    run_checks,
)


class TestCleanRun:
    def test_all_checks_pass(self):
        results = run_checks(seed=0)
        assert len(results) == 5
        for r in results:
            assert r.passed, r.line()

    def test_names_unique_and_stable(self):
        names = [r.name for r in run_checks(seed=1)]
        assert names == [
            "dtw-bruteforce",
            "softdtw-gibbs",
            "softdtw-gradient",
            "loss-finite-differences",
            "prior-normalization",
        ]

    def test_deterministic_per_seed(self):
        a = [r.detail for r in run_checks(seed=3)]
        b = [r.detail for r in run_checks(seed=3)]
        assert a == b

    def test_line_format(self):
        line = CheckResult("demo", True, "all good", 1e-8).line()
        assert line == "[PASS] demo (tol=1e-08): all good"
        line = CheckResult("demo", False, "bad", 0.5).line()
        assert line.startswith("[FAIL] demo")


class TestMutationDetection:
    def test_gradient_sign_flip_detected(self):
        results = run_checks(seed=0, corrupt="gradient-sign")
        by_name = {r.name: r for r in results}
        assert not by_name["softdtw-gradient"].passed
        assert not by_name["loss-finite-differences"].passed
        # The untouched checks still pass.
        assert by_name["dtw-bruteforce"].passed
        assert by_name["softdtw-gibbs"].passed
        assert by_name["prior-normalization"].passed

    def test_individual_corrupt_hooks(self):
        rng = np.random.default_rng(5)
        assert not check_softdtw_gradient(rng, trials=5, corrupt="gradient-sign").passed
        rng = np.random.default_rng(5)
        assert not check_loss_finite_differences(rng, corrupt="gradient-sign").passed


class TestIndividualChecks:
    def test_dtw_bruteforce_exact(self):
        r = check_dtw_bruteforce(np.random.default_rng(2), trials=20)
        assert r.passed and r.tolerance == 0.0
        assert "max deviation 0" in r.detail

    def test_softdtw_gibbs_tight(self):
        r = check_softdtw_gibbs(np.random.default_rng(2), trials=10)
        assert r.passed and r.tolerance == 1e-8

    def test_prior_normalization(self):
        r = check_prior_normalization(np.random.default_rng(2), trials=10)
        assert r.passed
        assert "min KL" in r.detail
