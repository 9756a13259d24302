"""Self-check battery: re-derives core quantities from first principles.

Each check recomputes a result with an independent method (exhaustive
enumeration, Gibbs averaging, finite differences) and compares against
the production code. The ``corrupt`` hook deliberately breaks one
quantity so tests can confirm the battery actually detects errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import alignment, encoder, objectives, sampling, softdtw


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    tolerance: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name} (tol={self.tolerance:g}): {self.detail}"


def _random_distance_matrix(rng: np.random.Generator, n: int, m: int) -> np.ndarray:
    return rng.uniform(0.1, 4.0, size=(n, m))


def check_dtw_bruteforce(rng: np.random.Generator, trials: int = 50) -> CheckResult:
    """DP cost must equal the minimum over all enumerated paths, exactly."""
    worst = 0.0
    for _ in range(trials):
        n, m = int(rng.integers(1, 6)), int(rng.integers(1, 6))
        D = _random_distance_matrix(rng, n, m)
        best = min(
            alignment.path_cost(D, path) for path in alignment.enumerate_paths(n, m)
        )
        got = alignment.dtw_cost(D)
        worst = max(worst, abs(got - best))
        if got != best:
            return CheckResult(
                "dtw-bruteforce", False,
                f"DP cost {got!r} != enumerated best {best!r} on {n}x{m}", 0.0,
            )
    return CheckResult(
        "dtw-bruteforce", True, f"{trials} grids, max deviation {worst:g}", 0.0
    )


def check_softdtw_gibbs(rng: np.random.Generator, trials: int = 30,
                        tol: float = 1e-8) -> CheckResult:
    """Forward value must equal -gamma*log sum exp(-cost/gamma) over paths."""
    worst = 0.0
    for _ in range(trials):
        n, m = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        D = _random_distance_matrix(rng, n, m)
        for gamma in (0.05, 0.5, 2.0):
            costs = [alignment.path_cost(D, p) for p in alignment.enumerate_paths(n, m)]
            shift = min(c / gamma for c in costs)
            total = sum(math.exp(-(c / gamma) + shift) for c in costs)
            expected = -gamma * (math.log(total) - shift)
            got, _ = softdtw.softdtw_cost(D, gamma)
            worst = max(worst, abs(got - expected))
    passed = worst <= tol
    return CheckResult("softdtw-gibbs", passed, f"max |forward - oracle| = {worst:.3e}", tol)


def check_softdtw_gradient(rng: np.random.Generator, trials: int = 20,
                           tol: float = 1e-8, corrupt: str | None = None) -> CheckResult:
    """Backward pass must equal the Gibbs expectation of alignment matrices."""
    worst = 0.0
    for _ in range(trials):
        n, m = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        D = _random_distance_matrix(rng, n, m)
        gamma = float(rng.uniform(0.05, 1.0))
        paths = alignment.enumerate_paths(n, m)
        costs = np.array([alignment.path_cost(D, p) for p in paths])
        w = np.exp(-(costs - costs.min()) / gamma)
        w /= w.sum()
        expected = np.zeros((n, m))
        for weight, path in zip(w, paths):
            expected += weight * alignment.alignment_matrix(path, n, m)
        _, tables = softdtw.softdtw_cost(D, gamma)
        grad = softdtw.softdtw_grad_wrt_distance(tables, D)
        if corrupt == "gradient-sign":
            grad = -grad
        worst = max(worst, float(np.max(np.abs(grad - expected))))
    passed = worst <= tol
    return CheckResult(
        "softdtw-gradient", passed, f"max |grad - Gibbs expectation| = {worst:.3e}", tol
    )


def check_loss_finite_differences(rng: np.random.Generator, tol: float = 1e-3,
                                  corrupt: str | None = None) -> CheckResult:
    """Analytic d(pair loss)/d(params) vs centered differences, small case."""
    T, d_in, d_h, d_z = 6, 5, 7, 4
    params = encoder.init_params(d_in, d_h, d_z, seed=int(rng.integers(0, 2**31)))
    hp = objectives.HyperParams(T=T)
    feats_a = rng.standard_normal((T, d_in))
    feats_b = rng.standard_normal((T, d_in))
    clip_a = sampling.SampledClip(feats_a, np.arange(T))
    clip_b = sampling.SampledClip(feats_b, np.arange(T) * 2)

    z_a = encoder.encode(feats_a, params)
    z_b = encoder.encode(feats_b, params)
    frozen = alignment.dtw_path(alignment.distance_matrix(z_b, z_a))

    def loss_at(vec: np.ndarray) -> float:
        p = encoder.vector_to_params(vec, params)
        za = encoder.encode(feats_a, p)
        zb = encoder.encode(feats_b, p)
        report, _, _ = objectives.pair_loss(
            clip_a, clip_b, za, zb, hp, same_video=False, frozen_path=frozen
        )
        return report.combined

    za, cache_a = encoder.encode_with_cache(feats_a, params)
    zb, cache_b = encoder.encode_with_cache(feats_b, params)
    _, ga, gb = objectives.pair_loss(
        clip_a, clip_b, za, zb, hp, same_video=False, frozen_path=frozen
    )
    analytic = encoder.grads_to_vector(
        encoder.encode_backward(params, cache_a, ga)
    ) + encoder.grads_to_vector(encoder.encode_backward(params, cache_b, gb))
    if corrupt == "gradient-sign":
        analytic = -analytic

    vec = encoder.params_to_vector(params)
    h = 1e-5
    idx = rng.choice(vec.size, size=min(40, vec.size), replace=False)
    worst = 0.0
    for k in idx:
        bumped = vec.copy()
        bumped[k] += h
        up = loss_at(bumped)
        bumped[k] -= 2 * h
        down = loss_at(bumped)
        fd = (up - down) / (2 * h)
        denom = max(abs(fd), abs(analytic[k]), 1e-8)
        worst = max(worst, abs(fd - analytic[k]) / denom)
    passed = worst <= tol
    return CheckResult(
        "loss-finite-differences", passed, f"max relative gradient error = {worst:.3e}", tol
    )


def check_prior_normalization(rng: np.random.Generator, trials: int = 25,
                              tol: float = 1e-12) -> CheckResult:
    """Priors and similarity rows must be distributions; KL nonnegative."""
    worst_norm = 0.0
    worst_kl = 0.0
    for _ in range(trials):
        n, m = int(rng.integers(2, 9)), int(rng.integers(2, 9))
        sA = np.sort(rng.choice(100, size=m, replace=False))
        sB = np.sort(rng.choice(100, size=n, replace=False))
        prior = objectives.same_video_prior(sA, sB, float(rng.uniform(1.0, 30.0)))
        q = objectives.similarity_distribution(
            rng.standard_normal((m, 5)), rng.standard_normal((n, 5)), 0.1
        )
        for M in (prior, q):
            worst_norm = max(worst_norm, float(np.max(np.abs(M.sum(axis=1) - 1.0))))
        for j in range(n):
            worst_kl = min(worst_kl, objectives.kl_row(prior[j], q[j]))
    passed = worst_norm <= tol and worst_kl >= -tol
    detail = f"max |row sum - 1| = {worst_norm:.3e}, min KL = {worst_kl:.3e}"
    return CheckResult("prior-normalization", passed, detail, tol)


def run_checks(seed: int = 0, corrupt: str | None = None) -> list[CheckResult]:
    """The full battery; ``corrupt`` injects a sign error for mutation tests."""
    rng = np.random.default_rng([seed, 404])
    return [
        check_dtw_bruteforce(np.random.default_rng(rng.integers(2**31))),
        check_softdtw_gibbs(np.random.default_rng(rng.integers(2**31))),
        check_softdtw_gradient(np.random.default_rng(rng.integers(2**31)), corrupt=corrupt),
        check_loss_finite_differences(np.random.default_rng(rng.integers(2**31)), corrupt=corrupt),
        check_prior_normalization(np.random.default_rng(rng.integers(2**31))),
    ]
