"""Acceptance gate: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines and timings.
"""

import time

import numpy as np
import pytest

import props
from conftest import (
    bounded_subspace_projector,
    diag_half_three,
    half_identity,
    identity_cert,
    scalar_cert,
    scalar_contraction,
)

from dkit import (
    DichotomyCertificate,
    SequenceWindow,
    ShiftPlan,
    SingularCoefficient,
    SummabilityWitness,
    TimeWindow,
    TransitionKernel,
    apply_H2,
    bounded_solution_test,
    bohr_epsilon_periods,
    classify,
    condition_report,
    estimate_projector,
    mat_norm,
    plan_truncation,
    residual,
    sample_generator,
    shifted_kernel_limit,
    solve_fixed_point,
    summability_bound_check,
    verify_certificate,
)
from dkit.aa import fibonacci_numbers
from dkit.core import GeneratorSpec
from dkit.systems import repro_ex1_system, repro_ex2_system

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0
SQRT2 = np.sqrt(2.0)


def run_criterion(number, title, limit_seconds, body):
    start = time.perf_counter()
    try:
        detail = body()
    except AssertionError as exc:
        elapsed = time.perf_counter() - start
        print(f"criterion {number:2d} FAIL [{elapsed:6.2f}s] {title}: {exc}")
        raise
    elapsed = time.perf_counter() - start
    print(f"criterion {number:2d} PASS [{elapsed:6.2f}s] {title}: {detail}")
    assert elapsed < limit_seconds, (
        f"criterion {number} exceeded its {limit_seconds}s budget: {elapsed:.2f}s"
    )


def test_criterion_01_example1_feasibility():
    def body():
        spec = repro_ex1_system()
        window = TimeWindow(-60, 60)
        rep = condition_report(spec, identity_cert(window), window)
        assert abs(rep.K - 3.0) <= 3e-12, f"K = {rep.K!r}"
        assert abs(rep.L - 0.8) <= 8e-13, f"L = {rep.L!r}"
        assert abs(rep.M0_min - 30.0) <= 3e-11, f"M0_min = {rep.M0_min!r}"
        assert rep.feasible
        return f"K = 3, L = 0.8, M0_min = 30 (relative error <= 1e-12)"

    run_criterion(1, "example 1 feasibility constants", 1.0, body)


def test_criterion_02_example1_dichotomy():
    def body():
        spec = repro_ex1_system()
        kernel = TransitionKernel(spec)
        window = TimeWindow(-60, 60)
        worst = 0.0
        for s in window:
            for t in range(s, window.t_hi + 1):
                mag = mat_norm(kernel.transition(t, s))
                expected = 3.0 ** (s - t)
                worst = max(worst, abs(mag - expected) / expected)
        assert worst <= 1e-12, f"kernel magnitude off 3^(s-t) by {worst:.3e}"
        cert = identity_cert(window, alpha=1.0, beta=1.0)
        report = verify_certificate(kernel, cert)
        assert report.passed, f"(beta1, alpha1) = (1, 1) failed at {report.worst_pair}"
        return (
            f"|Phi(t,s)| = 3^(s-t) to {worst:.2e} on [-60, 60]; "
            f"verified with (beta1, alpha1) = (1, 1) over {report.pairs_checked} pairs"
        )

    run_criterion(2, "example 1 dichotomy", 5.0, body)


def test_criterion_03_example1_solve():
    def body():
        spec = repro_ex1_system()
        window = TimeWindow(-200, 200)
        kernel = TransitionKernel(spec)
        cert = identity_cert(window)
        solution, diag = solve_fixed_point(
            spec, kernel, cert, window, plan=None, tol=1e-8, max_iter=100
        )
        hist = diag.residual_history
        ratios = [b / a for a, b in zip(hist[3:], hist[4:]) if a > 0]
        assert all(r <= 0.85 for r in ratios), f"worst ratio {max(ratios):.3f}"
        assert diag.final_sup_norm <= 30.0, f"sup norm {diag.final_sup_norm}"
        worst = max(
            residual(spec, solution, t)
            for t in range(diag.interior.t_lo, diag.interior.t_hi)
        )
        assert worst <= 1e-6, f"interior residual {worst:.3e}"
        return (
            f"{diag.iterations} iterations, ratio <= 0.85, sup norm "
            f"{diag.final_sup_norm:.4g} <= 30, residual {worst:.2e} <= 1e-6"
        )

    run_criterion(3, "example 1 solve on [-200, 200]", 60.0, body)


def test_criterion_04_example2_singular_coefficients():
    def body():
        spec = repro_ex2_system()
        kernel = TransitionKernel(spec)
        try:
            kernel.backward_transition(0, 2)
            raise AssertionError("backward product through t = 0 did not fail")
        except SingularCoefficient as exc:
            assert exc.index % 2 == 0, f"index {exc.index} is not even"
            singular_at = exc.index
        window = TimeWindow(-60, 60)
        cert = identity_cert(window, alpha=1.0, beta=1.0)
        report = verify_certificate(kernel, cert)
        assert report.passed, f"forward verification failed at {report.worst_pair}"
        solution, diag = solve_fixed_point(
            spec, kernel, cert, TimeWindow(-200, 200), tol=1e-8, max_iter=100
        )
        worst = max(
            residual(spec, solution, t)
            for t in range(diag.interior.t_lo, diag.interior.t_hi)
        )
        assert worst <= 1e-6, f"interior residual {worst:.3e}"
        return (
            f"SingularCoefficient at even t = {singular_at}; forward pipeline "
            f"verified (kernel <= 2^(s-t)); affine solve residual {worst:.2e}"
        )

    run_criterion(4, "example 2 singular coefficients", 30.0, body)


def test_criterion_05_oracle_equivalence():
    def body():
        spec = scalar_contraction()
        window = TimeWindow(-80, 80)
        kernel = TransitionKernel(spec)
        cert = scalar_cert(window)
        x = SequenceWindow.zeros(window, 1)

        oracle = 0.0  # independent geometric summation
        for i in range(60):
            oracle += 2.0 ** (-i)
        plan = plan_truncation(cert, 1.0, 60, 1)
        value, _ = apply_H2(spec, kernel, cert, x, 0, plan)
        assert abs(float(value[0]) - 2.0) <= 1e-10
        assert abs(float(value[0]) - oracle) <= 1e-15
        checked = []
        for n in (5, 10, 20, 40):
            plan = plan_truncation(cert, 1.0, n, 1)
            value, err = apply_H2(spec, kernel, cert, x, 0, plan)
            measured = abs(float(value[0]) - 2.0)
            assert measured <= err, f"N={n}: measured {measured:.3e} > bound {err:.3e}"
            checked.append(n)
        return f"value 2.0 within 1e-10; bound held at N in {checked}"

    run_criterion(5, "truncated sum oracle equivalence", 1.0, body)


def test_criterion_06_lemma_suite():
    def body():
        window = TimeWindow(-30, 30)
        w_past = SummabilityWitness(
            window, [2.0 ** (-t) for t in window], "past_sum", 1.0
        )
        c, holds = summability_bound_check(w_past, 0)
        assert abs(c - 1.0) <= 1e-9 and holds, f"past witness c={c}, holds={holds}"
        w_future = SummabilityWitness(
            window, [2.0 ** t for t in window], "future_sum", 2.0
        )
        c_tilde, holds = summability_bound_check(w_future, 0)
        assert abs(c_tilde - 1.0) <= 1e-9 and holds, f"future witness c={c_tilde}"

        rng = np.random.default_rng(20260809)
        flagged = 0
        test_window = TimeWindow(-20, 20)  # length 41 >= 40
        for spec in (repro_ex1_system(), half_identity(), diag_half_three()):
            kernel = TransitionKernel(spec)
            for _ in range(20):
                xi = rng.uniform(-1, 1, 2)
                while np.max(np.abs(xi)) < 1e-3:
                    xi = rng.uniform(-1, 1, 2)
                report = bounded_solution_test(
                    kernel, xi, test_window, 1e3 * np.max(np.abs(xi))
                )
                assert report.exceeded, f"xi = {xi} not flagged"
                flagged += 1
        return f"geometric witnesses give c = c~ = 1; {flagged}/60 trajectories flagged"

    run_criterion(6, "summability and bounded-solution lemmas", 5.0, body)


def test_criterion_07_projector_uniqueness():
    def body():
        window = TimeWindow(0, 40)
        gaps = []
        for spec in (diag_half_three(), repro_ex1_system()):
            kernel = TransitionKernel(spec)
            p_growth = estimate_projector(kernel, window)
            p_bounded = bounded_subspace_projector(kernel, window)
            gap = mat_norm(p_growth - p_bounded)
            assert gap <= 1e-8, f"projector estimates disagree by {gap:.3e}"
            gaps.append(gap)
        return f"growth-rate and bounded-subspace projectors agree, gaps {gaps}"

    run_criterion(7, "projector uniqueness realization", 5.0, body)


def test_criterion_08_shift_limit():
    def body():
        spec = repro_ex1_system()
        cert = identity_cert(TimeWindow(-10, 10), alpha=1.0, beta=1.0)
        trace = shifted_kernel_limit(
            spec, cert, fibonacci_numbers(5, 20), [(2, 0), (3, 1)], tol=1e-6
        )
        assert trace.final_difference < 1e-6, f"final diff {trace.final_difference:.3e}"
        assert trace.limit_within_bound, "limit kernel violates the original bound"
        return (
            f"final consecutive difference {trace.final_difference:.2e} < 1e-6; "
            f"limit kernel within beta1 (1+alpha1)^(s-t)"
        )

    run_criterion(8, "shifted-kernel limit along Fibonacci", 10.0, body)


def test_criterion_09_classification_triptych():
    def body():
        window = TimeWindow(-2000, 2000)
        plan = ShiftPlan.fibonacci(8, 17)
        per = classify(
            sample_generator(
                GeneratorSpec("sin_combination", {"terms": [(1.0, np.pi / 2, 0.0)]}),
                window,
            ),
            [0.5, 0.1],
            plan,
            1e-3,
            tau_max=200,
        )
        assert per.verdict == "periodic", per.verdict
        mix = classify(
            sample_generator(
                GeneratorSpec(
                    "sin_combination",
                    {"terms": [(1.0, np.pi / 2, 0.0), (1.0, np.pi * SQRT2 / 2, 0.0)]},
                ),
                window,
            ),
            [0.5, 0.1],
            plan,
            1e-3,
            tau_max=500,
        )
        assert mix.verdict == "numerically_almost_periodic", mix.verdict
        sgn_window = sample_generator(
            GeneratorSpec("sign_cos_irrational", {"theta": GOLDEN}), window
        )
        periods, _ = bohr_epsilon_periods(sgn_window, eps=0.5, tau_max=200)
        assert periods == set(), f"unexpected translation numbers {periods}"
        sgn = classify(sgn_window, [0.5], plan, 1e-3, tau_max=200)
        assert sgn.verdict == "numerically_almost_automorphic", sgn.verdict
        return (
            "periodic / numerically_almost_periodic / numerically_almost_automorphic; "
            "no eps-period for the sign signal at eps = 0.5, tau <= 200"
        )

    run_criterion(9, "classification triptych", 30.0, body)


def test_criterion_10_property_suites():
    def body():
        rng = np.random.default_rng(20260809)
        notes = []
        notes.append("submultiplicativity: " + props.check_submultiplicativity(rng))
        notes.append("lipschitz: " + props.check_lipschitz_probes(seed=20260809))
        kernel = TransitionKernel(repro_ex1_system())
        notes.append(
            "cocycle: " + props.check_cocycle(kernel, TimeWindow(-40, 40), rng)
        )
        notes.append("putzer: " + props.check_putzer_vs_brute(rng))
        notes.append("ball: " + props.check_ball_preservation(rng))
        notes.append("truncation: " + props.check_truncation_monotonicity())
        notes.append("aa closures: " + props.check_aa_closures())
        return " | ".join(notes)

    run_criterion(10, "quantified property suites", 120.0, body)
