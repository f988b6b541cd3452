import numpy as np
import pytest

import props
from conftest import (
    identity_cert,
    make_system,
    scalar_cert,
    scalar_contraction,
)

from dkit import (
    MaxIterExceeded,
    NotContractive,
    SequenceWindow,
    TimeWindow,
    TransitionKernel,
    apply_H,
    condition_report,
    plan_truncation,
    residual,
    solve_fixed_point,
    sup_norm,
    verify_solution,
)
from dkit.systems import repro_ex1_system

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0
SQRT2 = np.sqrt(2.0)


def interior_residual(spec, solution, interior):
    return max(residual(spec, solution, t) for t in range(interior.t_lo, interior.t_hi))


class TestConditionReport:
    def test_golden_system_constants(self):
        spec = repro_ex1_system()
        window = TimeWindow(-60, 60)
        rep = condition_report(spec, identity_cert(window), window)
        assert rep.norm_A == pytest.approx(1.0 / 3.0, rel=1e-15)
        assert rep.K == pytest.approx(3.0, rel=1e-12)
        assert rep.L == pytest.approx(0.8, rel=1e-12)
        assert rep.M0_min == pytest.approx(30.0, rel=1e-12)
        assert rep.feasible

    def test_zero_forcing_admits_zero_ball(self):
        spec = make_system(2, A=lambda t: 0.5 * np.eye(2), E1=0.1)
        window = TimeWindow(-10, 10)
        rep = condition_report(spec, identity_cert(window), window)
        assert rep.M0_min == 0.0
        assert rep.feasible

    def test_unit_lipschitz_is_infeasible(self):
        spec = make_system(1, A=lambda t: 0.5 * np.eye(1), E1=1.0)
        window = TimeWindow(-10, 10)
        rep = condition_report(spec, scalar_cert(window), window)
        assert not rep.feasible
        assert "E1" in rep.note

    def test_existence_without_contraction_is_reported(self):
        spec = make_system(1, A=lambda t: 0.5 * np.eye(1), E1=0.5, E2=0.5)
        window = TimeWindow(-10, 10)
        rep = condition_report(spec, scalar_cert(window), window)
        assert not rep.feasible
        assert rep.existence_asserted
        assert "iterative scheme inapplicable" in rep.note

    def test_minimal_ball_solves_the_inequality_exactly(self):
        spec = repro_ex1_system()
        window = TimeWindow(-60, 60)
        rep = condition_report(spec, identity_cert(window), window)

        def lhs(m):
            return (
                spec.E1 * m
                + spec.b
                + ((rep.norm_A + 1) * (spec.E1 * m + spec.b) + 2 * spec.E2 * m + spec.a)
                * rep.K
            )

        m0 = rep.M0_min
        assert lhs(m0) == pytest.approx(m0, rel=1e-10)
        assert lhs(1.5 * m0) <= 1.5 * m0
        bad = m0 * (1 - 2e-9)
        assert lhs(bad) > bad


class TestSolveFixedPoint:
    def test_scalar_contraction_reaches_two(self):
        spec = scalar_contraction()
        window = TimeWindow(-80, 80)
        kernel = TransitionKernel(spec)
        cert = scalar_cert(window)
        plan = plan_truncation(cert, 2.0, 60, 1)
        solution, diag = solve_fixed_point(
            spec, kernel, cert, window, plan, tol=1e-10, max_iter=40
        )
        assert diag.iterations <= 40
        mid = solution.get(0)
        assert mid[0] == pytest.approx(2.0, abs=1e-9)
        assert interior_residual(spec, solution, diag.interior) < 1e-10

    def test_zero_forcing_converges_immediately(self):
        spec = make_system(2, A=lambda t: 0.5 * np.eye(2), E1=0.1)
        window = TimeWindow(-60, 60)
        solution, diag = solve_fixed_point(
            spec, TransitionKernel(spec), identity_cert(window), window, tol=1e-12
        )
        assert diag.iterations == 1
        assert solution.sup_norm() == 0.0

    def test_golden_system_full_run(self):
        spec = repro_ex1_system()
        window = TimeWindow(-150, 150)
        kernel = TransitionKernel(spec)
        cert = identity_cert(window)
        solution, diag = solve_fixed_point(
            spec, kernel, cert, window, tol=1e-8, max_iter=100
        )
        rep = condition_report(spec, cert, window)
        assert diag.final_sup_norm <= rep.M0_min + 1e-8 / (1 - rep.L)
        assert interior_residual(spec, solution, diag.interior) <= 1e-6
        # geometric decay of iterate differences once the contraction bites
        hist = diag.residual_history
        ratios = [b / a for a, b in zip(hist[3:], hist[4:]) if a > 0]
        assert all(r <= rep.L + 0.05 for r in ratios)
        # the returned iterate is a fixed point of H to iteration accuracy
        plan = plan_truncation(cert, 9.0, 35, 34)
        for t in (-40, 0, 40):
            value, err = apply_H(spec, kernel, cert, solution, t, plan)
            assert sup_norm(value - solution.get(t)) <= 5e-8 + err

    def test_not_contractive_raises(self):
        spec = make_system(1, A=lambda t: 0.5 * np.eye(1), E1=1.0)
        window = TimeWindow(-80, 80)
        with pytest.raises(NotContractive):
            solve_fixed_point(
                spec, TransitionKernel(spec), scalar_cert(window), window
            )

    def test_max_iter_carries_history(self):
        spec = repro_ex1_system()
        window = TimeWindow(-100, 100)
        with pytest.raises(MaxIterExceeded) as err:
            solve_fixed_point(
                spec,
                TransitionKernel(spec),
                identity_cert(window),
                window,
                tol=1e-14,
                max_iter=2,
            )
        assert len(err.value.history) == 2

    def test_window_too_short_for_plan(self):
        spec = scalar_contraction()
        window = TimeWindow(-10, 10)
        cert = scalar_cert(window)
        plan = plan_truncation(cert, 2.0, 60, 1)
        with pytest.raises(ValueError, match="too short"):
            solve_fixed_point(spec, TransitionKernel(spec), cert, window, plan)

    def test_ball_preservation(self, rng):
        props.check_ball_preservation(rng, count=20)


class TestVerifySolution:
    def test_exact_fixed_point(self):
        spec = scalar_contraction()
        x = SequenceWindow.constant(TimeWindow(0, 20), [2.0])
        assert verify_solution(spec, x) <= 1e-12

    def test_zero_sequence_residual_is_forcing(self):
        spec = scalar_contraction()
        x = SequenceWindow.zeros(TimeWindow(0, 20), 1)
        assert verify_solution(spec, x) == 1.0

    def test_single_sample_perturbation_registers(self):
        spec = scalar_contraction()
        window = TimeWindow(0, 20)
        vals = np.full((21, 1), 2.0)
        delta = 0.01
        vals[10, 0] += delta
        worst = verify_solution(spec, SequenceWindow(window, vals))
        factor = 1.0 - 0.5 - 2 * spec.E1 - 2 * spec.E2
        assert factor > 0
        assert worst >= delta * factor

    def test_window_too_short(self):
        spec = make_system(1, A=lambda t: np.eye(1), g=lambda t: 30, E1=0.1)
        with pytest.raises(ValueError, match="too short"):
            verify_solution(spec, SequenceWindow.zeros(TimeWindow(0, 20), 1))


class TestSolutionAlmostAutomorphy:
    """Shift-return behavior of the computed golden-system solution.

    The coefficient rotation (golden theta) and the forcing rotations (1/4,
    sqrt2/4 and their doubles) must return to their phases simultaneously, so
    the shifts are simultaneous near-return times of all of them (multiples
    of 4 scored by max distance of k*theta and k*sqrt2/4 from the integers).
    Fibonacci shifts alone only stabilize the coefficient and provably leave
    O(1) discrepancies here. Shifted samples of the bounded solution come
    from re-solving on windows centered at each shift.
    """

    SHIFTS = (12776, 193224, 785672, 978896)

    @staticmethod
    def _solve_segment(center):
        spec = repro_ex1_system()
        window = TimeWindow(center - 120, center + 120)
        kernel = TransitionKernel(spec)
        cert = identity_cert(window)
        solution, _ = solve_fixed_point(
            spec, kernel, cert, window, tol=1e-9, max_iter=60
        )
        return solution

    def test_discrepancies_shrink_along_adapted_shifts(self):
        from dkit import simultaneous_shifts

        # the leading frozen shifts are the greedy simultaneous near-returns;
        # the last two refine the score further out than the greedy halving goes
        found = simultaneous_shifts([GOLDEN, SQRT2 / 4.0], k_max=10**6, multiple=4)
        assert {12776, 193224}.issubset(set(found))

        probe = range(-40, 41)
        segments = {0: self._solve_segment(0)}
        for k in self.SHIFTS:
            segments[k] = self._solve_segment(k)
        k_last = self.SHIFTS[-1]
        for k in self.SHIFTS[:-1]:
            m = k_last - k
            if m not in segments:
                segments[m] = self._solve_segment(m)

        def window_of(k):
            seg = segments[k]
            return np.array([seg.get(t + k) for t in probe])

        base = window_of(0)
        fbar = np.array([segments[k_last].get(t + k_last) for t in probe])
        forward = [sup_norm(window_of(k) - fbar) for k in self.SHIFTS]
        backward = []
        for k in self.SHIFTS:
            m = k_last - k
            pulled = np.array([segments[m].get(t + m) for t in probe]) if m else base
            backward.append(sup_norm(pulled - base))

        # early shifts still carry O(1) error; the refined ones settle
        assert forward[0] > 0.5 and backward[0] > 0.5
        assert all(d < 0.02 for d in forward[-3:]), forward
        assert all(d < 0.02 for d in backward[-3:]), backward

        # Lipschitz composition: G(t, x(t), x(t - g)) inherits the returns
        spec = repro_ex1_system()
        comp = {}
        for k in (0,) + self.SHIFTS:
            seg = segments[k]
            comp[k] = np.array(
                [spec.g_at(t + k, seg.get(t + k), seg.get(t + k - 2)) for t in probe]
            )
        # G sees the state only through v/20, so even loose shifts land close;
        # the refined shifts still tighten the match by an order of magnitude
        comp_fwd = [sup_norm(comp[k] - comp[k_last]) for k in self.SHIFTS]
        assert all(d < 0.05 for d in comp_fwd[-3:]), comp_fwd
        assert comp_fwd[-2] < comp_fwd[0]
