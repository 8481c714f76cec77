"""Branch tracing, onset detection, and cross-variant comparison."""

import numpy as np
import pytest

from refugebif.continuation import (
    Branch,
    ContinuationOptions,
    compare_branches,
    detect_onset,
    solve_at_mu,
    trace_branch,
)
from refugebif.errors import ComparisonError, EstimationError, GeometryError, ParameterError
from refugebif.model import Diffusion, ModelParams
from refugebif.newton import SolutionClass, classify_state

from conftest import disconnected_grid

BOTH = [Diffusion.NONLINEAR, Diffusion.LINEAR]


def make_params(variant=Diffusion.NONLINEAR, **kw):
    defaults = dict(lam=1.0, mu=0.4, c=1.0, m=1.0, b=1.0)
    defaults.update(kw)
    return ModelParams(variant=variant, **defaults)


@pytest.fixture(scope="module")
def branches_16(refuge_grid_16):
    """Both variants traced at lam = 1 down to 0.2 * mu_lambda."""
    out = {}
    for variant in BOTH:
        p = make_params(variant)
        out[variant] = trace_branch(refuge_grid_16, p, 0.08, ContinuationOptions())
    return out


class TestTraceBranch:
    def test_mu_strictly_decreasing(self, branches_16):
        for branch in branches_16.values():
            mus = branch.mus
            assert np.all(np.diff(mus) < 0.0)

    def test_all_points_positive(self, branches_16):
        for branch in branches_16.values():
            for pt in branch.points:
                cls, _ = classify_state(pt.state)
                assert cls is SolutionClass.POSITIVE
                assert pt.min_u > 0.0 and pt.avg_v > 0.0

    def test_seed_scale(self, branches_16):
        # branch emanates from the predator-free state: tiny first avg_v
        for branch in branches_16.values():
            assert branch.points[0].avg_v == pytest.approx(1e-3 * branch.params.lam, rel=1e-6)
            assert branch.points[0].mu < branch.onset.mu_lambda

    def test_monotone_onset(self, branches_16):
        # avg_v grows as mu decreases near the onset (negative slope)
        for branch in branches_16.values():
            head = branch.avg_vs[:8]
            assert np.all(np.diff(head) > 0.0)

    def test_reaches_mu_min_exactly(self, branches_16):
        for branch in branches_16.values():
            assert not branch.truncated
            assert branch.points[-1].mu == 0.08

    def test_newton_residual_contract(self, refuge_grid_16, branches_16):
        from refugebif.model import residual
        from dataclasses import replace

        branch = branches_16[Diffusion.NONLINEAR]
        for pt in branch.points[:: max(1, len(branch.points) // 7)]:
            r = residual(replace(branch.params, mu=pt.mu), pt.state)
            assert np.abs(r).max() <= 1e-9

    def test_rerun_is_bitwise_identical(self, refuge_grid_16, branches_16):
        p = make_params()
        again = trace_branch(refuge_grid_16, p, 0.08, ContinuationOptions())
        ref = branches_16[Diffusion.NONLINEAR]
        assert len(again.points) == len(ref.points)
        for a, b in zip(again.points, ref.points):
            assert a.mu == b.mu
            assert a.avg_v == b.avg_v
            assert np.array_equal(a.state.u.values, b.state.u.values)

    def test_invalid_mu_min_rejected(self, refuge_grid_16):
        with pytest.raises(ParameterError):
            trace_branch(refuge_grid_16, make_params(), 0.6, ContinuationOptions())
        with pytest.raises(ParameterError):
            trace_branch(refuge_grid_16, make_params(), -0.1, ContinuationOptions())

    def test_disconnected_exterior_rejected(self):
        with pytest.raises(GeometryError):
            trace_branch(disconnected_grid(), make_params(), 0.1, ContinuationOptions())

    def test_point_budget_truncates_with_diagnostic(self, refuge_grid_16):
        opts = ContinuationOptions(max_points=4)
        branch = trace_branch(refuge_grid_16, make_params(), 0.08, opts)
        assert branch.truncated
        assert "budget" in branch.diagnostic
        assert len(branch.points) == 4


class TestDetectOnset:
    @pytest.mark.parametrize("variant", BOTH)
    def test_within_one_percent(self, branches_16, variant):
        est = detect_onset(branches_16[variant])
        assert abs(est - 0.5) / 0.5 < 0.01

    def test_variants_agree(self, branches_16):
        est_nl = detect_onset(branches_16[Diffusion.NONLINEAR])
        est_lin = detect_onset(branches_16[Diffusion.LINEAR])
        assert abs(est_nl - est_lin) / est_lin < 0.005

    def test_two_point_branch_rejected(self, branches_16):
        stub = branches_16[Diffusion.NONLINEAR]
        short = Branch(
            variant=stub.variant,
            params=stub.params,
            points=stub.points[:2],
            onset=stub.onset,
        )
        with pytest.raises(EstimationError):
            detect_onset(short)


class TestSlopeAtOnset:
    @pytest.mark.parametrize("variant", BOTH)
    def test_secant_matches_analytic(self, branches_16, variant):
        branch = branches_16[variant]
        pts = branch.points[:5]
        secant = (pts[-1].mu - pts[0].mu) / (pts[-1].avg_v - pts[0].avg_v)
        analytic = branch.onset.slope_at_onset
        assert abs(secant - analytic) / abs(analytic) < 0.05


class TestSolveAtMu:
    def test_refines_to_exact_mu(self, branches_16):
        branch = branches_16[Diffusion.NONLINEAR]
        state, rep = solve_at_mu(branch, 0.37)
        assert rep.converged
        assert rep.classification is SolutionClass.POSITIVE


class TestCompareBranches:
    def test_self_comparison_is_unity(self, branches_16):
        branch = branches_16[Diffusion.NONLINEAR]
        table = compare_branches(branch, branch)
        assert np.all(table.ratio == 1.0)

    def test_near_onset_coincidence(self, branches_16):
        table = compare_branches(
            branches_16[Diffusion.NONLINEAR], branches_16[Diffusion.LINEAR]
        )
        mu_l = 0.5
        mask = table.mu >= 0.95 * mu_l
        rel = np.abs(table.avg_v_nonlinear[mask] - table.avg_v_linear[mask])
        rel /= table.avg_v_linear[mask]
        assert mask.sum() >= 3
        assert rel.max() < 0.05

    def test_small_mu_ordering(self, branches_16):
        table = compare_branches(
            branches_16[Diffusion.NONLINEAR], branches_16[Diffusion.LINEAR]
        )
        v_nl = np.interp(0.1, table.mu, table.avg_v_nonlinear)
        v_lin = np.interp(0.1, table.mu, table.avg_v_linear)
        assert v_nl > v_lin

    def test_parameter_mismatch_rejected(self, refuge_grid_16, branches_16):
        other = trace_branch(
            refuge_grid_16, make_params(lam=0.5), 0.2, ContinuationOptions()
        )
        with pytest.raises(ComparisonError):
            compare_branches(branches_16[Diffusion.NONLINEAR], other)

    def test_disjoint_ranges_rejected(self, branches_16):
        nl = branches_16[Diffusion.NONLINEAR]
        lin = branches_16[Diffusion.LINEAR]
        head = Branch(nl.variant, nl.params, nl.points[:5], nl.onset)
        tail = Branch(lin.variant, lin.params, lin.points[-5:], lin.onset)
        with pytest.raises(ComparisonError):
            compare_branches(head, tail)


class TestVariantConsistencyAtOnset:
    def test_first_order_agreement(self, refuge_grid_16):
        # at lam = 1 the kernels coincide, so states at the same mu differ by o(s)
        from refugebif.analytics import branch_slope
        from refugebif.newton import initial_guess_on_branch, newton_solve

        ratios = []
        for eps in (0.02, 0.01):
            mu = 0.5 * (1.0 - eps)
            states = {}
            s_eff = None
            for variant in BOTH:
                p = make_params(variant, mu=mu)
                s_star = (mu - 0.5) / branch_slope(refuge_grid_16, p)
                guess = initial_guess_on_branch(refuge_grid_16, p, s_star)
                solved, rep = newton_solve(p, guess)
                assert rep.converged and rep.classification is SolutionClass.POSITIVE
                states[variant] = solved
                s_eff = solved.v.values[refuge_grid_16.exterior_cells].mean()
            diff = max(
                np.abs(
                    states[Diffusion.NONLINEAR].u.values
                    - states[Diffusion.LINEAR].u.values
                ).max(),
                np.abs(
                    states[Diffusion.NONLINEAR].v.values
                    - states[Diffusion.LINEAR].v.values
                ).max(),
            )
            ratios.append(diff / s_eff)
        assert ratios[0] < 0.05
        assert ratios[1] < 0.7 * ratios[0]  # o(s): the relative gap shrinks with s

    @pytest.mark.parametrize("variant", BOTH)
    def test_normalized_shape_matches_kernel(self, refuge_grid_16, variant):
        # (lam - u)/s approaches the kernel profile linearly in s
        from refugebif.analytics import branch_slope, kernel_profile
        from refugebif.newton import initial_guess_on_branch, newton_solve

        p = make_params(variant, mu=0.49)
        kern = kernel_profile(refuge_grid_16, p).values
        s_star = (p.mu - 0.5) / branch_slope(refuge_grid_16, p)
        guess = initial_guess_on_branch(refuge_grid_16, p, s_star)
        solved, rep = newton_solve(p, guess)
        assert rep.converged
        s_eff = solved.v.values[refuge_grid_16.exterior_cells].mean()
        shape_dev = np.abs((p.lam - solved.u.values) / s_eff - kern).max()
        assert shape_dev < 0.2 * s_eff
