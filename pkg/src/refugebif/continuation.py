"""Pseudo-arclength tracing of the positive-solution branch in mu.

The branch is seeded just below the onset mu_lambda with two points solved
under the affine constraint avg_v = s (mu free), which steps off the
predator-free curve without falling back into its Newton basin.  From there
a secant predictor plus an arclength-constrained corrector walks the branch
down to mu_min, with the last point retargeted to land on mu_min exactly.
Arclength is measured in the mesh-independent metric
||(dU, dmu)||^2 = cell_area * |dU|^2 + dmu^2.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .analytics import BifurcationData, bifurcation_data
from .errors import ComparisonError, EstimationError, GeometryError, NumericalError, ParameterError, SingularResponseError
from .geometry import Grid, exterior_connected
from .model import Diffusion, ModelParams, State, jacobian, residual
from .newton import NewtonOptions, SolutionClass, classify_state, newton_solve


@dataclass(frozen=True)
class ContinuationOptions:
    """Step-control knobs; scale factors are relative to the onset mu_lambda."""

    ds_initial_factor: float = 1e-3
    ds_max_factor: float = 0.05
    ds_min: float = 1e-6
    seed_avg_v_factor: float = 1e-3  # first point's avg_v, relative to lam
    grow_iters: int = 3              # double the step when the corrector is this fast
    max_points: int = 5000
    corrector: NewtonOptions = field(default_factory=lambda: NewtonOptions(max_iters=12))


@dataclass(frozen=True)
class BranchPoint:
    mu: float
    state: State
    avg_v: float
    max_v: float
    min_u: float
    newton_iters: int


@dataclass(frozen=True)
class Branch:
    """Ordered continuation points with strictly decreasing mu."""

    variant: Diffusion
    params: ModelParams
    points: tuple[BranchPoint, ...]
    onset: BifurcationData
    truncated: bool = False
    diagnostic: str = ""

    @property
    def mus(self) -> np.ndarray:
        return np.array([p.mu for p in self.points])

    @property
    def avg_vs(self) -> np.ndarray:
        return np.array([p.avg_v for p in self.points])


@dataclass(frozen=True)
class BranchComparison:
    """Two branches interpolated onto a common, increasing mu grid."""

    mu: np.ndarray
    avg_v_nonlinear: np.ndarray
    avg_v_linear: np.ndarray
    ratio: np.ndarray


class _Corrector:
    """Newton on [residual(U, mu); affine constraint] with backtracking."""

    def __init__(self, grid: Grid, params: ModelParams, opts: NewtonOptions):
        self.grid = grid
        self.params = params
        self.opts = opts
        self.n_cells = grid.n_cells
        self.n_unknowns = grid.n_cells + grid.n_exterior

    def _merit(self, y, c_row, c_mu, c_target):
        try:
            f = residual(replace(self.params, mu=y[-1]), State.unpack(self.grid, y[:-1]))
        except SingularResponseError:
            return None, np.inf
        g = float(c_row @ y[:-1] + c_mu * y[-1] - c_target)
        return np.concatenate([f, [g]]), max(float(np.abs(f).max()), abs(g))

    def solve(self, y0, c_row, c_mu, c_target):
        """Return (y, iterations, converged); the constraint is affine in y."""
        opts = self.opts
        y = y0.copy()
        fg, merit = self._merit(y, c_row, c_mu, c_target)
        if fg is None:
            return y, 0, False
        for it in range(1, opts.max_iters + 1):
            if merit <= opts.tol_residual:
                return y, it - 1, True
            state = State.unpack(self.grid, y[:-1])
            params_mu = replace(self.params, mu=y[-1])
            try:
                jac = jacobian(params_mu, state).matrix
            except SingularResponseError:
                return y, it, False
            # d(residual)/d(mu): only the predator rows depend on mu, via -mu*v
            f_mu = np.zeros(self.n_unknowns)
            f_mu[self.n_cells:] = -y[self.n_cells:-1]
            bordered = sp.bmat(
                [
                    [jac, f_mu[:, None]],
                    [sp.csr_matrix(c_row[None, :]), sp.csr_matrix([[c_mu]])],
                ],
                format="csc",
            )
            try:
                delta = splu(bordered).solve(-fg)
            except RuntimeError:
                return y, it, False
            if not np.all(np.isfinite(delta)):
                return y, it, False

            step = 1.0
            accepted = False
            while step >= opts.min_step:
                trial = y + step * delta
                fg_trial, merit_trial = self._merit(trial, c_row, c_mu, c_target)
                if merit_trial < merit:
                    accepted = True
                    break
                step *= opts.damping
            if not accepted:
                return y, it, False
            y, fg, merit = trial, fg_trial, merit_trial
        return y, opts.max_iters, merit <= opts.tol_residual


def _is_positive(grid: Grid, y: np.ndarray) -> bool:
    cls, _ = classify_state(State.unpack(grid, y[:-1]))
    return cls is SolutionClass.POSITIVE


def trace_branch(
    grid: Grid,
    params: ModelParams,
    mu_min: float,
    opts: ContinuationOptions | None = None,
) -> Branch:
    """Trace the positive branch from just below the onset down to mu_min.

    Corrector failure after exhausting step halvings truncates the branch
    (reported through ``Branch.truncated`` / ``Branch.diagnostic``); only a
    failure to seed the very first point raises.
    """
    opts = opts or ContinuationOptions()
    onset = bifurcation_data(grid, params)
    mu_l = onset.mu_lambda
    if not 0.0 <= mu_min < mu_l:
        raise ParameterError(f"mu_min must lie in [0, {mu_l}), got {mu_min}")
    if not exterior_connected(grid):
        raise GeometryError("branch tracing needs a connected exterior region")

    n_cells = grid.n_cells
    n_unknowns = n_cells + grid.n_exterior
    area_weight = grid.cell_area
    corrector = _Corrector(grid, params, opts.corrector)

    # avg_v over the exterior as an affine functional of the packed unknowns
    avg_row = np.zeros(n_unknowns)
    avg_row[n_cells:] = area_weight / onset.omega1_area

    kern = onset.kernel_profile.values
    slope = onset.slope_at_onset

    def seed_point(s_target, y_guess):
        y, iters, ok = corrector.solve(y_guess, avg_row, 0.0, s_target)
        if not ok or not _is_positive(grid, y):
            raise NumericalError(
                f"failed to land on the positive branch at avg_v={s_target:g}"
            )
        return y, iters

    s1 = opts.seed_avg_v_factor * params.lam
    guess = np.empty(n_unknowns + 1)
    guess[:n_cells] = params.lam - s1 * kern
    guess[n_cells:-1] = s1
    guess[-1] = mu_l + slope * s1
    y1, iters1 = seed_point(s1, guess)

    guess = y1.copy()
    guess[:n_cells] -= s1 * kern
    guess[n_cells:-1] += s1
    guess[-1] += slope * s1
    y2, iters2 = seed_point(2.0 * s1, guess)

    def make_point(y, iters):
        state = State.unpack(grid, y[:-1])
        v_ext = state.v.values[grid.exterior_cells]
        return BranchPoint(
            mu=float(y[-1]),
            state=state,
            avg_v=float(v_ext.sum() * area_weight / onset.omega1_area),
            max_v=float(v_ext.max()),
            min_u=float(state.u.values.min()),
            newton_iters=iters,
        )

    ys = [y1, y2]
    points = [make_point(y1, iters1), make_point(y2, iters2)]
    if points[1].mu >= points[0].mu:
        raise NumericalError("seed points do not descend in mu; onset data inconsistent")
    if points[0].mu <= mu_min:
        raise ParameterError(
            f"mu_min={mu_min} is above the seeded branch start mu={points[0].mu:g}"
        )

    def weighted_norm(dy):
        return float(np.sqrt(area_weight * (dy[:-1] @ dy[:-1]) + dy[-1] ** 2))

    def retarget(y_from, target_mu):
        """Fixed-mu Newton refinement used to land exactly on mu_min."""
        state0 = State.unpack(grid, y_from[:-1])
        solved, rep = newton_solve(
            replace(params, mu=target_mu), state0, opts.corrector
        )
        if rep.converged and rep.classification is SolutionClass.POSITIVE:
            y = np.concatenate([solved.pack(), [target_mu]])
            return y, rep.iterations
        return None, 0

    truncated = False
    diagnostic = ""
    ds = opts.ds_initial_factor * mu_l
    ds_max = opts.ds_max_factor * mu_l

    while points[-1].mu > mu_min:
        if len(points) >= opts.max_points:
            truncated = True
            diagnostic = f"point budget ({opts.max_points}) exhausted"
            break
        tangent = ys[-1] - ys[-2]
        tangent /= weighted_norm(tangent)
        if tangent[-1] >= 0.0:
            truncated = True
            diagnostic = "secant tangent stopped descending in mu"
            break

        accepted = None
        while True:
            y_pred = ys[-1] + ds * tangent
            if y_pred[-1] <= mu_min:
                # final step: land on mu_min exactly, or creep closer first
                y_ret, ret_iters = retarget(ys[-1], mu_min)
                if y_ret is not None:
                    accepted = (y_ret, ret_iters)
                    break
            else:
                c_row = area_weight * tangent[:-1]
                c_mu = float(tangent[-1])
                c_target = float(c_row @ y_pred[:-1] + c_mu * y_pred[-1])
                y_new, iters, ok = corrector.solve(y_pred, c_row, c_mu, c_target)
                if ok and y_new[-1] < ys[-1][-1] and _is_positive(grid, y_new):
                    accepted = (y_new, iters)
                    break
            ds *= 0.5
            if ds < opts.ds_min:
                truncated = True
                diagnostic = f"corrector failed at the minimum step near mu={ys[-1][-1]:g}"
                break
        if accepted is None:
            break

        y_new, iters = accepted
        ys.append(y_new)
        points.append(make_point(y_new, iters))
        if y_new[-1] <= mu_min:
            break
        if iters <= opts.grow_iters:
            ds = min(2.0 * ds, ds_max)

    return Branch(
        variant=params.variant,
        params=params,
        points=tuple(points),
        onset=onset,
        truncated=truncated,
        diagnostic=diagnostic,
    )


def solve_at_mu(branch: Branch, mu: float, opts: NewtonOptions | None = None):
    """Newton-refine a branch state at an exact mu, seeding from the nearest point.

    Returns (state, report); useful for cross-solver comparisons at a target mu.
    """
    if not branch.points:
        raise EstimationError("branch has no points")
    nearest = min(branch.points, key=lambda p: abs(p.mu - mu))
    return newton_solve(
        replace(branch.params, mu=mu), nearest.state, opts or NewtonOptions()
    )


def detect_onset(branch: Branch, n_points: int = 5) -> float:
    """Estimate the onset mu by extrapolating (avg_v, mu) linearly to avg_v = 0."""
    pts = branch.points
    if len(pts) < 3:
        raise EstimationError(
            f"onset estimation needs at least 3 points near onset, got {len(pts)}"
        )
    k = min(n_points, len(pts))
    s = np.array([p.avg_v for p in pts[:k]])
    mu = np.array([p.mu for p in pts[:k]])
    coeffs, *_ = np.linalg.lstsq(np.column_stack([np.ones(k), s]), mu, rcond=None)
    return float(coeffs[0])


def compare_branches(nl: Branch, lin: Branch) -> BranchComparison:
    """Interpolate two branches onto their shared mu range and tabulate ratios."""
    p, q = nl.params, lin.params
    if (p.lam, p.c, p.m, p.b) != (q.lam, q.c, q.m, q.b):
        raise ComparisonError("branches were traced at different model parameters")
    mu_a, v_a = nl.mus[::-1], nl.avg_vs[::-1]
    mu_b, v_b = lin.mus[::-1], lin.avg_vs[::-1]
    lo = max(mu_a[0], mu_b[0])
    hi = min(mu_a[-1], mu_b[-1])
    if lo >= hi:
        raise ComparisonError("branches cover disjoint mu ranges")
    mu_common = np.unique(np.concatenate([mu_a, mu_b]))
    mu_common = mu_common[(mu_common >= lo) & (mu_common <= hi)]
    va = np.interp(mu_common, mu_a, v_a)
    vb = np.interp(mu_common, mu_b, v_b)
    return BranchComparison(
        mu=mu_common,
        avg_v_nonlinear=va,
        avg_v_linear=vb,
        ratio=va / vb,
    )
