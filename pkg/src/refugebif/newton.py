"""Damped Newton solver for discrete steady states, with branch-form guesses."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.sparse.linalg import splu

from .errors import GuessError, ParameterError, SingularResponseError
from .geometry import Grid, Region, ScalarField
from .model import ModelParams, State, jacobian, residual
from . import analytics

# max-norm threshold below which a component counts as identically zero
ZERO_THRESHOLD = 1e-8


class SolutionClass(Enum):
    TRIVIAL = "trivial"
    SEMI_TRIVIAL = "semi_trivial"
    POSITIVE = "positive"
    INDEFINITE = "indefinite"


@dataclass(frozen=True)
class NewtonOptions:
    tol_residual: float = 1e-10
    max_iters: int = 50
    damping: float = 0.5
    min_step: float = 1e-8

    def __post_init__(self):
        if self.tol_residual <= 0.0:
            raise ParameterError("tol_residual must be positive")
        if not 0.0 < self.damping < 1.0:
            raise ParameterError("damping must lie in (0, 1)")
        if self.max_iters < 1 or self.min_step <= 0.0:
            raise ParameterError("max_iters >= 1 and min_step > 0 required")


@dataclass(frozen=True)
class NewtonReport:
    converged: bool
    iterations: int
    final_residual_norm: float
    positivity: bool
    classification: SolutionClass
    residual_history: tuple[float, ...]
    diagnostic: str = ""


def classify_state(state: State) -> tuple[SolutionClass, bool]:
    """Solution taxonomy by max-norm thresholding, plus a positivity flag."""
    u = state.u.values
    v_ext = state.v.values[state.grid.exterior_cells]
    positivity = bool(np.all(u > 0.0)) and bool(np.all(v_ext >= 0.0))
    u_abs = float(np.abs(u).max())
    v_abs = float(np.abs(v_ext).max(initial=0.0))
    if u_abs < ZERO_THRESHOLD and v_abs < ZERO_THRESHOLD:
        return SolutionClass.TRIVIAL, positivity
    if v_abs < ZERO_THRESHOLD and u.min() > ZERO_THRESHOLD:
        return SolutionClass.SEMI_TRIVIAL, positivity
    if u.min() > ZERO_THRESHOLD and v_ext.min(initial=np.inf) > ZERO_THRESHOLD:
        return SolutionClass.POSITIVE, positivity
    return SolutionClass.INDEFINITE, positivity


def _report(state, converged, iterations, history, diagnostic=""):
    cls, positivity = classify_state(state)
    return NewtonReport(
        converged=converged,
        iterations=iterations,
        final_residual_norm=history[-1],
        positivity=positivity,
        classification=cls,
        residual_history=tuple(history),
        diagnostic=diagnostic,
    )


def newton_solve(
    params: ModelParams,
    initial: State,
    opts: NewtonOptions | None = None,
) -> tuple[State, NewtonReport]:
    """Solve residual(params, .) = 0 by damped Newton from ``initial``.

    Failures (singular Jacobian, stalled backtracking, inadmissible iterates)
    are reported through the returned :class:`NewtonReport`, never raised.
    """
    opts = opts or NewtonOptions()
    grid = initial.grid
    x = initial.pack()
    try:
        f = residual(params, initial)
    except SingularResponseError as exc:
        return initial, _report(
            initial, False, 0, [np.inf], f"initial state inadmissible: {exc}"
        )
    norm = float(np.abs(f).max())
    history = [norm]

    iterations = 0
    diagnostic = ""
    while norm > opts.tol_residual and iterations < opts.max_iters:
        state = State.unpack(grid, x)
        try:
            lu = splu(jacobian(params, state).matrix.tocsc())
            delta = lu.solve(-f)
        except (RuntimeError, SingularResponseError) as exc:
            diagnostic = f"Newton step failed: {exc}"
            break
        if not np.all(np.isfinite(delta)):
            diagnostic = "non-finite Newton step (singular Jacobian)"
            break

        step = 1.0
        accepted = False
        while step >= opts.min_step:
            trial = x + step * delta
            try:
                f_trial = residual(params, State.unpack(grid, trial))
                trial_norm = float(np.abs(f_trial).max())
            except SingularResponseError:
                trial_norm = np.inf
            if trial_norm < norm:
                accepted = True
                break
            step *= opts.damping
        if not accepted:
            diagnostic = "backtracking stalled (no descent direction)"
            break

        x, f, norm = trial, f_trial, trial_norm
        iterations += 1
        history.append(norm)

    out = State.unpack(grid, x)
    return out, _report(out, norm <= opts.tol_residual, iterations, history, diagnostic)


def initial_guess_on_branch(grid: Grid, params: ModelParams, s: float) -> State:
    """First-order branch state (lam - s*kernel, s); valid for small s >= 0."""
    if s < 0.0:
        raise GuessError("branch parameter s must be non-negative")
    kern = analytics.kernel_profile(grid, params)
    u = params.lam - s * kern.values
    if u.min() <= 0.0:
        raise GuessError(
            f"s={s} drives the prey density non-positive; outside the onset regime"
        )
    v = np.zeros(grid.n_cells)
    v[grid.exterior_cells] = s
    return State(
        ScalarField(grid, u, Region.ALL),
        ScalarField(grid, v, Region.EXTERIOR),
    )
