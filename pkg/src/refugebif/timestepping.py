"""Semi-implicit (IMEX) integrator for the parabolic predator-prey system.

Diffusion is implicit with coefficients frozen at the current step (prey
flux div(u^n grad u^{n+1}), predator d * L v^{n+1}); the reaction terms
stay explicit.  Fixed points of one step are exactly the
discrete steady states of the model residual, independent of dt.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import ParameterError, StepError
from .geometry import Grid, Region, ScalarField, neumann_laplacian, predation_field, _interior_faces
from .model import Diffusion, ModelParams, State, _holling_denominator

# clamped negative-undershoot budget before a run is flagged
CLAMP_WARN_FRACTION = 1e-3


@dataclass(frozen=True)
class TimeOptions:
    dt: float = 1e-3
    t_max: float = 500.0
    steady_tol: float = 1e-8
    clamp_negative: bool = True

    def __post_init__(self):
        if self.dt <= 0.0 or self.steady_tol <= 0.0 or self.t_max < 0.0:
            raise ParameterError("dt > 0, steady_tol > 0 and t_max >= 0 required")


class _Stepper:
    """Caches everything constant across steps for one (params, grid, dt)."""

    def __init__(self, params: ModelParams, grid: Grid, dt: float):
        self.params = params
        self.grid = grid
        self.dt = dt
        self.bf = predation_field(grid, params.b).values
        self.ext = grid.exterior_cells
        n_ext = grid.n_exterior

        lap_ext = neumann_laplacian(grid, Region.EXTERIOR).matrix
        pred_matrix = (
            sp.identity(n_ext, format="csr") / dt
            - params.d * lap_ext[self.ext][:, self.ext]
        )
        self.pred_lu = splu(pred_matrix.tocsc())

        self.lap_all = neumann_laplacian(grid, Region.ALL).matrix
        if params.variant is Diffusion.LINEAR:
            prey_matrix = sp.identity(grid.n_cells, format="csr") / dt - self.lap_all
            self.prey_lu = splu(prey_matrix.tocsc())
        else:
            self.prey_lu = None
            faces_x, faces_y = _interior_faces(grid, Region.ALL)
            self._faces = (faces_x, faces_y)

    def _frozen_flux_matrix(self, u: np.ndarray) -> sp.csc_matrix:
        """div(ubar grad .) with arithmetic face means of the frozen u."""
        rows, cols, vals = [], [], []
        for p, q, w in self._faces:
            coeff = 0.5 * (u[p] + u[q]) * w
            rows.extend([p, q, p, q])
            cols.extend([q, p, p, q])
            vals.extend([coeff, coeff, -coeff, -coeff])
        n = self.grid.n_cells
        return sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(n, n),
        ).tocsc()

    def advance(self, u: np.ndarray, v_ext: np.ndarray):
        """One IMEX step on raw arrays; returns (u_new, v_ext_new)."""
        params, dt, ext = self.params, self.dt, self.ext
        den = _holling_denominator(params, u)
        v_full = np.zeros(self.grid.n_cells)
        v_full[ext] = v_ext

        prey_reaction = params.lam * u - u * u - self.bf * u * v_full / den
        try:
            if self.prey_lu is not None:
                u_new = self.prey_lu.solve(u / dt + prey_reaction)
            else:
                flux = self._frozen_flux_matrix(u)
                matrix = sp.identity(self.grid.n_cells, format="csc") / dt - flux
                u_new = splu(matrix).solve(u / dt + prey_reaction)
            pred_reaction = -params.mu * v_ext + params.c * u[ext] * v_ext / den[ext]
            v_new = self.pred_lu.solve(v_ext / dt + pred_reaction)
        except RuntimeError as exc:
            raise StepError(f"implicit diffusion solve failed: {exc}") from exc
        return u_new, v_new


def step(params: ModelParams, state: State, dt: float) -> State:
    """Advance one semi-implicit step (no clamping; refuge v stays exactly 0)."""
    if dt <= 0.0:
        raise ParameterError("dt must be positive")
    grid = state.grid
    u_new, v_new = _Stepper(params, grid, dt).advance(
        state.u.values, state.v.values[grid.exterior_cells]
    )
    v_full = np.zeros(grid.n_cells)
    v_full[grid.exterior_cells] = v_new
    return State(
        ScalarField(grid, u_new, Region.ALL),
        ScalarField(grid, v_full, Region.EXTERIOR),
    )


def evolve_to_steady(
    params: ModelParams,
    initial: State,
    opts: TimeOptions | None = None,
    observer=None,
) -> tuple[State, bool]:
    """Integrate until the state change per unit time drops below steady_tol.

    Hitting t_max first is reported through the flag, not an error.  The
    optional ``observer(step_index, t, state, clamped_cells)`` is called
    after every step.  Runs clamping more than 0.1% of cell-steps are
    flagged with a RuntimeWarning.
    """
    opts = opts or TimeOptions()
    grid = initial.grid
    stepper = _Stepper(params, grid, opts.dt)
    u = initial.u.values.copy()
    v_ext = initial.v.values[grid.exterior_cells].copy()

    n_steps = int(np.floor(opts.t_max / opts.dt + 1e-12))
    n_slots = grid.n_cells + grid.n_exterior
    clamped_total = 0
    steady = False
    t = 0.0
    for k in range(1, n_steps + 1):
        u_new, v_new = stepper.advance(u, v_ext)
        clamped = 0
        if opts.clamp_negative:
            clamped = int((u_new < 0.0).sum() + (v_new < 0.0).sum())
            if clamped:
                np.maximum(u_new, 0.0, out=u_new)
                np.maximum(v_new, 0.0, out=v_new)
        clamped_total += clamped
        t = k * opts.dt

        change = max(
            float(np.abs(u_new - u).max()),
            float(np.abs(v_new - v_ext).max(initial=0.0)),
        ) / opts.dt
        u, v_ext = u_new, v_new
        if observer is not None:
            v_full = np.zeros(grid.n_cells)
            v_full[grid.exterior_cells] = v_ext
            observer(
                k,
                t,
                State(
                    ScalarField(grid, u, Region.ALL),
                    ScalarField(grid, v_full, Region.EXTERIOR),
                ),
                clamped,
            )
        if change < opts.steady_tol:
            steady = True
            break

    if n_steps > 0 and clamped_total > CLAMP_WARN_FRACTION * n_slots * max(1, k):
        warnings.warn(
            f"clamped {clamped_total} negative cell-steps "
            f"({clamped_total / (n_slots * k):.2%} of the run); the degenerate "
            "diffusion left its admissible regime",
            RuntimeWarning,
            stacklevel=2,
        )
    v_full = np.zeros(grid.n_cells)
    v_full[grid.exterior_cells] = v_ext
    final = State(
        ScalarField(grid, u, Region.ALL),
        ScalarField(grid, v_full, Region.EXTERIOR),
    )
    return final, steady
