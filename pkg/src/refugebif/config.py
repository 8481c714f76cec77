"""Run configuration: JSON parsing with strict key checking, eager validation.

Every block is validated (grid built, parameter/option objects constructed)
before any output file is created, so an invalid config can never leave
partial results behind.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .continuation import ContinuationOptions
from .errors import ConfigError
from .geometry import Grid, build_grid
from .model import Diffusion, ModelParams
from .newton import NewtonOptions
from .timestepping import TimeOptions

DEFAULT_REFUGE_BOX = (0.375, 0.375, 0.625, 0.625)
DEFAULT_MU_MIN = 1e-3

_TOP_KEYS = {"geometry", "params", "newton", "continuation", "time", "output"}


@dataclass(frozen=True)
class InitialData:
    """Constant initial fields for simulation runs (v is masked to the exterior)."""

    u: float = 0.5
    v: float = 0.1


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    emit_svg: bool = True
    snapshot_every: int = 50


@dataclass(frozen=True)
class RunConfig:
    grid: Grid
    params: ModelParams
    newton: NewtonOptions
    continuation: ContinuationOptions
    mu_min: float
    time: TimeOptions
    initial: InitialData
    output: OutputConfig


def _check_keys(block: dict, allowed: set[str], where: str) -> None:
    unknown = set(block) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in '{where}' block")


def _number(block: dict, key: str, default, where: str, kind=float):
    value = block.get(key, default)
    try:
        return kind(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"'{where}.{key}' must be a number, got {value!r}") from exc


def _geometry(block: dict) -> Grid:
    _check_keys(block, {"n", "n_x", "n_y", "domain_length", "refuge_box"}, "geometry")
    if "n" in block and ("n_x" in block or "n_y" in block):
        raise ConfigError("'geometry' takes either 'n' or 'n_x'/'n_y', not both")
    n_x = _number(block, "n_x", block.get("n", 64), "geometry", int)
    n_y = _number(block, "n_y", n_x, "geometry", int)
    length = block.get("domain_length", 1.0)
    if isinstance(length, (int, float)):
        length = (float(length), float(length))
    elif isinstance(length, (list, tuple)) and len(length) == 2:
        length = (float(length[0]), float(length[1]))
    else:
        raise ConfigError("'geometry.domain_length' must be a number or a pair")
    box = block.get("refuge_box", DEFAULT_REFUGE_BOX)
    if box is not None:
        if not (isinstance(box, (list, tuple)) and len(box) == 4):
            raise ConfigError("'geometry.refuge_box' must be null or [x0, y0, x1, y1]")
        box = tuple(float(c) for c in box)
    return build_grid(n_x, n_y, domain_length=length, refuge_box=box)


def _params(block: dict) -> ModelParams:
    _check_keys(block, {"lambda", "mu", "c", "m", "b", "d", "variant"}, "params")
    variant = block.get("variant", "nonlinear")
    try:
        variant = Diffusion(variant)
    except ValueError as exc:
        raise ConfigError(
            f"'params.variant' must be 'nonlinear' or 'linear', got {variant!r}"
        ) from exc
    return ModelParams(
        lam=_number(block, "lambda", 1.0, "params"),
        mu=_number(block, "mu", 0.4, "params"),
        c=_number(block, "c", 1.0, "params"),
        m=_number(block, "m", 1.0, "params"),
        b=_number(block, "b", 1.0, "params"),
        d=_number(block, "d", 1.0, "params"),
        variant=variant,
    )


def _options(block: dict, cls, where: str, int_keys=()):
    allowed = {f.name for f in fields(cls)}
    _check_keys(block, allowed, where)
    kwargs = {}
    for key, value in block.items():
        kind = int if key in int_keys else float
        kwargs[key] = _number(block, key, value, where, kind)
    return cls(**kwargs)


def _time_block(block: dict) -> tuple[TimeOptions, InitialData]:
    allowed = {"dt", "t_max", "steady_tol", "clamp_negative", "initial_u", "initial_v"}
    _check_keys(block, allowed, "time")
    initial = InitialData(
        u=_number(block, "initial_u", InitialData.u, "time"),
        v=_number(block, "initial_v", InitialData.v, "time"),
    )
    opts = TimeOptions(
        dt=_number(block, "dt", TimeOptions.dt, "time"),
        t_max=_number(block, "t_max", TimeOptions.t_max, "time"),
        steady_tol=_number(block, "steady_tol", TimeOptions.steady_tol, "time"),
        clamp_negative=bool(block.get("clamp_negative", TimeOptions.clamp_negative)),
    )
    return opts, initial


def _continuation_block(block: dict) -> tuple[ContinuationOptions, float]:
    allowed = {
        "mu_min",
        "ds_initial_factor",
        "ds_max_factor",
        "ds_min",
        "seed_avg_v_factor",
        "grow_iters",
        "max_points",
    }
    _check_keys(block, allowed, "continuation")
    mu_min = _number(block, "mu_min", DEFAULT_MU_MIN, "continuation")
    kwargs = {}
    for key in allowed - {"mu_min"}:
        if key in block:
            kind = int if key in ("grow_iters", "max_points") else float
            kwargs[key] = _number(block, key, block[key], "continuation", kind)
    return ContinuationOptions(**kwargs), mu_min


def _output(block: dict) -> OutputConfig:
    _check_keys(block, {"directory", "emit_svg", "snapshot_every"}, "output")
    directory = block.get("directory", OutputConfig.directory)
    if not isinstance(directory, str):
        raise ConfigError("'output.directory' must be a string")
    return OutputConfig(
        directory=directory,
        emit_svg=bool(block.get("emit_svg", OutputConfig.emit_svg)),
        snapshot_every=_number(
            block, "snapshot_every", OutputConfig.snapshot_every, "output", int
        ),
    )


def parse_config(data: dict) -> RunConfig:
    """Validate a config mapping and build every referenced object eagerly."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    _check_keys(data, _TOP_KEYS, "top-level")
    for name in _TOP_KEYS:
        if name in data and not isinstance(data[name], dict):
            raise ConfigError(f"'{name}' block must be a JSON object")
    grid = _geometry(data.get("geometry", {}))
    params = _params(data.get("params", {}))
    newton = _options(data.get("newton", {}), NewtonOptions, "newton", int_keys=("max_iters",))
    cont, mu_min = _continuation_block(data.get("continuation", {}))
    if "newton" in data:
        # an explicit newton block also tunes the continuation corrector
        cont = replace(cont, corrector=newton)
    time_opts, initial = _time_block(data.get("time", {}))
    output = _output(data.get("output", {}))
    return RunConfig(
        grid=grid,
        params=params,
        newton=newton,
        continuation=cont,
        mu_min=mu_min,
        time=time_opts,
        initial=initial,
        output=output,
    )


def load_config(path: str | Path | None) -> RunConfig:
    """Load and validate a JSON config file; None gives the built-in defaults."""
    if path is None:
        return parse_config({})
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    return parse_config(data)
