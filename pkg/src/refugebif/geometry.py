"""Discrete habitat geometry: grid, refuge partition, Neumann operators, quadrature.

The habitat is an axis-aligned rectangle split into uniform cell-centered
finite volumes.  An optional refuge is a face-aligned rectangle strictly
inside the domain; its cells carry the REFUGE label, the rest are EXTERIOR.
Predators live on EXTERIOR cells only, with a no-flux condition on the
refuge boundary, so the exterior Laplacian simply drops every face that
touches a refuge cell.  All operators are assembled face by face, which
makes row sums vanish identically (discrete conservation).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import GeometryError, ParameterError

REFUGE = np.int8(0)
EXTERIOR = np.int8(1)

# slack for deciding that a refuge coordinate sits on a cell face
_ALIGN_RTOL = 1e-9


class Region(Enum):
    """Where a field lives, or what an operator/integral ranges over."""

    ALL = "all"
    EXTERIOR = "exterior"


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform cell-centered mesh with a refuge partition.

    Cells are indexed flat as ``k = j * n_x + i`` (x fastest).
    ``exterior_cells`` lists EXTERIOR flat indices in increasing order and
    ``cell_to_exterior`` is its inverse (-1 on refuge cells).  Instances are
    immutable after construction; ``_cache`` only memoizes operators that
    are pure functions of the grid.
    """

    n_x: int
    n_y: int
    h_x: float
    h_y: float
    domain_length: tuple[float, float]
    refuge_box: tuple[float, float, float, float] | None
    cell_region: np.ndarray
    exterior_cells: np.ndarray
    cell_to_exterior: np.ndarray
    cell_x: np.ndarray
    cell_y: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def n_cells(self) -> int:
        return self.n_x * self.n_y

    @property
    def n_exterior(self) -> int:
        return int(self.exterior_cells.size)

    @property
    def cell_area(self) -> float:
        return self.h_x * self.h_y

    @property
    def refuge_mask(self) -> np.ndarray:
        return self.cell_region == REFUGE


@dataclass(frozen=True)
class ScalarField:
    """One real value per grid cell with a declared support region.

    Fields supported on EXTERIOR must be exactly zero on refuge cells; the
    constructor enforces this and freezes the value array.
    """

    grid: Grid
    values: np.ndarray
    support: Region = Region.ALL

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != (self.grid.n_cells,):
            raise ValueError(
                f"field has {vals.shape} values, grid has {self.grid.n_cells} cells"
            )
        if self.support is Region.EXTERIOR and np.any(vals[self.grid.refuge_mask] != 0.0):
            raise GeometryError("EXTERIOR-supported field has nonzero refuge values")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, grid: Grid, value: float, support: Region = Region.ALL) -> "ScalarField":
        vals = np.full(grid.n_cells, float(value))
        if support is Region.EXTERIOR:
            vals[grid.refuge_mask] = 0.0
        return cls(grid, vals, support)

    def as_array2d(self) -> np.ndarray:
        """Values reshaped to (n_y, n_x) for inspection or dumps."""
        return self.values.reshape(self.grid.n_y, self.grid.n_x)


@dataclass(frozen=True)
class FieldBlock:
    """Contiguous slice of a stacked unknown vector belonging to one field."""

    name: str
    offset: int
    cells: np.ndarray  # unknown slot -> flat cell index


@dataclass(frozen=True)
class SparseOperator:
    """Square sparse linear map over stacked field unknowns."""

    matrix: sp.csr_matrix
    blocks: tuple[FieldBlock, ...]

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x

    def slot_info(self, slot: int) -> tuple[str, int]:
        """Map an unknown index back to its (field name, flat cell index)."""
        for blk in self.blocks:
            if blk.offset <= slot < blk.offset + blk.cells.size:
                return blk.name, int(blk.cells[slot - blk.offset])
        raise IndexError(slot)


def _face_index(coord: float, h: float, n: int, label: str) -> int:
    t = coord / h
    k = round(t)
    if abs(t - k) > _ALIGN_RTOL * max(1.0, abs(t)) or not (0 <= k <= n):
        raise GeometryError(
            f"refuge box coordinate {label}={coord} is not aligned to a cell face "
            f"(cell width {h})"
        )
    return int(k)


def build_grid(
    n_x: int,
    n_y: int | None = None,
    domain_length: tuple[float, float] = (1.0, 1.0),
    refuge_box: tuple[float, float, float, float] | None = None,
) -> Grid:
    """Build the discrete domain with its refuge partition.

    ``refuge_box = (x0, y0, x1, y1)`` must be aligned to cell faces and
    strictly inside the domain (its closure may not touch the outer
    boundary).  ``None`` means no refuge: every cell is EXTERIOR.
    """
    if n_y is None:
        n_y = n_x
    if n_x < 4 or n_y < 4:
        raise GeometryError(f"grid needs at least 4 cells per axis, got {n_x}x{n_y}")
    length_x, length_y = float(domain_length[0]), float(domain_length[1])
    if length_x <= 0.0 or length_y <= 0.0:
        raise GeometryError("domain side lengths must be positive")
    h_x = length_x / n_x
    h_y = length_y / n_y

    region = np.full(n_x * n_y, EXTERIOR, dtype=np.int8)
    box = None
    if refuge_box is not None:
        x0, y0, x1, y1 = (float(c) for c in refuge_box)
        i0 = _face_index(x0, h_x, n_x, "x0")
        i1 = _face_index(x1, h_x, n_x, "x1")
        j0 = _face_index(y0, h_y, n_y, "y0")
        j1 = _face_index(y1, h_y, n_y, "y1")
        if i0 >= i1 or j0 >= j1:
            raise GeometryError("refuge box is empty or inverted")
        if i0 < 1 or j0 < 1 or i1 > n_x - 1 or j1 > n_y - 1:
            raise GeometryError("refuge box must be strictly inside the domain")
        cols, rows = np.meshgrid(np.arange(i0, i1), np.arange(j0, j1))
        region[(rows * n_x + cols).ravel()] = REFUGE
        box = (x0, y0, x1, y1)

    exterior = np.flatnonzero(region == EXTERIOR)
    inverse = np.full(n_x * n_y, -1, dtype=np.int64)
    inverse[exterior] = np.arange(exterior.size)

    xs = (np.arange(n_x) + 0.5) * h_x
    ys = (np.arange(n_y) + 0.5) * h_y
    cell_x = np.tile(xs, n_y)
    cell_y = np.repeat(ys, n_x)
    for arr in (region, exterior, inverse, cell_x, cell_y):
        arr.setflags(write=False)

    return Grid(
        n_x=n_x,
        n_y=n_y,
        h_x=h_x,
        h_y=h_y,
        domain_length=(length_x, length_y),
        refuge_box=box,
        cell_region=region,
        exterior_cells=exterior,
        cell_to_exterior=inverse,
        cell_x=cell_x,
        cell_y=cell_y,
    )


def _interior_faces(grid: Grid, region: Region):
    """(p, q, weight) triples for every face kept by the region variant.

    Weights are computed as (n/L)^2 rather than 1/h^2 so that they are exact
    integers on unit-length domains, which makes row sums cancel exactly.
    """
    idx = np.arange(grid.n_cells).reshape(grid.n_y, grid.n_x)
    px, qx = idx[:, :-1].ravel(), idx[:, 1:].ravel()
    py, qy = idx[:-1, :].ravel(), idx[1:, :].ravel()
    if region is Region.EXTERIOR:
        ext = grid.cell_region == EXTERIOR
        keep = ext[px] & ext[qx]
        px, qx = px[keep], qx[keep]
        keep = ext[py] & ext[qy]
        py, qy = py[keep], qy[keep]
    wx = (grid.n_x / grid.domain_length[0]) ** 2
    wy = (grid.n_y / grid.domain_length[1]) ** 2
    return (px, qx, wx), (py, qy, wy)


def _assemble_laplacian(grid: Grid, region: Region) -> sp.csr_matrix:
    rows, cols, vals = [], [], []
    for p, q, w in _interior_faces(grid, region):
        ww = np.full(p.size, w)
        rows.extend([p, q, p, q])
        cols.extend([q, p, p, q])
        vals.extend([ww, ww, -ww, -ww])
    n = grid.n_cells
    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    ).tocsr()
    mat.sum_duplicates()
    return mat


def neumann_laplacian(grid: Grid, region: Region = Region.ALL) -> SparseOperator:
    """5-point no-flux Laplacian on the full domain or the exterior region.

    Rows sum to zero exactly; the EXTERIOR variant keeps only faces joining
    two exterior cells (no-flux across the refuge boundary), leaving refuge
    rows and columns empty.
    """
    key = ("laplacian", region)
    op = grid._cache.get(key)
    if op is None:
        mat = _assemble_laplacian(grid, region)
        blocks = (FieldBlock("scalar", 0, np.arange(grid.n_cells)),)
        op = SparseOperator(mat, blocks)
        grid._cache[key] = op
    return op


def integrate(f: ScalarField, region: Region = Region.ALL) -> float:
    """Midpoint quadrature: sum of cell values times cell area over the region."""
    if region is Region.ALL:
        total = float(f.values.sum())
    else:
        total = float(f.values[f.grid.exterior_cells].sum())
    return total * f.grid.cell_area


def predation_field(grid: Grid, b: float) -> ScalarField:
    """Attack-efficiency field: b outside the refuge, exactly 0 inside it."""
    if b <= 0.0:
        raise ParameterError(f"attack efficiency b must be positive, got {b}")
    vals = np.where(grid.refuge_mask, 0.0, float(b))
    return ScalarField(grid, vals, Region.ALL)


def exterior_connected(grid: Grid) -> bool:
    """Whether the predator habitat forms a single connected component."""
    if grid.n_exterior == 0:
        return False
    lap = neumann_laplacian(grid, Region.EXTERIOR).matrix
    ext = grid.exterior_cells
    sub = lap[ext][:, ext]
    n_comp = connected_components(sub, directed=False, return_labels=False)
    return int(n_comp) == 1
