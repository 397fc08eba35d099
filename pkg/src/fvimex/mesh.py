"""Uniform grids, cell-average projection and grid norms."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .errors import GridError

MIN_CELLS = 3


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform partition of ``[s_min, s_max]`` into ``n_cells`` cells."""

    s_min: float
    s_max: float
    n_cells: int
    ds: float = field(init=False)
    edges: np.ndarray = field(init=False, repr=False)
    centers: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if not (np.isfinite(self.s_min) and np.isfinite(self.s_max)) or self.s_max <= self.s_min:
            raise GridError(f"degenerate interval [{self.s_min}, {self.s_max}]")
        if int(self.n_cells) != self.n_cells or self.n_cells < MIN_CELLS:
            raise GridError(f"need an integer n_cells >= {MIN_CELLS}, got {self.n_cells}")
        ds = (self.s_max - self.s_min) / self.n_cells
        edges = self.s_min + ds * np.arange(self.n_cells + 1)
        edges[-1] = self.s_max
        centers = 0.5 * (edges[:-1] + edges[1:])
        edges.flags.writeable = False
        centers.flags.writeable = False
        object.__setattr__(self, "n_cells", int(self.n_cells))
        object.__setattr__(self, "ds", ds)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "centers", centers)

    @property
    def width(self) -> float:
        return self.s_max - self.s_min


@dataclass(frozen=True, eq=False)
class State:
    """Cell averages at one time level."""

    values: np.ndarray
    time: float = 0.0

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        if values.ndim != 1:
            raise ValueError("state values must be one-dimensional")
        if not np.all(np.isfinite(values)):
            raise ValueError("state values must be finite")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size


def build_grid(s_min: float, s_max: float, n_cells: int) -> Grid:
    return Grid(float(s_min), float(s_max), n_cells)


def project_initial(
    grid: Grid,
    payoff: Callable[[np.ndarray], np.ndarray],
    breakpoints: Iterable[float] = (),
) -> State:
    """Cell averages of ``payoff``.

    Each cell is split at the breakpoints it contains and every piece is
    integrated with its midpoint value, which is exact for functions that
    are linear between breakpoints, jumps included.
    """
    edges = grid.edges
    inner = sorted(b for b in set(float(b) for b in breakpoints) if grid.s_min < b < grid.s_max)
    if not inner:
        return State(payoff(grid.centers), 0.0)

    # merge edges with breakpoints; every consecutive pair is one linear piece
    points = np.union1d(edges, np.asarray(inner))
    lengths = np.diff(points)
    mids = 0.5 * (points[:-1] + points[1:])
    piece_integrals = lengths * payoff(mids)
    owner = np.clip(np.searchsorted(edges, mids, side="right") - 1, 0, grid.n_cells - 1)
    sums = np.bincount(owner, weights=piece_integrals, minlength=grid.n_cells)
    # actual edge gaps, not ds, so constants come back to the ulp
    return State(sums / np.diff(edges), 0.0)


def l1_error(grid: Grid, numeric: State, exact: Callable[[np.ndarray], np.ndarray]) -> float:
    """ds-weighted L1 distance between cell averages and ``exact`` at centers."""
    return float(np.sum(np.abs(numeric.values - exact(grid.centers))) * grid.ds)
