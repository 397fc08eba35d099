"""Second-order finite-volume semi-discretization.

The explicit operator collects the convective flux differences (minmod
reconstruction + local Lax-Friedrichs flux) and the midpoint-rule source.
The diffusive part is linear in the cell averages and is returned as a
tridiagonal operator so time integrators can treat it implicitly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import NumericalBlowupError, UnsupportedModelError
from .mesh import Grid, State
from .models import Boundary, ConservativeModel


def minmod(a, b):
    """sign(a) min(|a|, |b|) when a and b share a sign, else 0."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    # (sign a + sign b)/2 is +-1 on agreement and 0 otherwise
    out = 0.5 * (np.sign(a) + np.sign(b)) * np.minimum(np.abs(a), np.abs(b))
    return out if out.ndim else float(out)


@dataclass(frozen=True, eq=False)
class InterfaceStates:
    """Reconstructed values on both sides of each of the n+1 interfaces."""

    left: np.ndarray
    right: np.ndarray


def boundary_data(model: ConservativeModel, t: float) -> tuple[Optional[float], Optional[float]]:
    """Dirichlet values at both ends (None for transmissive sides)."""
    left = model.left.value(t) if model.left.kind == "dirichlet" else None
    right = model.right.value(t) if model.right.kind == "dirichlet" else None
    return left, right


def ghost_values(u: np.ndarray, bc: tuple[Optional[float], Optional[float]]):
    """Ghost-cell averages: mirror through the boundary value, or copy."""
    left, right = bc
    g_left = u[0] if left is None else 2.0 * left - u[0]
    g_right = u[-1] if right is None else 2.0 * right - u[-1]
    return g_left, g_right


def _reconstruct(model: ConservativeModel, u: np.ndarray, bc) -> InterfaceStates:
    g_left, g_right = ghost_values(u, bc)
    padded = np.concatenate(([g_left], u, [g_right]))
    jumps = np.diff(padded)
    half_slope = 0.5 * minmod(jumps[:-1], jumps[1:])

    left = np.empty(u.size + 1)
    right = np.empty(u.size + 1)
    left[1:] = u + half_slope
    right[:-1] = u - half_slope

    # boundary interfaces: Dirichlet data is the interface state on both sides,
    # transmissive ghosts carry a flat profile
    if bc[0] is not None:
        left[0] = right[0] = bc[0]
    else:
        left[0] = g_left
    if bc[1] is not None:
        left[-1] = right[-1] = bc[1]
    else:
        right[-1] = g_right
    return InterfaceStates(left, right)


def reconstruct(grid: Grid, state: State, model: ConservativeModel) -> InterfaceStates:
    """Minmod-limited linear reconstruction; ghosts follow the model's boundaries."""
    _check(grid, state)
    return _reconstruct(model, state.values, boundary_data(model, state.time))


def llf_flux(model: ConservativeModel, s, u_left, u_right):
    """Local Lax-Friedrichs flux at interface position ``s``."""
    u_left = np.asarray(u_left, dtype=float)
    u_right = np.asarray(u_right, dtype=float)
    alpha = np.abs(model.flux_du(0.5 * (u_left + u_right), s))
    central = 0.5 * (model.flux(u_left, s) + model.flux(u_right, s))
    return central - 0.5 * alpha * (u_right - u_left)


def diffusive_flux(model: ConservativeModel, grid: Grid, state: State, interface_index: int) -> float:
    """g((u_{i+1} - u_i)/ds, s_{i+1/2}) at interior interface ``i + 1/2``.

    ``interface_index`` counts edges, so interior interfaces are 1..n-1.
    """
    if not 1 <= interface_index <= grid.n_cells - 1:
        raise IndexError(f"interface {interface_index} is not interior (1..{grid.n_cells - 1})")
    u = state.values
    grad = (u[interface_index] - u[interface_index - 1]) / grid.ds
    return float(model.diffusive_flux(grad, grid.edges[interface_index]))


def _blowup_check(values: np.ndarray, what: str, stage: Optional[int] = None) -> None:
    bad = ~np.isfinite(values)
    if bad.any():
        cell = int(np.argmax(bad))
        where = f" in stage {stage}" if stage is not None else ""
        raise NumericalBlowupError(f"non-finite {what} at cell {cell}{where}", cell=cell, stage=stage)


def convective_rhs(model: ConservativeModel, grid: Grid, u: np.ndarray, t: float, bc=None) -> np.ndarray:
    """-(F_{i+1/2} - F_{i-1/2}) / ds + h(u_i) for raw cell averages.

    ``bc`` overrides the (left, right) Dirichlet values taken from the model
    at time ``t``.
    """
    states = _reconstruct(model, u, boundary_data(model, t) if bc is None else bc)
    fluxes = llf_flux(model, grid.edges, states.left, states.right)
    return -(fluxes[1:] - fluxes[:-1]) / grid.ds + model.source(u)


def explicit_rhs(model: ConservativeModel, grid: Grid, state: State) -> np.ndarray:
    _check(grid, state)
    rhs = convective_rhs(model, grid, state.values, state.time)
    _blowup_check(rhs, "explicit right-hand side")
    return rhs


@dataclass(frozen=True, eq=False)
class DiffusionOperator:
    """Tridiagonal map U -> (G_{i+1/2} - G_{i-1/2}) / ds plus boundary data.

    ``sub[i]`` multiplies u_{i-1}, ``sup[i]`` multiplies u_{i+1}
    (``sub[0]`` and ``sup[-1]`` are unused zeros). Dirichlet values enter
    through ``left_weight * u_left(t)`` in row 0 and the mirror on row n-1.
    """

    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray
    left_weight: float = 0.0
    right_weight: float = 0.0
    left_value: Optional[Callable[[float], float]] = None
    right_value: Optional[Callable[[float], float]] = None
    time: float = 0.0

    @property
    def size(self) -> int:
        return self.diag.size

    def boundary_rhs(self, t: float) -> np.ndarray:
        left = self.left_value(t) if self.left_value is not None else None
        right = self.right_value(t) if self.right_value is not None else None
        return self.boundary_vector((left, right))

    def boundary_vector(self, bc) -> np.ndarray:
        """Boundary contribution for explicit (left, right) Dirichlet values."""
        b = np.zeros(self.size)
        if bc[0] is not None:
            b[0] += self.left_weight * bc[0]
        if bc[1] is not None:
            b[-1] += self.right_weight * bc[1]
        return b

    @property
    def rhs_boundary(self) -> np.ndarray:
        return self.boundary_rhs(self.time)

    def matvec(self, u: np.ndarray) -> np.ndarray:
        out = self.diag * u
        out[1:] += self.sub[1:] * u[:-1]
        out[:-1] += self.sup[:-1] * u[1:]
        return out

    def apply(self, u: np.ndarray, t: float) -> np.ndarray:
        """S(U) at time ``t``."""
        return self.matvec(u) + self.boundary_rhs(t)

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.sub[1:], -1) + np.diag(self.sup[:-1], 1)


def assemble_diffusion(model: ConservativeModel, grid: Grid, time: float = 0.0) -> DiffusionOperator:
    if model.eta is None:
        raise UnsupportedModelError(
            f"model {model.name!r} has a diffusive flux that is not linear in u_s"
        )
    eta = np.broadcast_to(np.asarray(model.eta(grid.edges), dtype=float), grid.edges.shape)
    inv = 1.0 / grid.ds**2
    lower = eta[:-1] * inv
    upper = eta[1:] * inv

    sub = lower.copy()
    sup = upper.copy()
    diag = -(lower + upper)
    sub[0] = 0.0
    sup[-1] = 0.0

    left_weight = right_weight = 0.0
    left_value = right_value = None
    # ghost = 2 u_bc - u_first doubles the boundary-interface gradient
    if model.left.kind == "dirichlet":
        diag[0] -= lower[0]
        left_weight = 2.0 * lower[0]
        left_value = model.left.value
    else:
        diag[0] += lower[0]
    if model.right.kind == "dirichlet":
        diag[-1] -= upper[-1]
        right_weight = 2.0 * upper[-1]
        right_value = model.right.value
    else:
        diag[-1] += upper[-1]

    return DiffusionOperator(sub, diag, sup, left_weight, right_weight, left_value, right_value, time)


def _check(grid: Grid, state: State) -> None:
    if len(state) != grid.n_cells:
        raise ValueError(f"state has {len(state)} cells, grid has {grid.n_cells}")
