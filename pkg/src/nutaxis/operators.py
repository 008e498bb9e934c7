"""Discrete spatial operators shared by the integrator and the diagnostics.

All operators are pure functions of cell fields and a :class:`~nutaxis.grid.Grid`.
Boundary faces carry zero flux (homogeneous Neumann at walls, symmetry at a
radial origin); consequently the Laplacian and the taxis divergence are
discretely conservative — their m-weighted sums telescope to exactly zero.

Note on gradient functionals: face gradients vanish at the two boundary faces
by construction, so energies like ``integral |grad f|^2 / g`` slightly
underestimate the continuum value when the profile has nonzero boundary
slope.  This is a deliberate discretization caveat, consistent with the
Neumann problem being solved.
"""
from __future__ import annotations

from typing import Optional

import numpy as np

from .grid import Grid
from .model import f_eps_prime

__all__ = [
    "WeightFloorError",
    "face_gradient",
    "laplacian_neumann",
    "chemotaxis_divergence",
    "integrate",
    "weighted_gradient_energy",
]


class WeightFloorError(ZeroDivisionError):
    """A face weight fell below the floor while flooring was disabled."""


def face_gradient(f: np.ndarray, grid: Grid) -> np.ndarray:
    """Two-point gradients on faces; boundary faces are 0 (Neumann).

    Returns an array of length ``n + 1`` with ``(f[i] - f[i-1]) / h`` on
    interior faces.
    """
    g = np.zeros(grid.n + 1)
    g[1:-1] = np.diff(f) / grid.h
    return g


def laplacian_neumann(f: np.ndarray, grid: Grid) -> np.ndarray:
    """Conservative three-point Laplacian with zero-flux boundaries.

    (lap f)_i = [a_{i+1/2} (f_{i+1}-f_i)/h - a_{i-1/2} (f_i-f_{i-1})/h] / m_i
    with both boundary-face fluxes forced to zero.  Exactly conservative:
    sum_i m_i (lap f)_i telescopes to 0.
    """
    flux = grid.face_areas * face_gradient(f, grid)
    return np.diff(flux) / grid.m


def chemotaxis_divergence(u: np.ndarray, w: np.ndarray, grid: Grid,
                          chi: float, eps: float = 0.0,
                          mode: str = "upwind") -> np.ndarray:
    """Finite-volume form of ``-div(chi * u * F'(u) * grad w)``.

    The face flux is ``chi * (w_{i+1}-w_i)/h`` times the mobility
    ``u * f_eps_prime(u, eps)`` taken from the donor cell (``mode="upwind"``,
    positivity-preserving under a CFL bound) or from the arithmetic face mean
    (``mode="central"``, second-order; used by convergence studies).
    Boundary faces carry no flux, so the result is discretely conservative.
    """
    if mode not in ("upwind", "central"):
        raise ValueError(f"unknown flux mode {mode!r}")
    gw = np.diff(w) / grid.h
    mob = u * f_eps_prime(u, eps)
    if mode == "upwind":
        mob_face = np.where(gw > 0.0, mob[:-1], mob[1:])
    else:
        mob_face = 0.5 * (mob[:-1] + mob[1:])
    flux = np.zeros(grid.n + 1)
    flux[1:-1] = grid.face_areas[1:-1] * (chi * gw * mob_face)
    return -np.diff(flux) / grid.m


def integrate(f: np.ndarray, grid: Grid) -> float:
    """Measure-weighted sum ``sum_i m_i f_i`` (midpoint quadrature)."""
    return float(np.dot(grid.m, f))


def weighted_gradient_energy(f: np.ndarray, g: Optional[np.ndarray], p: float,
                             grid: Grid, g_floor: float = 1e-12,
                             floor_weights: bool = True) -> float:
    """Discrete ``integral |grad f|^p / g`` over interior faces.

    Each interior face contributes ``a_{i+1/2} * h * |grad_face|^p / g_face``
    where ``g_face`` is the arithmetic mean of the two adjacent cells, floored
    at ``g_floor`` (the floor avoids spurious blowup when the weight decays to
    zero, which the nutrient provably does).  Pass ``g=None`` for the
    unweighted energy ``integral |grad f|^p``.

    Raises:
        WeightFloorError: if ``floor_weights`` is False and some face weight
            is below ``g_floor``.
    """
    grad = np.diff(f) / grid.h
    fm = grid.face_areas[1:-1] * grid.h
    if p == 2.0:
        num = grad * grad
    elif p == 4.0:
        num = (grad * grad) ** 2
    else:
        num = np.abs(grad) ** p
    if g is None:
        return float(np.dot(fm, num))
    gf = 0.5 * (g[1:] + g[:-1])
    if floor_weights:
        gf = np.maximum(gf, g_floor)
    elif np.any(gf < g_floor):
        i = int(np.argmax(gf < g_floor))
        raise WeightFloorError(
            f"face weight {gf[i]:.3e} below floor {g_floor:.3e} at face {i + 1}")
    return float(np.dot(fm, num / gf))
