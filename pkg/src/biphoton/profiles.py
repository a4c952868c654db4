"""Named 1-D profiles used for source amplitudes, emission densities, pump
fields and mask transmittances."""

from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .grid import Grid


def gaussian(grid: Grid, waist: float, center: float = 0.0) -> np.ndarray:
    """exp(-(x - center)^2 / (2 waist^2)); peak value 1."""
    if not waist > 0:
        raise ValidationError(f"waist must be positive, got {waist!r}")
    return np.exp(-((grid.points - center) ** 2) / (2 * waist**2))


def gaussian_aperture(grid: Grid, width: float, center: float = 0.0) -> np.ndarray:
    """Soft aperture transmittance, same form as :func:`gaussian`."""
    return gaussian(grid, width, center)


def uniform(grid: Grid) -> np.ndarray:
    return np.ones(grid.n)


def delta(grid: Grid, position: float = 0.0) -> np.ndarray:
    """Single-sample spike at the lattice point nearest ``position``."""
    v = np.zeros(grid.n)
    v[grid.nearest_index(position)] = 1.0
    return v


def double_slit(grid: Grid, separation: float, width: float) -> np.ndarray:
    """Two unit-transmittance slits of the given width centered at
    +/- separation/2."""
    if not separation > 0 or not width > 0:
        raise ValidationError("double_slit needs positive separation and width")
    x = grid.points
    t = (np.abs(x - separation / 2) <= width / 2) | (np.abs(x + separation / 2) <= width / 2)
    return t.astype(float)


def step_edge(grid: Grid, position: float = 0.0) -> np.ndarray:
    """Knife edge: transmittance 1 for x >= position, else 0."""
    return (grid.points >= position).astype(float)
