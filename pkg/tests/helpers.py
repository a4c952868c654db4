"""Shared test helpers: random states/kernels and analytic oracles."""

from __future__ import annotations

import math

import numpy as np

from biphoton import Grid, Kernel, SinglePhotonPure


def random_kernel(rng: np.random.Generator, grid: Grid) -> Kernel:
    m = rng.normal(size=(grid.n, grid.n)) + 1j * rng.normal(size=(grid.n, grid.n))
    return Kernel(grid, grid, m)


def random_unitary_kernel(rng: np.random.Generator, grid: Grid) -> Kernel:
    a = rng.normal(size=(grid.n, grid.n)) + 1j * rng.normal(size=(grid.n, grid.n))
    q, _ = np.linalg.qr(a)
    # H'H * dx_out * dx_in = I, i.e. discretely lossless
    return Kernel(grid, grid, q / grid.dx)


def random_pure(rng: np.random.Generator, grid: Grid) -> SinglePhotonPure:
    a = rng.normal(size=grid.n) + 1j * rng.normal(size=grid.n)
    return SinglePhotonPure.normalized(grid, a)


def rel_linf(a: np.ndarray, b: np.ndarray) -> float:
    """max |a - b| relative to max |b|."""
    return float(np.max(np.abs(a - b)) / np.max(np.abs(b)))


# ---------------------------------------------------------------------------
# Analytic complex-Gaussian beam oracle (independent of the matrix pipeline).
#
# A field exp(-(a x^2 + b x)) stays in that family through thin Gaussian /
# quadratic-phase elements (coefficients add) and through Fresnel propagation
# over distance d, which maps (a, b) -> (-beta a, -beta b) / (a - beta) with
# beta = i pi / (lambda d).


def gauss_chain_point_psf(x0: float, z0: float, elements, wavelength: float):
    """Intensity FWHM and peak position at the end of a chain applied to a
    point source at transverse x0, a distance z0 before the first element.

    elements: sequence of ("gauss", waist) amplitude apertures
    exp(-x^2/(2 w^2)), ("lens", f) thin lenses, and ("fs", d) free space.
    """
    beta = 1j * math.pi / (wavelength * z0)
    a, b = -beta, 2 * beta * x0
    for kind, val in elements:
        if kind == "gauss":
            a = a + 1 / (2 * val**2)
        elif kind == "lens":
            a = a + 1j * math.pi / (wavelength * val)
        elif kind == "fs":
            beta = 1j * math.pi / (wavelength * val)
            a, b = -beta * a / (a - beta), -beta * b / (a - beta)
        else:
            raise ValueError(kind)
    ra, rb = a.real, b.real
    assert ra > 0, "chain does not end in a confined beam"
    sigma = 1 / (2 * math.sqrt(ra))
    fwhm = 2 * math.sqrt(2 * math.log(2)) * sigma
    return fwhm, -rb / (2 * ra)
