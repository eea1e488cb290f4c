"""Continuous-to-discrete bridge: grids, shifted-grid kernel sampling, and TT
construction of kernels and smooth densities.

The quadrature is a Nystrom-type scheme on two half-step-shifted uniform
grids: sources sit at cell centers y_k = -L + (k + 1/2) h and targets at
x_j = y_j + h/2, so a singular radial kernel is sampled at h*(m + 1/2 * 1),
never at the origin.  The h^d quadrature weight is folded into the kernel
table.  For the Hartree-Fock loop a symmetrized variant averages the +1/2 and
-1/2 shifted tables, which lands convolution outputs back on the source grid
at the same order of accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy.special import erf

from .conv import ConvOperands, cross_conv, cross_conv_with_stats
from .cross import BlackBoxTensor, CrossConfig, tt_cross, tt_cross_with_stats

__all__ = [
    "GridSpec",
    "KernelFunction",
    "DensityFunction",
    "KernelSingularityError",
    "nystrom_kernel_blackbox",
    "kernel_tt",
    "sample_function_tt",
    "newton_potential",
    "gaussian_potential_exact",
]

# below this magnitude the Yukawa exponential underflows into denormals
_UNDERFLOW_FLOOR = 1e-300


class KernelSingularityError(ValueError):
    """A singular kernel would be sampled at the origin (shift disabled)."""


@dataclass(frozen=True)
class GridSpec:
    """Uniform tensor-product grid on [-L, L]^d with mesh h = 2L/n.

    ``shift`` keeps targets offset from sources by h/2 per coordinate; it must
    stay on for singular kernels.
    """

    half_width: float
    n: int
    shift: bool = True

    def __post_init__(self):
        if self.half_width <= 0:
            raise ValueError("box half-width must be positive")
        if self.n < 2:
            raise ValueError("need at least two points per mode")

    @property
    def h(self):
        return 2.0 * self.half_width / self.n

    def source_points(self):
        """Cell centers y_k = -L + (k + 1/2) h."""
        return -self.half_width + (np.arange(self.n) + 0.5) * self.h

    def target_points(self):
        """Targets x_j = y_j + h/2."""
        return self.source_points() + 0.5 * self.h


@dataclass(frozen=True)
class KernelFunction:
    """Radial convolution kernel g(x) = radial(||x||).

    ``newton`` is 1/r; ``yukawa`` is exp(-kappa r)/r (kappa = sqrt(-2E) in the
    integral-iteration context; the 1/(4 pi) of the Green's function is applied
    by the caller).  Custom kernels supply the radial profile and a flag for a
    singularity at r=0.
    """

    kind: str
    kappa: float = 0.0
    radial_func: Callable | None = None
    singular: bool = True

    def __post_init__(self):
        if self.kind not in ("newton", "yukawa", "custom"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "yukawa" and self.kappa <= 0:
            raise ValueError("yukawa decay kappa must be positive")
        if self.kind == "custom" and self.radial_func is None:
            raise ValueError("custom kernel needs a radial callable")

    @staticmethod
    def newton():
        return KernelFunction("newton")

    @staticmethod
    def yukawa(kappa):
        return KernelFunction("yukawa", kappa=kappa)

    @staticmethod
    def custom(radial_func, singular=False):
        return KernelFunction("custom", radial_func=radial_func, singular=singular)

    @property
    def singular_at_zero(self):
        if self.kind == "custom":
            return self.singular
        return True

    def radial(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "newton":
            return 1.0 / r
        if self.kind == "yukawa":
            out = np.exp(-self.kappa * r) / r
            return np.where(out < _UNDERFLOW_FLOOR, 0.0, out)
        return self.radial_func(r)


@dataclass(frozen=True)
class DensityFunction:
    """Radial source density: slater exp(-zeta r) or gaussian exp(-alpha r^2)."""

    kind: str
    zeta: float = 1.0
    alpha: float = 1.0

    def __post_init__(self):
        if self.kind not in ("slater", "gaussian"):
            raise ValueError(f"unknown density kind {self.kind!r}")
        if self.kind == "slater" and self.zeta <= 0:
            raise ValueError("slater exponent must be positive")
        if self.kind == "gaussian" and self.alpha <= 0:
            raise ValueError("gaussian exponent must be positive")

    @staticmethod
    def slater(zeta=1.0):
        return DensityFunction("slater", zeta=zeta)

    @staticmethod
    def gaussian(alpha=1.0):
        return DensityFunction("gaussian", alpha=alpha)

    def radial(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "slater":
            return np.exp(-self.zeta * r)
        return np.exp(-self.alpha * r * r)


def _radial_offset_blackbox(d, n, coord_tables, radial):
    """Black box over extended offsets whose value depends on per-mode coordinates.

    ``coord_tables`` is a list of per-variant coordinate arrays of length
    2n-1; the value at offset index vector s is the mean over variants of
    radial(sqrt(sum_k coord[v][s_k]^2)).
    """
    ext = 2 * n - 1
    sq_tables = [c * c for c in coord_tables]
    weight = 1.0 / len(coord_tables)

    def element(idx):
        acc = 0.0
        for sq in sq_tables:
            r = math.sqrt(sum(float(sq[i]) for i in idx))
            acc += float(radial(r))
        return acc * weight

    def elements(idx):
        idx = np.asarray(idx, dtype=np.intp)
        acc = np.zeros(idx.shape[0])
        for sq in sq_tables:
            r = np.sqrt(np.sum(sq[idx], axis=1))
            acc += radial(r)
        return acc * weight

    def fiber_block(mode, lefts, rights):
        p, q = lefts.shape[0], rights.shape[0]
        acc = np.zeros((p, ext, q))
        for sq in sq_tables:
            left_sq = sq[lefts].sum(axis=1) if lefts.shape[1] else np.zeros(p)
            right_sq = sq[rights].sum(axis=1) if rights.shape[1] else np.zeros(q)
            r = np.sqrt(
                left_sq[:, None, None] + sq[None, :, None] + right_sq[None, None, :]
            )
            acc += radial(r)
        return acc * weight

    return BlackBoxTensor((ext,) * d, element, fiber_block=fiber_block, elements=elements)


def nystrom_kernel_blackbox(kernel: KernelFunction, grid: GridSpec, d, variant="half"):
    """Kernel table evaluator over extended offsets m in {-(n-1), ..., n-1}^d.

    ``variant`` selects the shifted sampling:

    - "half" (default): h^d * g(h * (m + 1/2 * 1)); values live on the target
      grid shifted +h/2 from the sources.
    - "symmetric": the average of the +1/2 and -1/2 shifted tables; the
      resulting convolution lands back on the source grid.

    With ``grid.shift`` false the kernel is sampled at integer offsets h*m,
    which hits the origin for singular kernels and raises.
    """
    if d < 1:
        raise ValueError("dimension must be >= 1")
    n, h = grid.n, grid.h
    offsets = np.arange(-(n - 1), n)
    weight = h**d
    if not grid.shift:
        if kernel.singular_at_zero:
            raise KernelSingularityError(
                "shift disabled: a singular kernel would be sampled at offset 0"
            )
        coord_tables = [h * offsets.astype(float)]
    elif variant == "half":
        coord_tables = [h * (offsets + 0.5)]
    elif variant == "symmetric":
        coord_tables = [h * (offsets + 0.5), h * (offsets - 0.5)]
    else:
        raise ValueError(f"unknown variant {variant!r}")

    def weighted(r):
        return weight * np.asarray(kernel.radial(r))

    return _radial_offset_blackbox(d, n, coord_tables, weighted)


def kernel_tt(kernel: KernelFunction, grid: GridSpec, d, eps,
              variant="half", cross: CrossConfig | None = None,
              initial_ranks=None, with_stats=False):
    """TT of the offset-indexed kernel table, built by cross approximation.

    Entries interpolate the evaluator exactly at the sampled indices; the
    validation error is certified at eps (3*eps slack admitted globally).
    """
    bb = nystrom_kernel_blackbox(kernel, grid, d, variant=variant)
    cfg = cross if cross is not None else CrossConfig(delta=eps)
    cfg = _with_delta(cfg, eps)
    if with_stats:
        return tt_cross_with_stats(bb, cfg, initial_ranks=initial_ranks)
    return tt_cross(bb, cfg, initial_ranks=initial_ranks)


def _with_delta(cfg: CrossConfig, eps):
    return replace(cfg, delta=eps)


def sample_function_tt(density: DensityFunction, grid: GridSpec, d, eps,
                       cross: CrossConfig | None = None):
    """TT of density samples at the source (cell-center) grid points."""
    pts = grid.source_points()
    bb = _radial_offset_blackbox_points(d, pts, density.radial)
    cfg = _with_delta(cross if cross is not None else CrossConfig(delta=eps), eps)
    return tt_cross(bb, cfg)


def _radial_offset_blackbox_points(d, points, radial):
    """Black box on the n^d source grid for radial functions of ||y||."""
    sq = points * points
    n = points.size

    def element(idx):
        r = math.sqrt(sum(float(sq[i]) for i in idx))
        return float(radial(r))

    def elements(idx):
        idx = np.asarray(idx, dtype=np.intp)
        return radial(np.sqrt(np.sum(sq[idx], axis=1)))

    def fiber_block(mode, lefts, rights):
        p, q = lefts.shape[0], rights.shape[0]
        left_sq = sq[lefts].sum(axis=1) if lefts.shape[1] else np.zeros(p)
        right_sq = sq[rights].sum(axis=1) if rights.shape[1] else np.zeros(q)
        r = np.sqrt(left_sq[:, None, None] + sq[None, :, None] + right_sq[None, None, :])
        return radial(r)

    return BlackBoxTensor((n,) * d, element, fiber_block=fiber_block, elements=elements)


def newton_potential(density: DensityFunction, grid: GridSpec, eps,
                     cross: CrossConfig | None = None, with_stats=False):
    """Newton potential (convolution with 1/r) of a radial density in 3-D.

    Returns a TT of approximate potential values at the target points
    x_j = y_j + h/2 per coordinate.
    """
    f_tt = sample_function_tt(density, grid, 3, eps, cross=cross)
    g_tt = kernel_tt(KernelFunction.newton(), grid, 3, eps, cross=cross)
    ops = ConvOperands(f_tt, g_tt, eps, cross=cross)
    if with_stats:
        w, stats = cross_conv_with_stats(ops)
        return w, stats, f_tt, g_tt
    return cross_conv(ops)


def gaussian_potential_exact(r, alpha=1.0):
    """Closed form for the Newton potential of exp(-alpha ||y||^2).

    V(r) = (pi/alpha)^{3/2} erf(sqrt(alpha) r)/r, with the limit 2 pi / alpha
    at r = 0.
    """
    r = np.asarray(r, dtype=float)
    prefactor = (np.pi / alpha) ** 1.5
    safe = np.where(r > 0, r, 1.0)
    out = prefactor * erf(np.sqrt(alpha) * safe) / safe
    limit = 2.0 * np.pi / alpha
    return np.where(r > 0, out, limit)
