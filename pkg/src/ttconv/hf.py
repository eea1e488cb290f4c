"""Closed-shell two-electron Hartree-Fock by integral iteration.

The eigenproblem (-1/2 Laplacian + V) psi = E psi with

    V(x) = -sum_a Z_a / ||x - R_a||  +  integral |psi(y)|^2 / ||x - y|| dy

is solved by the fixed-point map

    psi_hat = -2 (-Laplacian - 2E)^{-1} (V psi)
            = -2 (V psi) * exp(-sqrt(-2E) r) / (4 pi r),

with the energy updated each step as

    E_hat = E + (psi_hat, V psi_hat - V psi) / ||psi_hat||^2

and psi_hat renormalized afterwards (energy first, then normalization).  The
iteration drives E to the orbital eigenvalue; the grid-converged quantity
reported against reference data is the closed-shell total energy

    E_total = 2 E - (psi, V_H psi),

which collapses to E itself when the Hartree term is disabled (one-electron
sanity runs).

All objects live on the single source (cell-center) grid: both convolutions
use the symmetrized Nystrom kernel table, whose output lands back on the
source grid, and the nuclear potential is sampled pointwise at cell centers
(with a half-diagonal displacement if a nucleus happens to sit on a node).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .conv import ConvOperands, cross_conv
from .cross import BlackBoxTensor, CrossConfig, hadamard_evaluator, tt_cross
from .kernels import GridSpec, KernelFunction, kernel_tt
from .tt import (
    TTTensor,
    tt_add,
    tt_dot,
    tt_dot3,
    tt_norm,
    tt_rank_one,
    tt_round,
    tt_scale,
)

__all__ = [
    "NucleiSpec",
    "HFState",
    "HFOptions",
    "HFResult",
    "HFDivergenceError",
    "nuclear_potential_tt",
    "hartree_potential",
    "hf_iterate",
    "hf_solve",
]


class HFDivergenceError(RuntimeError):
    """The energy update left the E < 0 region required by the Yukawa kernel."""


@dataclass(frozen=True)
class NucleiSpec:
    """Point charges: tuple of (Z, (x, y, z)) in Hartree atomic units."""

    nuclei: tuple

    def __post_init__(self):
        entries = []
        for z, pos in self.nuclei:
            if z <= 0:
                raise ValueError("nuclear charges must be positive")
            pos = tuple(float(c) for c in pos)
            if len(pos) != 3:
                raise ValueError("nuclear positions must be 3-vectors")
            entries.append((float(z), pos))
        object.__setattr__(self, "nuclei", tuple(entries))

    @staticmethod
    def helium():
        return NucleiSpec(((2.0, (0.0, 0.0, 0.0)),))

    @staticmethod
    def hydrogen():
        return NucleiSpec(((1.0, (0.0, 0.0, 0.0)),))

    @staticmethod
    def h2(bond_length=1.4):
        half = bond_length / 2.0
        return NucleiSpec(((1.0, (-half, 0.0, 0.0)), (1.0, (half, 0.0, 0.0))))

    def barycenter(self):
        zs = np.array([z for z, _ in self.nuclei])
        ps = np.array([p for _, p in self.nuclei])
        return tuple((zs @ ps) / zs.sum())

    def check_inside(self, grid: GridSpec):
        for _, pos in self.nuclei:
            if any(abs(c) >= grid.half_width for c in pos):
                raise ValueError(f"nucleus at {pos} lies outside the box")


@dataclass(frozen=True)
class HFState:
    """Orbital (unit discrete-L2 norm), eigenvalue estimate, grid, counter."""

    psi: TTTensor
    energy: float
    grid: GridSpec
    iteration: int = 0

    def __post_init__(self):
        if self.energy >= 0:
            raise ValueError("the integral iteration requires E < 0")

    def l2_norm(self):
        return self.grid.h**1.5 * tt_norm(self.psi)


@dataclass(frozen=True)
class HFOptions:
    eps: float = 1e-6
    max_iter: int = 60
    energy_tol: float = 1e-6
    hartree: bool = True
    initial_energy: float = -1.0
    gaussian_width: float = 1.0


@dataclass
class IterationRecord:
    iteration: int
    energy: float
    total_energy: float
    delta_energy: float
    psi_ranks: tuple
    seconds: float


@dataclass
class HFResult:
    state: HFState
    converged: bool
    total_energy: float
    history: list = field(default_factory=list)


class _Workspace:
    """Per-grid cached tensors and warm-start ranks reused across iterations."""

    def __init__(self, nuclei, grid, eps, options):
        self.nuclei = nuclei
        self.grid = grid
        self.eps = eps
        self.options = options
        self.newton_tt = kernel_tt(
            KernelFunction.newton(), grid, 3, eps, variant="symmetric"
        )
        self.vnuc_tt = nuclear_potential_tt(nuclei, grid, eps)
        self.yukawa_ranks = None
        self.product_ranks = None
        self.density_ranks = None


def _hadamard_cross(a, b, eps, seed_ranks=None):
    cfg = CrossConfig(delta=eps)
    warm = seed_ranks
    if warm is None:
        warm = [max(ra, rb) for ra, rb in zip(a.ranks[1:-1], b.ranks[1:-1])] or None
    return tt_cross(hadamard_evaluator(a, b), cfg, initial_ranks=warm)


def nuclear_potential_tt(nuclei: NucleiSpec, grid: GridSpec, eps):
    """-sum_a Z_a/||y - R_a|| sampled at cell centers, built by cross.

    A sample closer than h/4 to a nucleus (possible only for nuclei placed on
    cell centers) is displaced by h/2 along the diagonal before evaluating.
    """
    pts = grid.source_points()
    h = grid.h
    guard = 0.25 * h
    fallback = 0.5 * h * math.sqrt(3.0)
    charges = [(z, np.asarray(pos)) for z, pos in nuclei.nuclei]

    def from_coords(cx, cy, cz):
        acc = 0.0
        for z, pos in charges:
            dist = np.sqrt((cx - pos[0]) ** 2 + (cy - pos[1]) ** 2 + (cz - pos[2]) ** 2)
            dist = np.where(dist < guard, fallback, dist)
            acc = acc - z / dist
        return acc

    def element(idx):
        return complex(from_coords(pts[idx[0]], pts[idx[1]], pts[idx[2]]))

    def elements(idx):
        idx = np.asarray(idx, dtype=np.intp)
        return from_coords(pts[idx[:, 0]], pts[idx[:, 1]], pts[idx[:, 2]])

    def fiber_block(mode, lefts, rights):
        p, q = lefts.shape[0], rights.shape[0]
        free = mode
        fixed_left = [pts[lefts[:, j]] for j in range(lefts.shape[1])]
        fixed_right = [pts[rights[:, j]] for j in range(rights.shape[1])]
        acc = np.zeros((p, grid.n, q))
        for z, pos in charges:
            sq = np.zeros((p, 1, 1))
            for j, c in enumerate(fixed_left):
                sq = sq + ((c - pos[j])[:, None, None]) ** 2
            mid = ((pts - pos[free])[None, :, None]) ** 2
            sqr = np.zeros((1, 1, q))
            for j, c in enumerate(fixed_right):
                sqr = sqr + ((c - pos[free + 1 + j])[None, None, :]) ** 2
            dist = np.sqrt(sq + mid + sqr)
            dist = np.where(dist < guard, fallback, dist)
            acc = acc - z / dist
        return acc

    bb = BlackBoxTensor((grid.n,) * 3, element, fiber_block=fiber_block, elements=elements)
    return tt_cross(bb, CrossConfig(delta=eps))


def hartree_potential(psi: TTTensor, grid: GridSpec, eps, newton_tt=None,
                      density_ranks=None):
    """Coulomb potential of |psi|^2, evaluated back on the psi grid.

    The density is cross-approximated at eps, then convolved with the
    symmetrized Newton table (which carries the h^3 quadrature weight).
    """
    if newton_tt is None:
        newton_tt = kernel_tt(KernelFunction.newton(), grid, 3, eps, variant="symmetric")
    density = _hadamard_cross(psi, psi, eps, seed_ranks=density_ranks)
    ops = ConvOperands(density, newton_tt, eps)
    return cross_conv(ops)


def _initial_guess(nuclei: NucleiSpec, grid: GridSpec, width):
    """Normalized rank-1 Gaussian centered at the charge barycenter."""
    center = nuclei.barycenter()
    pts = grid.source_points()
    factors = [np.exp(-((pts - c) ** 2) / (width**2)) for c in center]
    psi = tt_rank_one(factors)
    return tt_scale(psi, 1.0 / (grid.h**1.5 * tt_norm(psi)))


def _total_energy(state_energy, psi, v_hartree, h):
    """Closed-shell total 2E - (psi, V_H psi) with discrete L2 weights."""
    j11 = (h**3) * tt_dot3(psi, v_hartree, psi).real
    return 2.0 * state_energy - j11


def hf_iterate(state: HFState, eps=None, options: HFOptions | None = None,
               workspace: _Workspace | None = None):
    """One integral iteration; returns (new_state, IterationRecord)."""
    opts = options or HFOptions(eps=eps if eps is not None else 1e-6)
    if eps is None:
        eps = opts.eps
    grid = state.grid
    ws = workspace
    t0 = time.perf_counter()

    if ws is None:
        # one-off call: no caching across iterations
        ws = _Workspace.__new__(_Workspace)
        ws.newton_tt = kernel_tt(KernelFunction.newton(), grid, 3, eps, variant="symmetric")
        ws.vnuc_tt = None
        ws.options = opts
        ws.yukawa_ranks = None
        ws.product_ranks = None
        ws.density_ranks = None
        ws.nuclei = None

    psi = state.psi
    if opts.hartree:
        density = _hadamard_cross(psi, psi, eps, seed_ranks=ws.density_ranks)
        ws.density_ranks = list(density.ranks[1:-1])
        v_h = cross_conv(ConvOperands(density, ws.newton_tt, eps))
    else:
        v_h = None

    if ws.vnuc_tt is None:
        raise ValueError("hf_iterate needs a nuclear potential (use hf_solve)")
    v = ws.vnuc_tt if v_h is None else tt_round(tt_add(ws.vnuc_tt, v_h), eps)

    v_psi = _hadamard_cross(v, psi, eps, seed_ranks=ws.product_ranks)
    ws.product_ranks = list(v_psi.ranks[1:-1])

    kappa = math.sqrt(-2.0 * state.energy)
    yukawa = kernel_tt(
        KernelFunction.yukawa(kappa), grid, 3, eps,
        variant="symmetric", initial_ranks=ws.yukawa_ranks,
    )
    ws.yukawa_ranks = list(yukawa.ranks[1:-1])

    psi_hat = cross_conv(ConvOperands(v_psi, yukawa, eps))
    psi_hat = tt_scale(psi_hat, -2.0 / (4.0 * math.pi))

    # energy update uses exact TT contractions (no extra cross error)
    norm_sq = tt_dot(psi_hat, psi_hat).real
    correction = (
        tt_dot3(psi_hat, v, psi_hat).real - tt_dot3(psi_hat, v, psi).real
    ) / norm_sq
    new_energy = state.energy + correction
    if new_energy >= 0 or not math.isfinite(new_energy):
        raise HFDivergenceError(
            f"energy update produced E = {new_energy:.6f} >= 0 at iteration "
            f"{state.iteration + 1}"
        )

    psi_new = tt_scale(psi_hat, 1.0 / (grid.h**1.5 * math.sqrt(norm_sq)))
    new_state = HFState(psi_new, new_energy, grid, state.iteration + 1)

    if opts.hartree and v_h is not None:
        total = _total_energy(new_energy, psi, v_h, grid.h)
    else:
        total = new_energy
    record = IterationRecord(
        iteration=new_state.iteration,
        energy=new_energy,
        total_energy=total,
        delta_energy=abs(correction),
        psi_ranks=psi_new.ranks,
        seconds=time.perf_counter() - t0,
    )
    return new_state, record


def hf_solve(nuclei: NucleiSpec, grid: GridSpec, eps=1e-6,
             options: HFOptions | None = None) -> HFResult:
    """Integral iterations from a Gaussian guess until |E_hat - E| < energy_tol.

    Non-convergence is reported through the ``converged`` flag, not raised.
    """
    opts = options or HFOptions(eps=eps)
    opts = replace(opts, eps=eps)
    nuclei.check_inside(grid)
    ws = _Workspace(nuclei, grid, eps, opts)
    psi0 = _initial_guess(nuclei, grid, opts.gaussian_width)
    state = HFState(psi0, opts.initial_energy, grid)
    history = []
    converged = False
    for _ in range(opts.max_iter):
        state, record = hf_iterate(state, eps, opts, ws)
        history.append(record)
        if record.delta_energy < opts.energy_tol:
            converged = True
            break

    if opts.hartree:
        v_h = hartree_potential(state.psi, grid, eps, newton_tt=ws.newton_tt,
                                density_ranks=ws.density_ranks)
        total = _total_energy(state.energy, state.psi, v_h, grid.h)
    else:
        total = state.energy
    return HFResult(state=state, converged=converged, total_energy=total,
                    history=history)
