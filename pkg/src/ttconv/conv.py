"""The low-rank convolution pipeline.

Given TT operands f (mode sizes n) and a kernel over extended offsets
(extent 2n-1 per mode, offset m at storage index m+n-1), the convolution
w_j = sum_i f_i g_{j-i} is computed as

    zero-pad f -> per-core DFT
    kernel -> circulant first column -> per-core DFT
    cross-approximate the elementwise product (the only approximate step)
    inverse per-core DFT -> restrict to [0, n) -> real part -> round

The cross step runs at delta = eps: the transforms are scaled-unitary, so a
relative perturbation of the frequency product passes through to the expanded
result unchanged.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .cross import (
    BlackBoxMatrix,
    CrossConfig,
    hadamard_evaluator,
    skeleton_cross,
    tt_cross_with_stats,
)
from .tt import (
    TTTensor,
    tt_dft_per_core,
    tt_mode_permute,
    tt_real_part,
    tt_restrict,
    tt_round,
    tt_zero_pad,
)

__all__ = [
    "ConvOperands",
    "ConvStats",
    "kernel_to_circulant",
    "cross_conv",
    "cross_conv_with_stats",
    "skeleton_conv_2d",
]


@dataclass(frozen=True)
class ConvOperands:
    """Convolution inputs: TT operand, TT kernel over extended offsets, accuracy.

    ``circulant_size`` chooses the embedding: "2n-1" is the minimal (odd)
    circulant; "2n" pads one extra zero offset slot per mode, which can be
    friendlier to the FFT.  Both are exact embeddings.
    """

    f: TTTensor
    kernel: TTTensor
    eps: float
    cross: CrossConfig | None = None
    circulant_size: str = "2n-1"
    real_output: bool = True

    def __post_init__(self):
        if self.f.d != self.kernel.d:
            raise ValueError(
                f"operand dimension {self.f.d} != kernel dimension {self.kernel.d}"
            )
        for n, m in zip(self.f.mode_sizes, self.kernel.mode_sizes):
            if m != 2 * n - 1:
                raise ValueError(
                    f"kernel extent {m} != 2n-1 for operand mode size {n}"
                )
        if not 0.0 < self.eps < 1.0:
            raise ValueError("eps must lie in (0, 1)")
        if self.circulant_size not in ("2n-1", "2n"):
            raise ValueError(f"unknown circulant_size {self.circulant_size!r}")


@dataclass
class ConvStats:
    """Per-stage wall times and cross diagnostics of one convolution."""

    stage_seconds: dict = field(default_factory=dict)
    evaluator_calls: int = 0
    validation_error: float = 0.0
    theta_ranks: tuple = ()
    result_ranks: tuple = ()


def kernel_to_circulant(kernel: TTTensor, circulant_size="2n-1") -> TTTensor:
    """Reindex an extended-offset kernel into the circulant first column.

    Per mode the column reads [g_0, ..., g_{n-1}, g_{1-n}, ..., g_{-1}]
    (with one zero slot inserted after g_{n-1} for the "2n" embedding).
    Exact permutation; ranks unchanged.
    """
    perms = []
    sizes = kernel.mode_sizes
    for m in sizes:
        if m % 2 == 0:
            raise ValueError(f"kernel extent {m} is even; expected 2n-1")
        n = (m + 1) // 2
        perms.append(
            np.concatenate([np.arange(n - 1, 2 * n - 1), np.arange(0, n - 1)])
        )
    if circulant_size == "2n-1":
        return tt_mode_permute(kernel, perms)
    if circulant_size == "2n":
        padded = tt_zero_pad(kernel, [m + 1 for m in sizes])
        perms_even = []
        for m in sizes:
            n = (m + 1) // 2
            perms_even.append(
                np.concatenate(
                    [np.arange(n - 1, 2 * n - 1), [2 * n - 1], np.arange(0, n - 1)]
                )
            )
        return tt_mode_permute(padded, perms_even)
    raise ValueError(f"unknown circulant_size {circulant_size!r}")


def _cross_config(ops: ConvOperands) -> CrossConfig:
    base = ops.cross if ops.cross is not None else CrossConfig(delta=ops.eps)
    return replace(base, delta=ops.eps)


def cross_conv_with_stats(ops: ConvOperands, _skip_circulant_permute=False):
    """Run the pipeline and report stage timings and cross diagnostics.

    ``_skip_circulant_permute`` exists only as an injectable fault for the
    verification command's negative control; it must never be set otherwise.
    """
    stats = ConvStats()
    n = ops.f.mode_sizes
    padded = tuple(2 * nk - 1 for nk in n) if ops.circulant_size == "2n-1" else tuple(
        2 * nk for nk in n
    )

    t0 = time.perf_counter()
    qf = tt_zero_pad(ops.f, padded)
    if _skip_circulant_permute:
        cg = tt_zero_pad(ops.kernel, padded)
    else:
        cg = kernel_to_circulant(ops.kernel, ops.circulant_size)
    t1 = time.perf_counter()
    stats.stage_seconds["pad"] = t1 - t0

    qf_hat = tt_dft_per_core(qf, "forward")
    cg_hat = tt_dft_per_core(cg, "forward")
    t2 = time.perf_counter()
    stats.stage_seconds["fft"] = t2 - t1

    bb = hadamard_evaluator(cg_hat, qf_hat)
    warm = [
        max(rf, rg)
        for rf, rg in zip(qf_hat.ranks[1:-1], cg_hat.ranks[1:-1])
    ] or None
    theta, cross_stats = tt_cross_with_stats(bb, _cross_config(ops), initial_ranks=warm)
    t3 = time.perf_counter()
    stats.stage_seconds["cross"] = t3 - t2
    stats.evaluator_calls = cross_stats.evaluator_calls
    stats.validation_error = cross_stats.validation_error
    stats.theta_ranks = theta.ranks

    w_full = tt_dft_per_core(theta, "inverse")
    t4 = time.perf_counter()
    stats.stage_seconds["inverse"] = t4 - t3

    w = tt_restrict(w_full, [(0, nk) for nk in n])
    if ops.real_output:
        w = tt_real_part(w)
    w = tt_round(w, ops.eps)
    t5 = time.perf_counter()
    stats.stage_seconds["round"] = t5 - t4
    stats.result_ranks = w.ranks
    return w, stats


def cross_conv(ops: ConvOperands) -> TTTensor:
    w, _ = cross_conv_with_stats(ops)
    return w


def _skeleton_pack(u, v):
    return np.asarray(u), np.asarray(v)


def skeleton_conv_2d(f_u, f_v, g_u, g_v, eps, cross: CrossConfig | None = None):
    """2-D convolution with operands in skeleton (U @ V.T) form.

    ``f_u``/``f_v`` are (n x r_f) factors of the operand, ``g_u``/``g_v`` the
    (2n-1 x r_g) factors of the extended-offset kernel.  Returns real factors
    (w_u, w_v) with w = w_u @ w_v.T accurate to ~eps.  The frequency-domain
    product is approximated by a matrix skeleton cross whose row/column
    evaluations cost O(n r) each.
    """
    f_u, f_v = _skeleton_pack(f_u, f_v)
    g_u, g_v = _skeleton_pack(g_u, g_v)
    if f_u.ndim != 2 or f_v.ndim != 2 or f_u.shape[1] != f_v.shape[1]:
        raise ValueError("operand factors must be (n, r) with matching rank")
    if g_u.ndim != 2 or g_v.ndim != 2 or g_u.shape[1] != g_v.shape[1]:
        raise ValueError("kernel factors must be (2n-1, r) with matching rank")
    n1, n2 = f_u.shape[0], f_v.shape[0]
    if g_u.shape[0] != 2 * n1 - 1 or g_v.shape[0] != 2 * n2 - 1:
        raise ValueError("kernel factor extent must be 2n-1 per mode")
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")

    m1, m2 = 2 * n1 - 1, 2 * n2 - 1
    # zero-pad operand factors, permute kernel factors into circulant columns
    q_u = np.vstack([f_u, np.zeros((m1 - n1, f_u.shape[1]))])
    q_v = np.vstack([f_v, np.zeros((m2 - n2, f_v.shape[1]))])
    sigma1 = np.concatenate([np.arange(n1 - 1, m1), np.arange(0, n1 - 1)])
    sigma2 = np.concatenate([np.arange(n2 - 1, m2), np.arange(0, n2 - 1)])
    c_u, c_v = g_u[sigma1], g_v[sigma2]

    fq_u, fq_v = np.fft.fft(q_u, axis=0), np.fft.fft(q_v, axis=0)
    fc_u, fc_v = np.fft.fft(c_u, axis=0), np.fft.fft(c_v, axis=0)

    def row(i):
        return (fq_u[i] @ fq_v.T) * (fc_u[i] @ fc_v.T)

    def col(j):
        return (fq_u @ fq_v[j]) * (fc_u @ fc_v[j])

    theta = BlackBoxMatrix(m1, m2, row, col)
    cfg = replace(cross if cross is not None else CrossConfig(delta=eps), delta=eps)
    tu, tv = skeleton_cross(theta, eps, cfg)

    wu_full = np.fft.ifft(tu, axis=0)[:n1]
    wv_full = np.fft.ifft(tv, axis=0)[:n2]
    # real part doubles the rank: Re(U V^T) = [Re U, Im U] [Re V, -Im V]^T
    w_u = np.hstack([wu_full.real, wu_full.imag])
    w_v = np.hstack([wv_full.real, -wv_full.imag])
    return _skeleton_compress(w_u, w_v, eps)


def _skeleton_compress(u, v, tol):
    """Recompress U @ V.T at relative Frobenius tolerance via QR + SVD."""
    qu, ru = np.linalg.qr(u)
    qv, rv = np.linalg.qr(v)
    core = ru @ rv.T
    uu, s, vh = np.linalg.svd(core)
    if s.size == 0 or s[0] == 0.0:
        return u[:, :1] * 0.0, v[:, :1] * 0.0
    tail = np.sqrt(np.cumsum(s[::-1] ** 2))[::-1]
    keep = s.size
    for k in range(s.size):
        if tail[k] <= tol * tail[0]:
            keep = k
            break
    keep = max(keep, 1)
    return qu @ (uu[:, :keep] * s[:keep]), qv @ vh[:keep].T
