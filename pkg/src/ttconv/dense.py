"""Dense d-dimensional tensors, 1-D DFT and brute-force convolution oracles.

Everything here exists to verify the low-rank pipeline at small sizes, not to
be fast.  Dense tensors are plain numpy arrays in C (row-major) order: the
last index varies fastest.  This linearization is shared with the TT file
format.

Conventions
-----------
Forward DFT is unnormalized, ``F(v)_i = sum_j exp(-2*pi*1j*i*j/n) v_j``; the
inverse carries the ``1/n`` factor.  The convolution computed throughout the
package is

    w_j = sum_i f_i * g_{j-i},

with kernel offsets ``j - i`` running over ``{-(n-1), ..., n-1}`` per mode.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def dft_1d(v, direction="forward"):
    """1-D DFT of arbitrary length (lengths 2n-1 occur in circulant embedding).

    ``direction`` is "forward" (unnormalized) or "inverse" (carries 1/n).
    """
    v = np.asarray(v)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("dft_1d expects a nonempty 1-D vector")
    if direction == "forward":
        return np.fft.fft(v)
    if direction == "inverse":
        return np.fft.ifft(v)
    raise ValueError(f"unknown direction {direction!r}")


def dft_nd(a, direction="forward"):
    """d-dimensional DFT with the same conventions as :func:`dft_1d`."""
    a = np.asarray(a)
    if a.size == 0:
        raise ValueError("empty tensor")
    if direction == "forward":
        return np.fft.fftn(a)
    if direction == "inverse":
        return np.fft.ifftn(a)
    raise ValueError(f"unknown direction {direction!r}")


@dataclass(frozen=True)
class KernelTable:
    """Kernel samples over extended offsets, one value per offset vector.

    ``values`` has extent ``2*n_k - 1`` along mode k; the offset ``m`` maps to
    storage index ``m + (n_k - 1)``, so offset 0 sits at index ``n_k - 1``.
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim == 0 or any(s < 1 or s % 2 == 0 for s in v.shape):
            raise ValueError("kernel table extents must be odd (2n-1 per mode)")
        object.__setattr__(self, "values", v)

    @property
    def dim(self):
        return self.values.ndim

    @property
    def mode_sizes(self):
        """Operand sizes n_k implied by the 2n_k-1 extents."""
        return tuple((s + 1) // 2 for s in self.values.shape)

    def at_offset(self, offset):
        """Value at an offset vector ``m``, each ``m_k`` in [-(n_k-1), n_k-1]."""
        ns = self.mode_sizes
        idx = tuple(m + n - 1 for m, n in zip(offset, ns))
        if any(i < 0 or i >= 2 * n - 1 for i, n in zip(idx, ns)):
            raise ValueError(f"offset {tuple(offset)} out of range")
        return self.values[idx]

    @staticmethod
    def delta(mode_sizes):
        """Identity kernel: 1 at offset 0, else 0."""
        v = np.zeros(tuple(2 * n - 1 for n in mode_sizes))
        v[tuple(n - 1 for n in mode_sizes)] = 1.0
        return KernelTable(v)


def _check_operands(f, table):
    f = np.asarray(f)
    if f.ndim != table.dim:
        raise ValueError(f"operand dimension {f.ndim} != kernel dimension {table.dim}")
    if tuple(f.shape) != table.mode_sizes:
        raise ValueError(
            f"operand sizes {tuple(f.shape)} incompatible with kernel extents "
            f"{tuple(table.values.shape)} (need 2n-1 per mode)"
        )
    return f


def dense_convolve_naive(f, table: KernelTable):
    """Direct summation w_j = sum_i f_i g_{j-i}.  O(n^{2d}); oracle only."""
    f = _check_operands(f, table)
    g = table.values
    ns = f.shape
    out_dtype = np.result_type(f.dtype, g.dtype, np.float64)
    w = np.zeros(ns, dtype=out_dtype)
    # For fixed i the needed offsets j-i occupy one contiguous slab of g.
    for i in np.ndindex(*ns):
        slab = tuple(slice(n - 1 - ik, 2 * n - 1 - ik) for n, ik in zip(ns, i))
        w += f[i] * g[slab]
    return w


def circulant_column(table: KernelTable, circulant_size="2n-1"):
    """First column of the multilevel circulant embedding the kernel.

    With ``circulant_size="2n-1"`` the column along each mode is
    ``[g_0, ..., g_{n-1}, g_{1-n}, ..., g_{-1}]``; ``"2n"`` inserts one zero
    slot between ``g_{n-1}`` and ``g_{1-n}`` (offset +-n is never used by the
    restricted convolution, so padding it with zero is exact).
    """
    c = table.values
    for axis, n in enumerate(table.mode_sizes):
        if circulant_size == "2n-1":
            idx = np.concatenate([np.arange(n - 1, 2 * n - 1), np.arange(0, n - 1)])
            c = np.take(c, idx, axis=axis)
        elif circulant_size == "2n":
            pad = [(0, 0)] * c.ndim
            pad[axis] = (0, 1)
            padded = np.pad(c, pad)
            idx = np.concatenate(
                [np.arange(n - 1, 2 * n - 1), [2 * n - 1], np.arange(0, n - 1)]
            )
            c = np.take(padded, idx, axis=axis)
        else:
            raise ValueError(f"unknown circulant_size {circulant_size!r}")
    return c


def dense_convolve_fft(f, table: KernelTable, circulant_size="2n-1"):
    """Convolution through the circulant embedding: restrict(ifftn(fftn(c) * fftn(q)))."""
    f = _check_operands(f, table)
    ns = f.shape
    c = circulant_column(table, circulant_size)
    q = np.zeros(c.shape, dtype=np.result_type(f.dtype, np.float64))
    q[tuple(slice(0, n) for n in ns)] = f
    w_full = np.fft.ifftn(np.fft.fftn(c) * np.fft.fftn(q))
    w = w_full[tuple(slice(0, n) for n in ns)]
    if not np.iscomplexobj(f) and not np.iscomplexobj(table.values):
        return w.real.copy()
    return w
