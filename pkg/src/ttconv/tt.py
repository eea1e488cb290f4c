"""Tensor-train format and the structural operations the convolution pipeline composes.

A d-dimensional tensor is stored as a chain of 3-way cores ``G_k`` of shape
``(r_{k-1}, n_k, r_k)`` with boundary ranks ``r_0 = r_d = 1``; an element is
the matrix product ``G_1(i_1) G_2(i_2) ... G_d(i_d)``.  Cores are complex128
throughout; real tensors simply carry zero imaginary parts (most of the
pipeline lives in the frequency domain).

Zero-padding, restriction, per-mode permutation, per-core DFT and the exact
Hadamard product are all exact (no approximation beyond floating point);
``tt_round`` and ``tt_from_dense`` truncate with a guaranteed relative
Frobenius bound.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "TTTensor",
    "tt_from_dense",
    "tt_to_dense",
    "tt_element",
    "tt_elements",
    "tt_round",
    "tt_dot",
    "tt_dot3",
    "tt_norm",
    "tt_add",
    "tt_scale",
    "tt_conj",
    "tt_zero_pad",
    "tt_restrict",
    "tt_mode_permute",
    "tt_dft_per_core",
    "tt_hadamard_exact",
    "tt_real_part",
    "tt_random",
    "tt_rank_one",
]


class TTTensor:
    """Immutable tensor-train container: a validated chain of 3-way cores."""

    __slots__ = ("cores",)

    def __init__(self, cores):
        if len(cores) == 0:
            raise ValueError("a TT tensor needs at least one core")
        converted = []
        for c in cores:
            c = np.array(c, dtype=np.complex128, copy=True)
            if c.ndim != 3:
                raise ValueError(f"core has {c.ndim} axes, expected 3")
            if min(c.shape) < 1:
                raise ValueError(f"core shape {c.shape} has a zero dimension")
            c.flags.writeable = False
            converted.append(c)
        if converted[0].shape[0] != 1 or converted[-1].shape[2] != 1:
            raise ValueError("boundary TT-ranks must be 1")
        for k in range(len(converted) - 1):
            if converted[k].shape[2] != converted[k + 1].shape[0]:
                raise ValueError(
                    f"rank mismatch between cores {k} and {k + 1}: "
                    f"{converted[k].shape[2]} != {converted[k + 1].shape[0]}"
                )
        self.cores = tuple(converted)

    @property
    def d(self):
        return len(self.cores)

    @property
    def mode_sizes(self):
        return tuple(c.shape[1] for c in self.cores)

    @property
    def ranks(self):
        """All d+1 bond dimensions, including the unit boundary ranks."""
        return (1,) + tuple(c.shape[2] for c in self.cores)

    def element(self, idx):
        return tt_element(self, idx)

    def to_dense(self):
        return tt_to_dense(self)

    def __repr__(self):
        return f"TTTensor(modes={self.mode_sizes}, ranks={self.ranks})"


def _check_index(t, idx):
    if len(idx) != t.d:
        raise ValueError(f"index length {len(idx)} != dimension {t.d}")
    for k, (i, n) in enumerate(zip(idx, t.mode_sizes)):
        if not 0 <= int(i) < n:
            raise ValueError(f"index {i} out of bounds for mode {k} of size {n}")


def tt_element(t: TTTensor, idx):
    """Single element by the chained matrix product; O(sum r_{k-1} r_k)."""
    _check_index(t, idx)
    v = t.cores[0][:, int(idx[0]), :]
    for k in range(1, t.d):
        v = v @ t.cores[k][:, int(idx[k]), :]
    return complex(v[0, 0])


def tt_elements(t: TTTensor, idx):
    """Batched element evaluation; ``idx`` is an integer array of shape (B, d)."""
    idx = np.asarray(idx, dtype=np.intp)
    if idx.ndim != 2 or idx.shape[1] != t.d:
        raise ValueError(f"index array must have shape (B, {t.d})")
    v = t.cores[0][0, idx[:, 0], :]  # (B, r_1)
    for k in range(1, t.d):
        slabs = t.cores[k][:, idx[:, k], :]  # (r_k, B, r_{k+1})
        v = np.einsum("br,rbs->bs", v, slabs)
    return v[:, 0]


def tt_to_dense(t: TTTensor):
    """Full array; intended for oracle comparisons at small sizes."""
    out = t.cores[0][0]  # (n_1, r_1)
    for k in range(1, t.d):
        out = np.tensordot(out, t.cores[k], axes=([out.ndim - 1], [0]))
    return np.ascontiguousarray(out[..., 0])


def _chop(singular_values, threshold):
    """Smallest kept rank so the discarded tail norm stays below ``threshold``."""
    if singular_values.size == 0:
        return 1
    # tails[k] = norm of values k..end
    tails = np.sqrt(np.cumsum(singular_values[::-1] ** 2))[::-1]
    keep = singular_values.size
    for k in range(singular_values.size):
        if tails[k] <= threshold:
            keep = k
            break
    return max(keep, 1)


def tt_from_dense(a, tol=0.0):
    """TT-SVD: exact at tol=0, otherwise relative Frobenius error <= tol.

    The truncation budget is split as ``tol * ||a|| / sqrt(d-1)`` per
    unfolding, which guarantees the aggregate bound.
    """
    if tol < 0:
        raise ValueError("tolerance must be nonnegative")
    a = np.asarray(a, dtype=np.complex128)
    d = a.ndim
    if d == 0:
        raise ValueError("scalar input has no modes")
    ns = a.shape
    if d == 1:
        return TTTensor([a.reshape(1, ns[0], 1)])
    threshold = tol * np.linalg.norm(a) / np.sqrt(d - 1)
    cores = []
    r_prev = 1
    rest = a.reshape(1, -1)
    for k in range(d - 1):
        mat = rest.reshape(r_prev * ns[k], -1)
        u, s, vh = np.linalg.svd(mat, full_matrices=False)
        r = _chop(s, threshold)
        cores.append(u[:, :r].reshape(r_prev, ns[k], r))
        rest = (s[:r, None] * vh[:r])
        r_prev = r
    cores.append(rest.reshape(r_prev, ns[-1], 1))
    return TTTensor(cores)


def tt_round(t: TTTensor, tol):
    """Rank truncation with relative Frobenius error <= tol.

    Standard two-sweep procedure: right-to-left orthogonalization, then a
    left-to-right SVD sweep with the tolerance split per unfolding.
    """
    if tol < 0:
        raise ValueError("tolerance must be nonnegative")
    d = t.d
    if d == 1:
        return TTTensor([t.cores[0]])
    cores = [np.array(c) for c in t.cores]
    # Right-to-left: make cores 1..d-1 row-orthogonal, pull factors left.
    for k in range(d - 1, 0, -1):
        r0, n, r1 = cores[k].shape
        mat = cores[k].reshape(r0, n * r1)
        q, rmat = np.linalg.qr(mat.conj().T)
        rnew = q.shape[1]
        cores[k] = q.conj().T.reshape(rnew, n, r1)
        cores[k - 1] = np.einsum("abr,rs->abs", cores[k - 1], rmat.conj().T)
    norm = np.linalg.norm(cores[0])
    if norm == 0.0:
        return tt_rank_one([np.zeros(n) for n in t.mode_sizes])
    threshold = tol * norm / np.sqrt(d - 1)
    for k in range(d - 1):
        r0, n, r1 = cores[k].shape
        mat = cores[k].reshape(r0 * n, r1)
        u, s, vh = np.linalg.svd(mat, full_matrices=False)
        r = _chop(s, threshold)
        cores[k] = u[:, :r].reshape(r0, n, r)
        carry = s[:r, None] * vh[:r]
        cores[k + 1] = np.einsum("rs,sbc->rbc", carry, cores[k + 1])
    return TTTensor(cores)


def _check_same_modes(a: TTTensor, b: TTTensor):
    if a.mode_sizes != b.mode_sizes:
        raise ValueError(f"mode sizes differ: {a.mode_sizes} vs {b.mode_sizes}")


def tt_dot(a: TTTensor, b: TTTensor):
    """Inner product sum(conj(a) * b); O(d n r^3)."""
    _check_same_modes(a, b)
    m = np.ones((1, 1), dtype=np.complex128)
    for ca, cb in zip(a.cores, b.cores):
        m = np.einsum("ab,aic,bid->cd", m, ca.conj(), cb, optimize=True)
    return complex(m[0, 0])


def tt_dot3(a: TTTensor, b: TTTensor, c: TTTensor):
    """Trilinear form sum(conj(a) * b * c), computed exactly without forming b*c."""
    _check_same_modes(a, b)
    _check_same_modes(a, c)
    m = np.ones((1, 1, 1), dtype=np.complex128)
    for ca, cb, cc in zip(a.cores, b.cores, c.cores):
        m = np.einsum("abc,aid,bie,cif->def", m, ca.conj(), cb, cc, optimize=True)
    return complex(m[0, 0, 0])


def tt_norm(t: TTTensor):
    return float(np.sqrt(max(tt_dot(t, t).real, 0.0)))


def tt_add(a: TTTensor, b: TTTensor):
    """Exact sum by block-diagonal core concatenation; ranks add."""
    _check_same_modes(a, b)
    if a.d == 1:
        return TTTensor([a.cores[0] + b.cores[0]])
    cores = []
    for k, (ca, cb) in enumerate(zip(a.cores, b.cores)):
        ra0, n, ra1 = ca.shape
        rb0, _, rb1 = cb.shape
        if k == 0:
            cores.append(np.concatenate([ca, cb], axis=2))
        elif k == a.d - 1:
            cores.append(np.concatenate([ca, cb], axis=0))
        else:
            blk = np.zeros((ra0 + rb0, n, ra1 + rb1), dtype=np.complex128)
            blk[:ra0, :, :ra1] = ca
            blk[ra0:, :, ra1:] = cb
            cores.append(blk)
    return TTTensor(cores)


def tt_scale(t: TTTensor, alpha):
    cores = list(t.cores)
    cores[0] = cores[0] * alpha
    return TTTensor(cores)


def tt_conj(t: TTTensor):
    """Elementwise complex conjugate (conjugate every core)."""
    return TTTensor([c.conj() for c in t.cores])


def tt_zero_pad(t: TTTensor, new_sizes):
    """Extend each mode with trailing zero slices; exact, ranks unchanged."""
    if len(new_sizes) != t.d:
        raise ValueError("need one new size per mode")
    cores = []
    for c, m in zip(t.cores, new_sizes):
        r0, n, r1 = c.shape
        if m < n:
            raise ValueError(f"new size {m} smaller than current {n}")
        padded = np.zeros((r0, m, r1), dtype=np.complex128)
        padded[:, :n, :] = c
        cores.append(padded)
    return TTTensor(cores)


def tt_restrict(t: TTTensor, ranges):
    """Subtensor over half-open per-mode index ranges; exact, ranks unchanged."""
    if len(ranges) != t.d:
        raise ValueError("need one range per mode")
    cores = []
    for c, (lo, hi) in zip(t.cores, ranges):
        n = c.shape[1]
        if not (0 <= lo < hi <= n):
            raise ValueError(f"range ({lo}, {hi}) invalid for mode of size {n}")
        cores.append(c[:, lo:hi, :])
    return TTTensor(cores)


def tt_mode_permute(t: TTTensor, perms):
    """Per-mode reindexing: result(i_1..i_d) = t(sigma_1(i_1), ..., sigma_d(i_d))."""
    if len(perms) != t.d:
        raise ValueError("need one permutation per mode")
    cores = []
    for c, sigma in zip(t.cores, perms):
        sigma = np.asarray(sigma, dtype=np.intp)
        n = c.shape[1]
        if sigma.shape != (n,) or not np.array_equal(np.sort(sigma), np.arange(n)):
            raise ValueError(f"permutation is not a bijection on [0, {n})")
        cores.append(c[:, sigma, :])
    return TTTensor(cores)


def tt_dft_per_core(t: TTTensor, direction="forward"):
    """Full d-dimensional DFT as independent 1-D transforms along each core's mode axis.

    Exact and rank-preserving: the d-dimensional Fourier matrix factors as a
    Kronecker product, so each factor acts on one core only.
    """
    if direction == "forward":
        cores = [np.fft.fft(c, axis=1) for c in t.cores]
    elif direction == "inverse":
        cores = [np.fft.ifft(c, axis=1) for c in t.cores]
    else:
        raise ValueError(f"unknown direction {direction!r}")
    return TTTensor(cores)


def tt_hadamard_exact(a: TTTensor, b: TTTensor):
    """Exact elementwise product; output ranks are products of input ranks."""
    _check_same_modes(a, b)
    cores = []
    for ca, cb in zip(a.cores, b.cores):
        ra0, n, ra1 = ca.shape
        rb0, _, rb1 = cb.shape
        blk = np.einsum("aib,cid->acibd", ca, cb)
        cores.append(blk.reshape(ra0 * rb0, n, ra1 * rb1))
    return TTTensor(cores)


def tt_real_part(t: TTTensor):
    """Re(t) as (t + conj(t))/2; exact, ranks at most double (round afterwards)."""
    return tt_scale(tt_add(t, tt_conj(t)), 0.5)


def tt_rank_one(vectors):
    """Rank-1 TT with the given per-mode factor vectors."""
    cores = [np.asarray(v, dtype=np.complex128).reshape(1, -1, 1) for v in vectors]
    return TTTensor(cores)


def tt_random(mode_sizes, rank, rng, complex_cores=False):
    """Random TT with interior ranks ``rank`` (int or per-bond list), standard normal cores."""
    d = len(mode_sizes)
    if np.isscalar(rank):
        interior = [int(rank)] * (d - 1)
    else:
        interior = [int(r) for r in rank]
        if len(interior) != d - 1:
            raise ValueError("need one interior rank per bond")
    ranks = [1] + interior + [1]
    cores = []
    for k, n in enumerate(mode_sizes):
        shape = (ranks[k], n, ranks[k + 1])
        c = rng.standard_normal(shape)
        if complex_cores:
            c = c + 1j * rng.standard_normal(shape)
        cores.append(c)
    return TTTensor(cores)


def tt_interface_left(t: TTTensor, prefixes):
    """Stacked products G_1(i_1)...G_k(i_k) for prefix multi-indices.

    ``prefixes`` has shape (p, k) with 0 <= k < d; returns (p, r_k).
    """
    prefixes = np.asarray(prefixes, dtype=np.intp)
    p, k = prefixes.shape
    v = np.ones((p, 1), dtype=np.complex128)
    for j in range(k):
        slabs = t.cores[j][:, prefixes[:, j], :]  # (r_j, p, r_{j+1})
        v = np.einsum("pr,rps->ps", v, slabs)
    return v


def tt_interface_right(t: TTTensor, suffixes, start_mode):
    """Stacked products G_m(i_m)...G_d(i_d) for suffix multi-indices.

    ``suffixes`` has shape (q, d - start_mode); returns (r_{start_mode-1}, q).
    """
    suffixes = np.asarray(suffixes, dtype=np.intp)
    q, tail = suffixes.shape
    if tail != t.d - start_mode:
        raise ValueError("suffix length does not match start mode")
    v = np.ones((1, q), dtype=np.complex128)
    for j in range(t.d - 1, start_mode - 1, -1):
        slabs = t.cores[j][:, suffixes[:, j - start_mode], :]  # (r_j, q, r_{j+1})
        v = np.einsum("rqs,sq->rq", slabs, v)
    return v
