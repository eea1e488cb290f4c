"""Black-box low-rank interpolation: maxvol pivoting, matrix skeleton cross,
and tensor-train cross over an element/fiber evaluator.

The TT driver is a one-site interpolatory cross with nested pivot sets: each
sweep evaluates, per bond, the fiber block A(I_{k-1}, i_k, J_{k+1}) of the
black box, orthogonalizes it and picks quasi-dominant rows by maxvol.  Cores
are assembled in the interpolation form Q * inv(Q[pivots]), which reproduces
every evaluated cross fiber exactly (no regression step), so interpolation
exactness at sampled indices is a structural property, not a tolerance.

Accuracy is certified on an independent random validation set; ranks are
increased in fixed increments until the validation error meets the target or
the rank cap is hit.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from .tt import TTTensor, tt_elements, tt_interface_left, tt_interface_right, tt_rank_one

__all__ = [
    "CrossConfig",
    "CrossStats",
    "BlackBoxTensor",
    "BlackBoxMatrix",
    "DegenerateInputError",
    "ToleranceNotReached",
    "maxvol",
    "skeleton_cross",
    "tt_cross",
    "tt_cross_with_stats",
    "hadamard_evaluator",
    "tt_blackbox",
]

DEFAULT_SEED = 20140602


class DegenerateInputError(ValueError):
    """Raised when a pivot-selection input is numerically rank-deficient."""


class ToleranceNotReached(RuntimeError):
    """Rank/sweep budget exhausted before the validation error met the target."""

    def __init__(self, achieved_error, target, ranks=None):
        super().__init__(
            f"cross approximation reached validation error {achieved_error:.3e} "
            f"(target {target:.3e}) before exhausting its rank budget"
        )
        self.achieved_error = achieved_error
        self.target = target
        self.ranks = ranks


@dataclass(frozen=True)
class CrossConfig:
    """Knobs of the cross drivers.

    ``delta`` is the target relative accuracy certified on random samples
    (global error is unobservable without densification; a slack factor of
    up to 3 is admitted by callers).  The seed makes runs reproducible.
    """

    delta: float = 1e-8
    initial_rank: int = 2
    max_rank: int = 64
    max_sweeps: int = 4
    rank_increment: int = 2
    validation_samples: int = 128
    seed: int = DEFAULT_SEED
    maxvol_tol: float = 5e-2

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.initial_rank < 1:
            raise ValueError("initial rank must be >= 1")
        if self.max_rank < self.initial_rank:
            raise ValueError("rank cap must be >= initial rank")
        if self.max_sweeps < 1 or self.rank_increment < 1:
            raise ValueError("sweep count and rank increment must be >= 1")
        if self.validation_samples < 1:
            raise ValueError("need at least one validation sample")


@dataclass
class CrossStats:
    """Diagnostics of one cross run (evaluator call counting feeds the benchmarks)."""

    evaluator_calls: int = 0
    validation_error: float = np.inf
    sweeps: int = 0
    rank_stages: int = 1
    left_sets: list = field(default_factory=list)
    right_sets: list = field(default_factory=list)


class BlackBoxTensor:
    """Mode sizes plus a pure element evaluator, with optional batched fast paths.

    ``element`` maps a multi-index tuple to a complex value and must be pure
    and reentrant (repeated evaluation bit-identical).  ``fiber_block``, when
    given, maps ``(mode, lefts, rights)`` with integer arrays ``lefts`` of
    shape (p, mode) and ``rights`` of shape (q, d-mode-1) to the complex block
    of shape (p, n_mode, q).  ``elements`` maps a (B, d) index array to (B,)
    values.  Both default to loops over ``element``.
    """

    def __init__(self, mode_sizes, element, fiber_block=None, elements=None):
        self.mode_sizes = tuple(int(n) for n in mode_sizes)
        if any(n < 1 for n in self.mode_sizes):
            raise ValueError("mode sizes must be positive")
        self._element = element
        self._fiber_block = fiber_block
        self._elements = elements

    @property
    def d(self):
        return len(self.mode_sizes)

    def element(self, idx):
        if len(idx) != self.d:
            raise ValueError(f"index length {len(idx)} != dimension {self.d}")
        for k, (i, n) in enumerate(zip(idx, self.mode_sizes)):
            if not 0 <= int(i) < n:
                raise ValueError(f"index {i} out of bounds for mode {k} (size {n})")
        return complex(self._element(tuple(int(i) for i in idx)))

    def elements(self, idx):
        idx = np.asarray(idx, dtype=np.intp)
        if self._elements is not None:
            return np.asarray(self._elements(idx), dtype=np.complex128).reshape(-1)
        return np.array([self._element(tuple(row)) for row in idx], dtype=np.complex128)

    def fiber(self, mode, left=(), right=()):
        """One mode-``mode`` fiber with the remaining indices fixed."""
        lefts = np.asarray(left, dtype=np.intp).reshape(1, -1)
        rights = np.asarray(right, dtype=np.intp).reshape(1, -1)
        return self.fiber_block(mode, lefts, rights)[0, :, 0]

    def fiber_block(self, mode, lefts, rights):
        lefts = np.asarray(lefts, dtype=np.intp)
        rights = np.asarray(rights, dtype=np.intp)
        if lefts.ndim != 2 or lefts.shape[1] != mode:
            raise ValueError("lefts must have shape (p, mode)")
        if rights.ndim != 2 or rights.shape[1] != self.d - mode - 1:
            raise ValueError("rights must have shape (q, d - mode - 1)")
        if self._fiber_block is not None:
            block = np.asarray(self._fiber_block(mode, lefts, rights), dtype=np.complex128)
            expected = (lefts.shape[0], self.mode_sizes[mode], rights.shape[0])
            if block.shape != expected:
                raise ValueError(f"fiber block shape {block.shape} != {expected}")
            return block
        n = self.mode_sizes[mode]
        block = np.empty((lefts.shape[0], n, rights.shape[0]), dtype=np.complex128)
        for a, lrow in enumerate(lefts):
            for b, rrow in enumerate(rights):
                for i in range(n):
                    block[a, i, b] = self._element(
                        tuple(lrow) + (i,) + tuple(rrow)
                    )
        return block


@dataclass(frozen=True)
class BlackBoxMatrix:
    """Matrix accessible through full-row and full-column evaluators."""

    n_rows: int
    n_cols: int
    row: callable
    col: callable

    def sample(self, idx):
        """Entries at (i, j) pairs; default goes through the row evaluator."""
        return np.array([self.row(int(i))[int(j)] for i, j in idx], dtype=np.complex128)


def maxvol(m, tol=5e-2, max_iters=200):
    """Quasi-dominant r x r row subset of an N x r matrix (N >= r).

    On return every entry of ``m @ inv(m[rows])`` has modulus <= 1 + tol.
    Iteration swaps the largest-modulus violating entry until none remains or
    the sweep cap is hit.
    """
    m = np.asarray(m)
    if m.ndim != 2:
        raise ValueError("maxvol expects a matrix")
    n_rows, r = m.shape
    if n_rows < r:
        raise ValueError(f"need at least as many rows ({n_rows}) as columns ({r})")
    if r == 0:
        raise ValueError("empty matrix")
    if n_rows == r:
        return np.arange(r, dtype=np.intp)
    p, _, u = scipy.linalg.lu(m, p_indices=True)
    diag = np.abs(np.diagonal(u))
    if diag.min() <= max(diag.max(), 1.0) * 1e-14:
        raise DegenerateInputError("matrix is numerically rank-deficient")
    rows = np.array(p[:r], dtype=np.intp)
    b = scipy.linalg.solve(m[rows].T, m.T).T  # m @ inv(m[rows])
    for _ in range(max_iters):
        flat = np.argmax(np.abs(b))
        i, j = divmod(flat, r)
        if np.abs(b[i, j]) <= 1.0 + tol:
            break
        b += np.outer(b[:, j], b[rows[j], :] - b[i, :]) / b[i, j]
        rows[j] = i
    return rows


def _interp_factor(q, rows):
    """Q @ inv(Q[rows]): identity on pivot rows, entries tamed by maxvol."""
    return scipy.linalg.solve(q[rows].T, q.T).T


def _filter_columns(mat):
    """Pivoted-QR column filter dropping only machine-level-redundant columns.

    Returns (q1, kept) where ``mat[:, kept]`` = q1 @ R1 exactly for an upper
    triangular R1; kept columns always include the dominant one.
    """
    q, r, piv = scipy.linalg.qr(mat, mode="economic", pivoting=True)
    diag = np.abs(np.diagonal(r))
    if diag.size == 0 or diag[0] == 0.0:
        return None, None  # zero block
    keep = int(np.sum(diag >= diag[0] * 1e-14))
    keep = max(keep, 1)
    return q[:, :keep], piv[:keep]


def skeleton_cross(matrix: BlackBoxMatrix, delta, config: CrossConfig | None = None):
    """Skeleton decomposition A ~= U @ V.T of a black-box low-rank matrix.

    Columns and rows are picked alternately by maxvol; the result interpolates
    the matrix exactly on the chosen rows and columns.  The relative accuracy
    ``delta`` is certified on random validation samples; the rank grows until
    it holds or the cap is reached (ToleranceNotReached).
    """
    cfg = config or CrossConfig(delta=delta)
    cfg = replace(cfg, delta=delta)
    n, m = matrix.n_rows, matrix.n_cols
    rng = np.random.default_rng(cfg.seed)
    val_idx = np.column_stack(
        [rng.integers(0, n, cfg.validation_samples), rng.integers(0, m, cfg.validation_samples)]
    )
    val_ref = matrix.sample(val_idx)
    ref_norm = np.linalg.norm(val_ref)
    if ref_norm == 0.0:
        return np.zeros((n, 1), dtype=np.complex128), np.zeros((m, 1), dtype=np.complex128)

    rank = min(cfg.initial_rank, n, m)
    cols = np.sort(rng.choice(m, size=rank, replace=False))
    achieved = np.inf
    while True:
        c = np.column_stack([matrix.col(j) for j in cols])
        rows = None
        for _ in range(cfg.max_sweeps):
            q1, kept = _filter_columns(c)
            if q1 is None:
                break
            cols = cols[kept]
            c = c[:, kept]
            rows = maxvol(q1, cfg.maxvol_tol)
            r_block = np.vstack([matrix.row(i) for i in rows])
            qr1, keptr = _filter_columns(r_block.T)
            rows = rows[keptr]
            new_cols = np.sort(maxvol(qr1, cfg.maxvol_tol))
            if np.array_equal(new_cols, np.sort(cols)):
                cols = new_cols
                c = np.column_stack([matrix.col(j) for j in cols])
                break
            cols = new_cols
            c = np.column_stack([matrix.col(j) for j in cols])
        q1, kept = _filter_columns(c)
        if q1 is None:
            return np.zeros((n, 1), dtype=np.complex128), np.zeros((m, 1), dtype=np.complex128)
        cols = cols[kept]
        if rows is None or len(rows) != q1.shape[1]:
            rows = maxvol(q1, cfg.maxvol_tol)
        u = _interp_factor(q1, rows)
        v = np.vstack([matrix.row(i) for i in rows]).T  # (m, r)
        approx = u[val_idx[:, 0], :] @ v[val_idx[:, 1], :].T
        achieved = np.linalg.norm(np.diagonal(approx) - val_ref) / ref_norm
        if achieved <= delta:
            return u, v
        new_rank = rank + cfg.rank_increment
        if new_rank > min(cfg.max_rank, n, m):
            raise ToleranceNotReached(achieved, delta, ranks=(len(cols),))
        extra = np.setdiff1d(np.arange(m), cols)
        add = rng.choice(extra, size=min(new_rank - len(cols), extra.size), replace=False)
        cols = np.sort(np.concatenate([cols, add]))
        rank = new_rank


def _trim_ranks(request, mode_sizes):
    """Cap a requested interior-rank vector by the structural bond limits."""
    d = len(mode_sizes)
    r = [1] + [int(x) for x in request] + [1]
    for k in range(1, d):
        r[k] = min(r[k], r[k - 1] * mode_sizes[k - 1])
    for k in range(d - 1, 0, -1):
        r[k] = min(r[k], r[k + 1] * mode_sizes[k])
    return r


def _random_nested_right_sets(rng, mode_sizes, ranks, existing=None):
    """Suffix pivot sets J[k] (shape (r_k, d-k)), each row nested in J[k+1]."""
    d = len(mode_sizes)
    right = [None] * (d + 1)
    right[d] = np.zeros((1, 0), dtype=np.intp)
    for k in range(d - 1, 0, -1):
        base = right[k + 1]
        base_keys = {tuple(int(x) for x in b) for b in base}
        want = ranks[k]
        have = []
        seen = set()
        if existing is not None and existing[k] is not None:
            for row in existing[k]:
                key = tuple(int(x) for x in row)
                # keep only rows still nested in the (possibly regrown) J[k+1]
                if key[1:] in base_keys and key not in seen:
                    seen.add(key)
                    have.append(key)
        guard = 0
        while len(have) < want and guard < 50 * want + 100:
            guard += 1
            i = int(rng.integers(0, mode_sizes[k]))
            b = base[int(rng.integers(0, base.shape[0]))]
            key = (i,) + tuple(int(x) for x in b)
            if key not in seen:
                seen.add(key)
                have.append(key)
        right[k] = np.array(have[:want], dtype=np.intp).reshape(len(have[:want]), d - k)
    return right


class _CallCounter:
    __slots__ = ("count",)

    def __init__(self):
        self.count = 0


def _lr_half_sweep(bb, left, right, cfg, counter):
    """Left-to-right pass: rebuild prefix sets and assemble interpolation cores."""
    d = bb.d
    n = bb.mode_sizes
    cores = []
    left[0] = np.zeros((1, 0), dtype=np.intp)
    for k in range(d - 1):
        lefts = left[k]
        rights = right[k + 1]
        p, q = lefts.shape[0], rights.shape[0]
        block = bb.fiber_block(k, lefts, rights)
        counter.count += p * n[k] * q
        mat = block.reshape(p * n[k], q)
        q1, kept = _filter_columns(mat)
        if q1 is None:
            raise DegenerateInputError("zero fiber block encountered mid-sweep")
        right[k + 1] = rights[kept]
        rows = maxvol(q1, cfg.maxvol_tol)
        core = _interp_factor(q1, rows)
        r_new = q1.shape[1]
        cores.append(core.reshape(p, n[k], r_new))
        prefix_rows = rows // n[k]
        mode_vals = rows % n[k]
        left[k + 1] = np.column_stack([lefts[prefix_rows], mode_vals]).astype(np.intp)
    block = bb.fiber_block(d - 1, left[d - 1], np.zeros((1, 0), dtype=np.intp))
    counter.count += left[d - 1].shape[0] * n[d - 1]
    cores.append(block)
    return cores


def _rl_half_sweep(bb, left, right, cfg, counter):
    """Right-to-left pass: rebuild (nested) suffix sets."""
    d = bb.d
    n = bb.mode_sizes
    right[d] = np.zeros((1, 0), dtype=np.intp)
    for k in range(d - 1, 0, -1):
        lefts = left[k]
        rights = right[k + 1]
        p, q = lefts.shape[0], rights.shape[0]
        block = bb.fiber_block(k, lefts, rights)
        counter.count += p * n[k] * q
        mat = block.reshape(p, n[k] * q).T  # rows indexed by (i_k, suffix)
        q1, kept = _filter_columns(mat)
        if q1 is None:
            raise DegenerateInputError("zero fiber block encountered mid-sweep")
        left[k] = lefts[kept]
        rows = maxvol(q1, cfg.maxvol_tol)
        mode_vals = rows // q
        suffix_rows = rows % q
        right[k] = np.column_stack([mode_vals, rights[suffix_rows]]).astype(np.intp)


def tt_cross_with_stats(bb: BlackBoxTensor, config: CrossConfig, initial_ranks=None):
    """TT cross approximation of a black-box tensor; returns (tensor, stats).

    ``initial_ranks`` optionally seeds the per-bond starting ranks (warm
    start); rank escalation then proceeds from that baseline in increments of
    ``config.rank_increment`` until the validation error meets ``delta`` or
    ``max_rank`` is exceeded.
    """
    cfg = config
    d = bb.d
    n = bb.mode_sizes
    rng = np.random.default_rng(cfg.seed)
    stats = CrossStats()
    counter = _CallCounter()

    val_idx = np.column_stack(
        [rng.integers(0, nk, cfg.validation_samples) for nk in n]
    ).astype(np.intp)
    val_ref = bb.elements(val_idx)
    counter.count += val_idx.shape[0]
    ref_norm = np.linalg.norm(val_ref)
    if ref_norm == 0.0:
        probes = np.column_stack([rng.integers(0, nk, 64) for nk in n]).astype(np.intp)
        probe_vals = bb.elements(probes)
        counter.count += probes.shape[0]
        if np.all(probe_vals == 0.0):
            stats.evaluator_calls = counter.count
            stats.validation_error = 0.0
            return tt_rank_one([np.zeros(nk) for nk in n]), stats

    if d == 1:
        fiber = bb.fiber_block(0, np.zeros((1, 0), np.intp), np.zeros((1, 0), np.intp))
        counter.count += n[0]
        stats.evaluator_calls = counter.count
        stats.validation_error = 0.0
        return TTTensor([fiber]), stats

    if initial_ranks is None:
        base = [cfg.initial_rank] * (d - 1)
    else:
        base = [max(int(r), 1) for r in initial_ranks]
        if len(base) != d - 1:
            raise ValueError("need one initial rank per interior bond")

    left = [None] * (d + 1)
    right = None
    stage = 0
    achieved = np.inf
    while True:
        request = [min(b + stage * cfg.rank_increment, cfg.max_rank) for b in base]
        ranks = _trim_ranks(request, n)
        right = _random_nested_right_sets(rng, n, ranks, existing=right)
        stats.rank_stages = stage + 1
        for sweep in range(cfg.max_sweeps):
            cores = _lr_half_sweep(bb, left, right, cfg, counter)
            stats.sweeps += 1
            tensor = TTTensor(cores)
            approx = tt_elements(tensor, val_idx)
            denom = ref_norm if ref_norm > 0 else max(np.linalg.norm(approx), 1.0)
            achieved = float(np.linalg.norm(approx - val_ref) / denom)
            if achieved <= cfg.delta:
                stats.evaluator_calls = counter.count
                stats.validation_error = achieved
                stats.left_sets = [np.array(s) for s in left]
                stats.right_sets = [np.array(s) for s in right]
                return tensor, stats
            if sweep < cfg.max_sweeps - 1:
                _rl_half_sweep(bb, left, right, cfg, counter)
        next_request = [min(b + (stage + 1) * cfg.rank_increment, cfg.max_rank) for b in base]
        if _trim_ranks(next_request, n) == ranks:
            # escalating further cannot change any bond: budget exhausted
            stats.evaluator_calls = counter.count
            stats.validation_error = achieved
            raise ToleranceNotReached(achieved, cfg.delta, ranks=TTTensor(cores).ranks)
        _rl_half_sweep(bb, left, right, cfg, counter)
        stage += 1


def tt_cross(bb: BlackBoxTensor, config: CrossConfig, initial_ranks=None) -> TTTensor:
    tensor, _ = tt_cross_with_stats(bb, config, initial_ranks=initial_ranks)
    return tensor


def hadamard_evaluator(a: TTTensor, b: TTTensor) -> BlackBoxTensor:
    """Black box for the elementwise product of two TT tensors.

    Element cost is two chain products; fiber blocks are evaluated through
    the left/right interface stacks of both operands, so a whole block costs
    O(n (r_a^2 + r_b^2)) plus the interface chains.
    """
    if a.mode_sizes != b.mode_sizes:
        raise ValueError(f"mode sizes differ: {a.mode_sizes} vs {b.mode_sizes}")

    def element(idx):
        return a.element(idx) * b.element(idx)

    def elements(idx):
        return tt_elements(a, idx) * tt_elements(b, idx)

    def fiber_block(mode, lefts, rights):
        block = None
        for t in (a, b):
            lam = tt_interface_left(t, lefts)  # (p, r_left)
            rho = tt_interface_right(t, rights, mode + 1)  # (r_right, q)
            part = np.einsum("pa,aib,bq->piq", lam, t.cores[mode], rho, optimize=True)
            block = part if block is None else block * part
        return block

    return BlackBoxTensor(a.mode_sizes, element, fiber_block=fiber_block, elements=elements)


def tt_blackbox(t: TTTensor) -> BlackBoxTensor:
    """Wrap an existing TT tensor as a black box (mainly for tests)."""

    def element(idx):
        return t.element(idx)

    def elements(idx):
        return tt_elements(t, idx)

    def fiber_block(mode, lefts, rights):
        lam = tt_interface_left(t, lefts)
        rho = tt_interface_right(t, rights, mode + 1)
        return np.einsum("pa,aib,bq->piq", lam, t.cores[mode], rho, optimize=True)

    return BlackBoxTensor(t.mode_sizes, element, fiber_block=fiber_block, elements=elements)
