"""TT format operations against dense expansion oracles."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ttconv.tt import (
    TTTensor,
    tt_add,
    tt_dft_per_core,
    tt_dot,
    tt_dot3,
    tt_element,
    tt_elements,
    tt_from_dense,
    tt_hadamard_exact,
    tt_mode_permute,
    tt_norm,
    tt_rank_one,
    tt_random,
    tt_real_part,
    tt_restrict,
    tt_round,
    tt_scale,
    tt_to_dense,
    tt_zero_pad,
)


def rel_err(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300)


class TestStructure:
    def test_rank_chaining_enforced(self):
        good = [np.zeros((1, 3, 2)), np.zeros((2, 3, 1))]
        TTTensor(good)
        bad = [np.zeros((1, 3, 2)), np.zeros((3, 3, 1))]
        with pytest.raises(ValueError):
            TTTensor(bad)

    def test_boundary_ranks_enforced(self):
        with pytest.raises(ValueError):
            TTTensor([np.zeros((2, 3, 1))])

    def test_properties(self, rng):
        t = tt_random((4, 5, 6), [2, 3], rng)
        assert t.d == 3
        assert t.mode_sizes == (4, 5, 6)
        assert t.ranks == (1, 2, 3, 1)


class TestElement:
    def test_rank_one_all_ones(self):
        t = tt_rank_one([np.ones(3), np.ones(4), np.ones(2)])
        assert tt_element(t, (2, 3, 1)) == pytest.approx(1.0)

    def test_single_core_is_vector(self):
        t = tt_rank_one([np.array([5.0, 7.0, 9.0])])
        assert tt_element(t, (1,)) == pytest.approx(7.0)

    def test_matches_dense(self, rng):
        t = tt_random((4, 3, 5), [3, 2], rng, complex_cores=True)
        dense = tt_to_dense(t)
        for idx in [(0, 0, 0), (3, 2, 4), (1, 2, 3)]:
            assert abs(tt_element(t, idx) - dense[idx]) <= 1e-13 * abs(dense[idx])

    def test_batched_matches_dense(self, rng):
        t = tt_random((4, 3, 5), [3, 2], rng)
        dense = tt_to_dense(t)
        idx = np.column_stack([rng.integers(0, n, 50) for n in t.mode_sizes])
        vals = tt_elements(t, idx)
        ref = np.array([dense[tuple(row)] for row in idx])
        assert np.allclose(vals, ref, atol=1e-13)

    def test_out_of_bounds(self, rng):
        t = tt_random((4, 3), [2], rng)
        with pytest.raises(ValueError):
            tt_element(t, (4, 0))
        with pytest.raises(ValueError):
            tt_element(t, (0,))


class TestFromToDense:
    def test_rank_one_outer_product(self, rng):
        x, y, z = rng.standard_normal(4), rng.standard_normal(5), rng.standard_normal(6)
        a = np.einsum("i,j,k->ijk", x, y, z)
        t = tt_from_dense(a, tol=1e-12)
        assert t.ranks == (1, 1, 1, 1)
        assert rel_err(tt_to_dense(t), a) <= 1e-12

    def test_sum_of_univariates_has_rank_two(self):
        # A(i,j,k) = x_i + y_j + z_k: every unfolding has rank exactly 2
        x = np.linspace(0.0, 1.0, 8)
        y = np.linspace(2.0, 3.0, 8) ** 2
        z = np.cos(np.linspace(0.0, 4.0, 8))
        a = x[:, None, None] + y[None, :, None] + z[None, None, :]
        for k in (1, 2):
            unf = a.reshape(8**k, 8 ** (3 - k))
            s = np.linalg.svd(unf, compute_uv=False)
            assert s[1] / s[0] > 1e-8 and s[2] / s[0] < 1e-13
        t = tt_from_dense(a, tol=1e-12)
        assert t.ranks == (1, 2, 2, 1)

    def test_roundtrip_full_rank(self, rng):
        a = rng.standard_normal((4, 4, 4))
        t = tt_from_dense(a, tol=1e-12)
        assert rel_err(tt_to_dense(t), a) <= 1e-12

    def test_negative_tol_rejected(self, rng):
        with pytest.raises(ValueError):
            tt_from_dense(rng.standard_normal((2, 2)), tol=-1.0)

    @given(st.integers(0, 2**31 - 1), st.sampled_from([0.0, 1e-10, 1e-4, 1e-1]))
    def test_error_bound_holds(self, seed, tol):
        a = np.random.default_rng(seed).standard_normal((4, 3, 4))
        t = tt_from_dense(a, tol=tol)
        assert rel_err(tt_to_dense(t), a) <= max(tol, 1e-13)


class TestRound:
    def test_padded_rank_recovered(self, rng):
        t = tt_rank_one([rng.standard_normal(4) for _ in range(3)])
        padded_cores = []
        for k, c in enumerate(t.cores):
            r0 = 1 if k == 0 else 2
            r1 = 1 if k == 2 else 2
            blk = np.zeros((r0, 4, r1), dtype=complex)
            blk[: c.shape[0], :, : c.shape[2]] = c
            padded_cores.append(blk)
        padded = TTTensor(padded_cores)
        rounded = tt_round(padded, 1e-12)
        assert rounded.ranks == (1, 1, 1, 1)
        assert rel_err(tt_to_dense(rounded), tt_to_dense(t)) <= 1e-12

    def test_parallel_sum_redundancy(self, rng):
        t = tt_random((4, 5, 4), [2, 3], rng)
        doubled = tt_round(tt_add(t, t), 1e-12)
        assert doubled.ranks == t.ranks
        assert rel_err(tt_to_dense(doubled), 2.0 * tt_to_dense(t)) <= 1e-12

    @pytest.mark.parametrize("tol", [1e-12, 1e-6, 1e-2])
    def test_error_bound_vs_dense(self, rng, tol):
        t = tt_random((5, 6, 5, 4), [4, 5, 4], rng)
        dense = tt_to_dense(t)
        rounded = tt_round(t, tol)
        assert rel_err(tt_to_dense(rounded), dense) <= tol
        assert all(r2 <= r1 for r1, r2 in zip(t.ranks, rounded.ranks))

    def test_negative_tol_rejected(self, rng):
        with pytest.raises(ValueError):
            tt_round(tt_random((3, 3), [2], rng), -1e-3)


class TestDotNorm:
    def test_all_ones(self):
        t = tt_rank_one([np.ones(2)] * 3)
        assert tt_dot(t, t) == pytest.approx(8.0)
        assert tt_norm(t) == pytest.approx(np.sqrt(8.0))

    def test_orthogonal_rank_ones(self):
        a = tt_rank_one([np.array([1.0, 0.0]), np.array([1.0, 1.0])])
        b = tt_rank_one([np.array([0.0, 1.0]), np.array([1.0, -2.0])])
        assert tt_dot(a, b) == pytest.approx(0.0)

    def test_matches_dense(self, rng):
        a = tt_random((4, 3, 4), [2, 3], rng, complex_cores=True)
        b = tt_random((4, 3, 4), [3, 2], rng, complex_cores=True)
        ref = np.vdot(tt_to_dense(a), tt_to_dense(b))
        assert abs(tt_dot(a, b) - ref) <= 1e-12 * abs(ref)

    def test_shape_mismatch(self, rng):
        with pytest.raises(ValueError):
            tt_dot(tt_random((3, 3), [2], rng), tt_random((3, 4), [2], rng))

    def test_trilinear_matches_dense(self, rng):
        shape = (3, 4, 3)
        a = tt_random(shape, [2, 2], rng, complex_cores=True)
        b = tt_random(shape, [2, 3], rng, complex_cores=True)
        c = tt_random(shape, [3, 2], rng, complex_cores=True)
        ref = np.sum(np.conj(tt_to_dense(a)) * tt_to_dense(b) * tt_to_dense(c))
        assert abs(tt_dot3(a, b, c) - ref) <= 1e-12 * abs(ref)


class TestZeroPad:
    def test_1d(self):
        t = tt_rank_one([np.array([1.5, -2.0])])
        padded = tt_zero_pad(t, [3])
        assert np.allclose(tt_to_dense(padded), [1.5, -2.0, 0.0])

    def test_all_ones_2d(self):
        t = tt_rank_one([np.ones(2), np.ones(2)])
        padded = tt_zero_pad(t, [3, 3])
        dense = tt_to_dense(padded)
        assert dense[1, 1] == pytest.approx(1.0)
        assert dense[2, 2] == pytest.approx(0.0)
        assert padded.ranks == t.ranks

    def test_matches_dense_pad(self, rng):
        t = tt_random((3, 4, 2), [2, 2], rng)
        padded = tt_zero_pad(t, (5, 7, 3))
        ref = np.zeros((5, 7, 3), dtype=complex)
        ref[:3, :4, :2] = tt_to_dense(t)
        assert np.array_equal(tt_to_dense(padded), ref)

    def test_shrink_rejected(self, rng):
        with pytest.raises(ValueError):
            tt_zero_pad(tt_random((3, 3), [1], rng), (2, 3))


class TestRestrict:
    def test_full_range_identity(self, rng):
        t = tt_random((4, 5), [2], rng)
        r = tt_restrict(t, [(0, 4), (0, 5)])
        assert np.array_equal(tt_to_dense(r), tt_to_dense(t))

    def test_1d_prefix(self):
        t = tt_rank_one([np.array([1.0, 2.0, 3.0])])
        assert np.allclose(tt_to_dense(tt_restrict(t, [(0, 2)])), [1.0, 2.0])

    def test_pad_then_restrict_roundtrip(self, rng):
        t = tt_random((3, 4), [2], rng)
        back = tt_restrict(tt_zero_pad(t, (6, 7)), [(0, 3), (0, 4)])
        assert np.array_equal(tt_to_dense(back), tt_to_dense(t))

    def test_bad_ranges(self, rng):
        t = tt_random((3, 3), [1], rng)
        with pytest.raises(ValueError):
            tt_restrict(t, [(0, 0), (0, 3)])
        with pytest.raises(ValueError):
            tt_restrict(t, [(0, 4), (0, 3)])


class TestModePermute:
    def test_identity(self, rng):
        t = tt_random((3, 4), [2], rng)
        p = tt_mode_permute(t, [np.arange(3), np.arange(4)])
        assert np.array_equal(tt_to_dense(p), tt_to_dense(t))

    def test_reverse_1d(self):
        t = tt_rank_one([np.array([1.0, 2.0, 3.0])])
        rev = tt_mode_permute(t, [np.array([2, 1, 0])])
        assert np.allclose(tt_to_dense(rev), [3.0, 2.0, 1.0])

    def test_matches_dense_permutation(self, rng):
        t = tt_random((4, 3, 5), [2, 2], rng)
        perms = [rng.permutation(n) for n in t.mode_sizes]
        p = tt_mode_permute(t, perms)
        ref = tt_to_dense(t)[np.ix_(*perms)]
        assert np.array_equal(tt_to_dense(p), ref)

    def test_non_bijection_rejected(self, rng):
        t = tt_random((3, 3), [1], rng)
        with pytest.raises(ValueError):
            tt_mode_permute(t, [np.array([0, 0, 2]), np.arange(3)])


class TestDftPerCore:
    def test_constant_to_scaled_delta(self):
        t = tt_rank_one([np.ones(2), np.ones(2)])
        f = tt_to_dense(tt_dft_per_core(t))
        ref = np.zeros((2, 2), dtype=complex)
        ref[0, 0] = 4.0
        assert np.allclose(f, ref, atol=1e-13)

    def test_roundtrip(self, rng):
        t = tt_random((4, 5, 3), [2, 3], rng, complex_cores=True)
        back = tt_dft_per_core(tt_dft_per_core(t), "inverse")
        assert rel_err(tt_to_dense(back), tt_to_dense(t)) <= 1e-12

    def test_matches_dense_fftn(self, rng):
        t = tt_random((4, 3, 5), [3, 2], rng)
        f = tt_to_dense(tt_dft_per_core(t))
        ref = np.fft.fftn(tt_to_dense(t))
        assert rel_err(f, ref) <= 1e-12
        finv = tt_to_dense(tt_dft_per_core(t, "inverse"))
        assert rel_err(finv, np.fft.ifftn(tt_to_dense(t))) <= 1e-12

    def test_rank_preservation_and_unitary_scaling(self, rng):
        for _ in range(10):
            shape = tuple(rng.integers(2, 6, size=rng.integers(1, 5)))
            max_ranks = [min(4, int(np.prod(shape[: k + 1])), int(np.prod(shape[k + 1 :])))
                         for k in range(len(shape) - 1)]
            t = tt_random(shape, [int(rng.integers(1, m + 1)) for m in max_ranks], rng,
                          complex_cores=True)
            f = tt_dft_per_core(t)
            assert f.ranks == t.ranks
            scale = np.sqrt(np.prod(shape))
            assert tt_norm(f) == pytest.approx(scale * tt_norm(t), rel=1e-12)


class TestHadamard:
    def test_times_all_ones(self, rng):
        t = tt_random((3, 4), [2], rng)
        ones = tt_rank_one([np.ones(3), np.ones(4)])
        h = tt_hadamard_exact(t, ones)
        assert rel_err(tt_to_dense(h), tt_to_dense(t)) <= 1e-14

    def test_rank_one_times_rank_one(self, rng):
        a = tt_rank_one([rng.standard_normal(3), rng.standard_normal(4)])
        b = tt_rank_one([rng.standard_normal(3), rng.standard_normal(4)])
        h = tt_hadamard_exact(a, b)
        assert h.ranks == (1, 1, 1)
        assert rel_err(tt_to_dense(h), tt_to_dense(a) * tt_to_dense(b)) <= 1e-13

    def test_matches_dense_product(self, rng):
        a = tt_random((4, 3, 4), [2, 3], rng, complex_cores=True)
        b = tt_random((4, 3, 4), [3, 2], rng, complex_cores=True)
        h = tt_hadamard_exact(a, b)
        assert h.ranks == (1, 6, 6, 1)
        assert rel_err(tt_to_dense(h), tt_to_dense(a) * tt_to_dense(b)) <= 1e-12


class TestRealPart:
    def test_real_input_roundtrips(self, rng):
        t = tt_random((4, 4), [2], rng)
        rp = tt_real_part(t)
        assert all(r <= 2 * q for r, q in zip(rp.ranks, t.ranks))
        assert rel_err(tt_to_dense(rp), tt_to_dense(t).real) <= 1e-13
        assert tt_round(rp, 1e-12).ranks == t.ranks

    def test_purely_imaginary_vanishes(self, rng):
        t = tt_scale(tt_random((3, 3), [2], rng), 1j)
        rounded = tt_round(tt_real_part(t), 1e-12)
        assert tt_norm(rounded) <= 1e-12

    def test_complex_matches_dense(self, rng):
        t = tt_random((3, 4, 3), [2, 2], rng, complex_cores=True)
        assert rel_err(tt_to_dense(tt_real_part(t)), tt_to_dense(t).real) <= 1e-13


class TestAddScale:
    def test_add_matches_dense(self, rng):
        a = tt_random((3, 4, 3), [2, 2], rng)
        b = tt_random((3, 4, 3), [1, 3], rng)
        assert rel_err(tt_to_dense(tt_add(a, b)), tt_to_dense(a) + tt_to_dense(b)) <= 1e-13

    def test_scale(self, rng):
        t = tt_random((3, 3), [2], rng)
        assert rel_err(tt_to_dense(tt_scale(t, -2.5)), -2.5 * tt_to_dense(t)) <= 1e-14


@given(st.integers(0, 2**31 - 1))
def test_structural_ops_are_exact(seed):
    """zero_pad, restrict, permute: exact vs dense oracle on random inputs."""
    rng = np.random.default_rng(seed)
    shape = tuple(rng.integers(2, 5, size=3))
    t = tt_random(shape, [2, 2], rng, complex_cores=True)
    dense = tt_to_dense(t)
    new_sizes = tuple(n + int(rng.integers(0, 3)) for n in shape)
    padded = tt_zero_pad(t, new_sizes)
    ref = np.zeros(new_sizes, dtype=complex)
    ref[tuple(slice(0, n) for n in shape)] = dense
    assert np.array_equal(tt_to_dense(padded), ref)
    back = tt_restrict(padded, [(0, n) for n in shape])
    assert np.array_equal(tt_to_dense(back), dense)
    perms = [rng.permutation(n) for n in shape]
    assert np.array_equal(tt_to_dense(tt_mode_permute(t, perms)), dense[np.ix_(*perms)])
