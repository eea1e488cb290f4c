"""Dense oracle checks: DFT conventions and the two convolution paths."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ttconv.dense import (
    KernelTable,
    circulant_column,
    dense_convolve_fft,
    dense_convolve_naive,
    dft_1d,
)


def random_kernel(rng, mode_sizes):
    return KernelTable(rng.standard_normal(tuple(2 * n - 1 for n in mode_sizes)))


class TestDft1d:
    def test_constant_to_scaled_delta(self):
        assert np.allclose(dft_1d([1.0, 1.0]), [2.0, 0.0])

    def test_delta_to_constant(self):
        assert np.allclose(dft_1d([1.0, 0.0, 0.0]), [1.0, 1.0, 1.0])

    def test_roundtrip_length_five(self, rng):
        v = rng.standard_normal(5) + 1j * rng.standard_normal(5)
        back = dft_1d(dft_1d(v), "inverse")
        assert np.linalg.norm(back - v) / np.linalg.norm(v) <= 1e-13

    def test_forward_convention_matches_definition(self, rng):
        # F(v)_i = sum_j exp(-2 pi i i j / n) v_j, unnormalized
        n = 7
        v = rng.standard_normal(n)
        i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        f = np.exp(-2j * np.pi * i * j / n) @ v
        assert np.allclose(dft_1d(v), f, atol=1e-12)

    def test_inverse_carries_one_over_n(self, rng):
        n = 6
        v = rng.standard_normal(n)
        i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        f = np.exp(2j * np.pi * i * j / n) @ v / n
        assert np.allclose(dft_1d(v, "inverse"), f, atol=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            dft_1d([])

    @given(st.integers(min_value=1, max_value=40), st.integers(0, 2**31 - 1))
    def test_roundtrip_any_length(self, n, seed):
        v = np.random.default_rng(seed).standard_normal(n)
        back = dft_1d(dft_1d(v), "inverse")
        scale = max(np.linalg.norm(v), 1e-30)
        assert np.linalg.norm(back - v) / scale <= 1e-13

    @given(st.integers(min_value=1, max_value=64), st.integers(0, 2**31 - 1))
    def test_parseval_scaling(self, n, seed):
        v = np.random.default_rng(seed).standard_normal(n)
        assert np.isclose(
            np.linalg.norm(dft_1d(v)) ** 2, n * np.linalg.norm(v) ** 2, rtol=1e-12
        )


class TestKernelTable:
    def test_offset_zero_maps_to_center(self):
        t = KernelTable(np.arange(5.0))
        assert t.at_offset((0,)) == 2.0
        assert t.at_offset((-2,)) == 0.0
        assert t.at_offset((2,)) == 4.0

    def test_even_extent_rejected(self):
        with pytest.raises(ValueError):
            KernelTable(np.zeros((4,)))

    def test_offset_out_of_range(self):
        t = KernelTable(np.zeros((5, 5)))
        with pytest.raises(ValueError):
            t.at_offset((3, 0))


class TestNaiveConvolution:
    def test_hand_example_1d(self):
        # ghat_{-1}=3, ghat_0=4, ghat_1=5; w_0 = 1*4 + 2*3, w_1 = 1*5 + 2*4
        table = KernelTable(np.array([3.0, 4.0, 5.0]))
        w = dense_convolve_naive(np.array([1.0, 2.0]), table)
        assert np.allclose(w, [10.0, 13.0])

    def test_delta_kernel_is_identity(self, rng):
        f = rng.standard_normal((4, 5, 3))
        w = dense_convolve_naive(f, KernelTable.delta((4, 5, 3)))
        assert np.array_equal(w, f)

    def test_size_mismatch_rejected(self, rng):
        with pytest.raises(ValueError):
            dense_convolve_naive(np.zeros((3, 3)), KernelTable(np.zeros((5, 7))))
        with pytest.raises(ValueError):
            dense_convolve_naive(np.zeros(3), KernelTable(np.zeros((5, 5))))

    def test_matches_fft_2d(self, rng):
        f = rng.standard_normal((4, 4))
        table = random_kernel(rng, (4, 4))
        w_naive = dense_convolve_naive(f, table)
        w_fft = dense_convolve_fft(f, table)
        assert np.linalg.norm(w_naive - w_fft) / np.linalg.norm(w_naive) <= 1e-12


class TestFftConvolution:
    def test_hand_example_and_discarded_entry(self):
        table = KernelTable(np.array([3.0, 4.0, 5.0]))
        c = circulant_column(table)
        assert np.allclose(c, [4.0, 5.0, 3.0])
        q = np.array([1.0, 2.0, 0.0])
        w_full = np.fft.ifft(np.fft.fft(c) * np.fft.fft(q))
        assert np.allclose(w_full.real, [10.0, 13.0, 13.0])
        assert np.allclose(dense_convolve_fft(np.array([1.0, 2.0]), table), [10.0, 13.0])

    def test_delta_kernel(self, rng):
        f = rng.standard_normal((5, 4))
        w = dense_convolve_fft(f, KernelTable.delta((5, 4)))
        assert np.allclose(w, f, atol=1e-13)

    def test_matches_naive_3d(self, rng):
        f = rng.standard_normal((8, 8, 8))
        table = random_kernel(rng, (8, 8, 8))
        w_naive = dense_convolve_naive(f, table)
        w_fft = dense_convolve_fft(f, table)
        assert np.linalg.norm(w_naive - w_fft) / np.linalg.norm(w_naive) <= 1e-12

    def test_even_circulant_padding_agrees(self, rng):
        f = rng.standard_normal((6, 7))
        table = random_kernel(rng, (6, 7))
        w_odd = dense_convolve_fft(f, table, circulant_size="2n-1")
        w_even = dense_convolve_fft(f, table, circulant_size="2n")
        assert np.allclose(w_odd, w_even, atol=1e-11)

    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_oracles_agree_all_small_dims(self, rng, d):
        sizes = (8,) * d if d < 3 else (8, 8, 8)
        f = rng.standard_normal(sizes)
        table = random_kernel(rng, sizes)
        w_naive = dense_convolve_naive(f, table)
        w_fft = dense_convolve_fft(f, table)
        assert np.linalg.norm(w_naive - w_fft) / np.linalg.norm(w_naive) <= 1e-12

    def test_linearity(self, rng):
        f1 = rng.standard_normal((5, 5))
        f2 = rng.standard_normal((5, 5))
        table = random_kernel(rng, (5, 5))
        lhs = dense_convolve_naive(2.0 * f1 - 3.0 * f2, table)
        rhs = 2.0 * dense_convolve_naive(f1, table) - 3.0 * dense_convolve_naive(f2, table)
        assert np.linalg.norm(lhs - rhs) / np.linalg.norm(lhs) <= 1e-12


def test_circulant_column_spec_permutation():
    # n=3: extended [g(-2) g(-1) g0 g1 g2] -> [g0 g1 g2 g(-2) g(-1)]
    table = KernelTable(np.array([10.0, 11.0, 12.0, 13.0, 14.0]))
    assert np.allclose(circulant_column(table), [12.0, 13.0, 14.0, 10.0, 11.0])


def test_circulant_column_symmetric_kernel_wraps():
    rng = np.random.default_rng(3)
    half = rng.standard_normal(4)
    vals = np.concatenate([half[::-1], rng.standard_normal(1), half])  # g_{-k} = g_k
    vals = np.concatenate([vals[4:0:-1], vals[4:]])  # enforce symmetry exactly
    table = KernelTable(vals)
    c = circulant_column(table)
    m = c.size
    for i in range(m):
        assert c[i] == pytest.approx(c[(m - i) % m])
