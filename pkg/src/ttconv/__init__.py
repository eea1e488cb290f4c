"""Low-rank multidimensional convolution in tensor-train form.

Operands enter as TT tensors (or 2-D skeleton factors); the convolution is
computed through a circulant embedding, rank-preserving per-core Fourier
transforms and a cross-approximated elementwise product in the frequency
domain.  Dense oracles, kernel discretization (Newton/Yukawa) and a two
electron Hartree-Fock demo sit on top.
"""

from .dense import (
    KernelTable,
    circulant_column,
    dense_convolve_fft,
    dense_convolve_naive,
    dft_1d,
    dft_nd,
)
from .tt import (
    TTTensor,
    tt_add,
    tt_conj,
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
from .cross import (
    BlackBoxMatrix,
    BlackBoxTensor,
    CrossConfig,
    CrossStats,
    DegenerateInputError,
    ToleranceNotReached,
    hadamard_evaluator,
    maxvol,
    skeleton_cross,
    tt_blackbox,
    tt_cross,
    tt_cross_with_stats,
)
from .conv import (
    ConvOperands,
    ConvStats,
    cross_conv,
    cross_conv_with_stats,
    kernel_to_circulant,
    skeleton_conv_2d,
)
from .kernels import (
    DensityFunction,
    GridSpec,
    KernelFunction,
    KernelSingularityError,
    gaussian_potential_exact,
    kernel_tt,
    newton_potential,
    nystrom_kernel_blackbox,
    sample_function_tt,
)
from .hf import (
    HFDivergenceError,
    HFOptions,
    HFResult,
    HFState,
    NucleiSpec,
    hartree_potential,
    hf_iterate,
    hf_solve,
)
from .tt_io import TTFormatError, tt_read, tt_write

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
