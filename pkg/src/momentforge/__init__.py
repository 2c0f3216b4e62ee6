"""Moment matrices of measures: exact Hankel algebra, IFS equilibrium moments,
orthogonal polynomials and weighted spectra."""
from .errors import MomentForgeError
from .ifs import (
    AffineIFS,
    AffineMap,
    SquarePlusB,
    chaos_game_moments,
    encode_affine,
    encode_square_plus_b,
    fixed_point_iterate,
    solve_equilibrium_moments,
    transform_moment_matrix,
    truncated_encoding,
)
from .linalg import HankelMatrix, hilbert_matrix, psd_check, sym_eig
from .measures import moment, moment_matrix, parse_model, quadrature_moment, sample
from .orthopoly import hankel_from_banded, jacobi_from_moments, orthonormal_polys
from .spectral import WeightScheme, nystrom_kernel_spectrum, truncated_spectrum

__version__ = "0.1.0"

__all__ = [
    "AffineIFS",
    "AffineMap",
    "HankelMatrix",
    "MomentForgeError",
    "SquarePlusB",
    "WeightScheme",
    "chaos_game_moments",
    "encode_affine",
    "encode_square_plus_b",
    "fixed_point_iterate",
    "hankel_from_banded",
    "hilbert_matrix",
    "jacobi_from_moments",
    "moment",
    "moment_matrix",
    "nystrom_kernel_spectrum",
    "orthonormal_polys",
    "parse_model",
    "psd_check",
    "quadrature_moment",
    "sample",
    "solve_equilibrium_moments",
    "sym_eig",
    "transform_moment_matrix",
    "truncated_encoding",
    "truncated_spectrum",
]
