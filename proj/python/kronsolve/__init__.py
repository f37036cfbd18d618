"""Multiterm Sylvester equation solvers with low Kronecker rank
preconditioning (NKP and KINV)."""

from ._kronsolve import (
    KronApprox,
    KronInverse,
    KronsolveError,
    Operator,
    apply_kinv,
    circuit,
    convection_diffusion,
    kinv_als,
    kinv_residual,
    kinv_sparse_als,
    nkp_als,
    nkp_error,
    nkp_svd,
    set_max_threads,
    solve,
    solve_one_term,
    solve_sylvester,
    solve_two_sided,
    synthetic_banded,
)

__all__ = [
    "KronApprox",
    "KronInverse",
    "KronsolveError",
    "Operator",
    "apply_kinv",
    "circuit",
    "convection_diffusion",
    "kinv_als",
    "kinv_residual",
    "kinv_sparse_als",
    "nkp_als",
    "nkp_error",
    "nkp_svd",
    "set_max_threads",
    "solve",
    "solve_one_term",
    "solve_sylvester",
    "solve_two_sided",
    "synthetic_banded",
]

__version__ = "0.1.0"
