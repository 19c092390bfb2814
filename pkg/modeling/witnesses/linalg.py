from typing import Tuple, Union

import torch

from ..errors import NumericError


def _is_hermitian(m: torch.Tensor, atol: float) -> bool:
    return bool(((m - m.conj().transpose(-2, -1)).abs() <= atol).all())


def hermitian_eigs(m: torch.Tensor, eigenvectors: bool = False, atol: float = 1e-8) -> Union[torch.Tensor, Tuple[torch.Tensor, torch.Tensor]]:
    """
    Eigenvalues of a Hermitian matrix in descending order.

    Args:
        m (`torch.Tensor`):
            Hermitian matrix (..., d, d), complex or real.
        eigenvectors (`bool`, defaults to `False`):
            Also return the eigenvectors as the columns of a matrix, in the same order.
        atol (`float`, defaults to 1e-8):
            Hermiticity tolerance.
    """
    if not _is_hermitian(m, atol):
        raise NumericError("matrix is not Hermitian", matrix=m)
    m = 0.5 * (m + m.conj().transpose(-2, -1))
    try:
        values, vectors = torch.linalg.eigh(m)
    except torch.linalg.LinAlgError as e:
        raise NumericError(f"eigensolver failed: {e}", matrix=m)
    values, vectors = values.flip(-1), vectors.flip(-1)
    return (values, vectors) if eigenvectors else values


def matrix_sqrt_psd(m: torch.Tensor, clip: float = 1e-10) -> torch.Tensor:
    """Principal square root of a PSD matrix; eigenvalues in [-clip, 0) are treated as 0."""
    values, vectors = hermitian_eigs(m, eigenvectors=True)
    if bool((values < -clip).any()):
        raise NumericError(f"matrix is not positive semidefinite (min eigenvalue {values.min().item():.3e})", matrix=m)
    roots = values.clamp(min=0.0).sqrt().to(vectors.dtype)
    return (vectors * roots.unsqueeze(-2)) @ vectors.conj().transpose(-2, -1)


def commutator(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    return a @ b - b @ a


def kron(*ops: torch.Tensor) -> torch.Tensor:
    out = ops[0]
    for op in ops[1:]:
        out = torch.kron(out, op)
    return out
