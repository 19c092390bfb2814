import math
from typing import Optional

import torch

from .linalg import kron


SIGMA_X = torch.tensor([[0, 1], [1, 0]], dtype=torch.complex128)
SIGMA_Y = torch.tensor([[0, -1j], [1j, 0]], dtype=torch.complex128)
SIGMA_Z = torch.tensor([[1, 0], [0, -1]], dtype=torch.complex128)

_BELL = {
    "phi+": (0, 3, 1.0),
    "phi-": (0, 3, -1.0),
    "psi+": (1, 2, 1.0),
    "psi-": (1, 2, -1.0),
}


def ket_to_dm(ket: torch.Tensor) -> torch.Tensor:
    ket = ket.to(torch.complex128).reshape(-1, 1)
    return ket @ ket.conj().T


def bell_state(kind: str = "phi+") -> torch.Tensor:
    if kind not in _BELL:
        raise ValueError(f"unknown Bell state {kind!r}, expected one of {sorted(_BELL)}")
    i, j, sign = _BELL[kind]
    ket = torch.zeros(4, dtype=torch.complex128)
    ket[i], ket[j] = 1 / math.sqrt(2), sign / math.sqrt(2)
    return ket_to_dm(ket)


def werner_state(p: float) -> torch.Tensor:
    """p |Phi+><Phi+| + (1 - p) I/4."""
    return p * bell_state("phi+") + (1 - p) * torch.eye(4, dtype=torch.complex128) / 4


def product_state(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """rho_A (x) rho_B; single-qubit kets are promoted to density matrices."""
    a, b = (ket_to_dm(x) if x.dim() == 1 else x.to(torch.complex128) for x in (a, b))
    return kron(a, b)


def plus_plus() -> torch.Tensor:
    plus = torch.tensor([1, 1], dtype=torch.complex128) / math.sqrt(2)
    return product_state(plus, plus)


def random_density_matrix(generator: torch.Generator, rank: Optional[int] = None, dim: int = 4) -> torch.Tensor:
    """Ginibre-ensemble state G G^dagger / Tr(G G^dagger) with G of shape (dim, rank)."""
    rank = dim if rank is None else rank
    real = torch.randn(dim, rank, generator=generator, dtype=torch.float64)
    imag = torch.randn(dim, rank, generator=generator, dtype=torch.float64)
    g = torch.complex(real, imag)
    rho = g @ g.conj().T
    return rho / torch.trace(rho).real


def random_unitary(generator: torch.Generator, dim: int = 2) -> torch.Tensor:
    """Haar unitary from the QR decomposition of a complex Gaussian matrix."""
    z = torch.complex(
        torch.randn(dim, dim, generator=generator, dtype=torch.float64),
        torch.randn(dim, dim, generator=generator, dtype=torch.float64),
    )
    q, r = torch.linalg.qr(z)
    phases = torch.diagonal(r) / torch.diagonal(r).abs()
    return q * phases.unsqueeze(-2)


def random_local_unitary(generator: torch.Generator) -> torch.Tensor:
    """U (x) V with independent single-qubit Haar unitaries."""
    return kron(random_unitary(generator), random_unitary(generator))
