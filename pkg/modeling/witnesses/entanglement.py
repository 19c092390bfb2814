import logging
import math
from dataclasses import asdict, dataclass
from typing import Tuple

import torch

from ..errors import PurityError
from .linalg import hermitian_eigs, kron, matrix_sqrt_psd
from .states import SIGMA_Y


logger = logging.getLogger(__name__)

PURITY_GATE = 1e-6
EIGEN_CLIP = 1e-10
# eigenvalues this far below the largest are solver noise
RESOLUTION = 1e-14

_SPIN_FLIP = kron(SIGMA_Y, SIGMA_Y)


def _matrix(rho) -> torch.Tensor:
    rho = getattr(rho, "data", rho)
    if rho.shape[-2:] != (4, 4):
        raise ValueError(f"expected a two-qubit density matrix of shape (4, 4), got {tuple(rho.shape)}")
    return rho.to(torch.complex128)


def _check_subsystem(subsystem: str):
    if subsystem not in ("A", "B"):
        raise ValueError(f"subsystem must be 'A' or 'B' (got {subsystem!r})")


def purity(rho) -> float:
    rho = _matrix(rho)
    return torch.trace(rho @ rho).real.item()


def partial_trace(rho, keep: str = "A") -> torch.Tensor:
    """Reduced 2x2 state of the kept qubit."""
    _check_subsystem(keep)
    blocks = _matrix(rho).reshape(2, 2, 2, 2)
    if keep == "A":
        return torch.einsum("ijkj->ik", blocks)
    return torch.einsum("ijil->jl", blocks)


def partial_transpose(rho, subsystem: str = "B") -> torch.Tensor:
    _check_subsystem(subsystem)
    blocks = _matrix(rho).reshape(2, 2, 2, 2)
    order = (0, 3, 2, 1) if subsystem == "B" else (2, 1, 0, 3)
    return blocks.permute(*order).reshape(4, 4)


def spin_flip(rho) -> torch.Tensor:
    """rho~ = (sigma_y x sigma_y) rho* (sigma_y x sigma_y)."""
    return _SPIN_FLIP @ _matrix(rho).conj() @ _SPIN_FLIP


def concurrence_pure(rho) -> float:
    """sqrt(2 (1 - Tr rho_A^2)); only valid for pure states."""
    p = purity(rho)
    if p < 1.0 - PURITY_GATE:
        raise PurityError(p)
    reduced = partial_trace(rho, "A")
    value = 2.0 * (1.0 - torch.trace(reduced @ reduced).real.item())
    return min(1.0, math.sqrt(max(0.0, value)))


def _clip(values: torch.Tensor, resolution: float = 0.0) -> torch.Tensor:
    if bool((values < -EIGEN_CLIP).any()):
        logger.warning(f"eigenvalue {values.min().item():.3e} below clipping window, clipped to 0")
    floor = resolution * max(values.abs().max().item(), 1.0)
    return torch.where(values > floor, values, torch.zeros_like(values))


def wootters_lambdas(rho) -> torch.Tensor:
    """Descending square roots of the eigenvalues of rho rho~, taken through sqrt(rho) rho~ sqrt(rho)."""
    root = matrix_sqrt_psd(_matrix(rho))
    product = root @ spin_flip(rho) @ root
    return _clip(hermitian_eigs(product), RESOLUTION).sqrt()


def _from_lambdas(lambdas: torch.Tensor) -> float:
    value = (lambdas[0] - lambdas[1:].sum()).item()
    return min(1.0, max(0.0, value))


def concurrence(rho) -> float:
    """C = max(0, l1 - l2 - l3 - l4)."""
    return _from_lambdas(wootters_lambdas(rho))


def concurrence_nested(rho) -> float:
    """Same quantity through the eigenvalues of sqrt(sqrt(rho) rho~ sqrt(rho))."""
    root = matrix_sqrt_psd(_matrix(rho))
    nested = matrix_sqrt_psd(root @ spin_flip(rho) @ root)
    return _from_lambdas(_clip(hermitian_eigs(nested)))


def negativity(rho) -> float:
    """(||rho^T_B||_1 - 1) / 2."""
    values = hermitian_eigs(partial_transpose(rho, "B"))
    return min(0.5, max(0.0, 0.5 * (values.abs().sum().item() - 1.0)))


@dataclass(frozen=True)
class WitnessReport:
    t: float
    concurrence: float
    negativity: float
    wootters_lambdas: Tuple[float, float, float, float]
    pt_min_eigenvalue: float
    purity: float

    def to_dict(self) -> dict:
        return asdict(self)

    def to_row(self) -> list:
        return [self.t, self.concurrence, self.negativity, *self.wootters_lambdas, self.pt_min_eigenvalue, self.purity]


def witness_report(rho, t: float = 0.0) -> WitnessReport:
    lambdas = wootters_lambdas(rho)
    return WitnessReport(
        t=float(t),
        concurrence=_from_lambdas(lambdas),
        negativity=negativity(rho),
        wootters_lambdas=tuple(lambdas.tolist()),
        pt_min_eigenvalue=hermitian_eigs(partial_transpose(rho, "B"))[-1].item(),
        purity=purity(rho),
    )
