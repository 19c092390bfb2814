import itertools
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

import torch

from ..errors import ConfigError, ConvergenceError, InvariantError, ResonanceError


logger = logging.getLogger(__name__)

RESONANCE_THRESHOLD = 1e-12


@dataclass(frozen=True)
class PerturbedHamiltonian:
    """
    H(phi, I) = H0(I) + epsilon * V(phi, I) on the n-torus. Callables take torch tensors
    whose last dimension is n (angles and actions) and return the leading shape.
    """

    h0: Callable[[torch.Tensor], torch.Tensor]
    h0_prime: Callable[[torch.Tensor], torch.Tensor]
    v: Callable[[torch.Tensor, torch.Tensor], torch.Tensor]
    epsilon: float
    n_dof: int = 1

    def __call__(self, phi: torch.Tensor, I: torch.Tensor) -> torch.Tensor:
        return self.h0(I) + self.epsilon * self.v(phi, I)

    def validate(self, actions: Optional[torch.Tensor] = None, rtol: float = 1e-6) -> list:
        """Compare h0_prime against central differences of h0 on sampled actions."""
        if actions is None:
            actions = torch.linspace(0.5, 2.0, 7, dtype=torch.float64).unsqueeze(-1).expand(-1, self.n_dof)
        violations = []
        step = 1e-6
        analytic = self.h0_prime(actions)
        for i in range(self.n_dof):
            e = torch.zeros(self.n_dof, dtype=torch.float64)
            e[i] = step * 1.0
            numeric = (self.h0(actions + e) - self.h0(actions - e)) / (2 * step)
            err = (analytic[..., i] - numeric).abs()
            if bool((err > rtol * (1.0 + numeric.abs())).any()):
                violations.append(f"h0_prime[{i}] disagrees with finite differences of h0 (max error {err.max().item():.3e})")
        return violations


def pendulum_hamiltonian(epsilon: float) -> PerturbedHamiltonian:
    """H0 = I^2 / 2, V = cos(phi)."""
    return PerturbedHamiltonian(
        h0=lambda I: 0.5 * (I ** 2).sum(dim=-1),
        h0_prime=lambda I: I,
        v=lambda phi, I: torch.cos(phi).sum(dim=-1),
        epsilon=epsilon,
    )


def rotor_hamiltonian(epsilon: float, omega: float = 1.0) -> PerturbedHamiltonian:
    """H0 = omega * I, V = cos(phi)."""
    return PerturbedHamiltonian(
        h0=lambda I: omega * I.sum(dim=-1),
        h0_prime=lambda I: torch.full_like(I, omega),
        v=lambda phi, I: torch.cos(phi).sum(dim=-1),
        epsilon=epsilon,
    )


def torus_grid(grid: int, n_dof: int) -> torch.Tensor:
    """Uniform grid on [0, 2pi)^n, shape (grid,)*n + (n,)."""
    axis = 2 * math.pi * torch.arange(grid, dtype=torch.float64) / grid
    mesh = torch.meshgrid(*([axis] * n_dof), indexing="ij")
    return torch.stack(mesh, dim=-1)


def mode_vectors(order: int, n_dof: int) -> torch.Tensor:
    """All non-zero m in Z^n with |m_i| <= order, lexicographic."""
    modes = [m for m in itertools.product(range(-order, order + 1), repeat=n_dof) if any(m)]
    return torch.tensor(modes, dtype=torch.int64).reshape(-1, n_dof)


def _check_grid(grid: int, order: int):
    if grid < 2 * order + 2:
        raise ConfigError(f"torus grid of {grid} samples per dimension is too coarse for order {order} (needs >= {2 * order + 2})")


def _basis(phi: torch.Tensor, modes: torch.Tensor) -> torch.Tensor:
    """exp(i m . phi) for every mode, shape (..., K)."""
    return torch.exp(1j * (phi @ modes.to(torch.float64).T))


def fourier_project(samples: torch.Tensor, m) -> complex:
    """(1/(2pi)^n) * integral exp(-i m . phi) f(phi) dphi with equal-weight quadrature."""
    m = torch.as_tensor(m, dtype=torch.int64).reshape(-1)
    n_dof = m.shape[0]
    if samples.dim() != n_dof or len(set(samples.shape)) != 1:
        raise ConfigError(f"samples of shape {tuple(samples.shape)} do not form a uniform {n_dof}-torus grid")
    _check_grid(samples.shape[0], int(m.abs().max().item()))
    phi = torus_grid(samples.shape[0], n_dof)
    weights = torch.exp(-1j * (phi @ m.to(torch.float64)))
    return complex((samples.to(torch.complex128) * weights).mean().item())


def _project_modes(samples: torch.Tensor, phi: torch.Tensor, modes: torch.Tensor) -> torch.Tensor:
    flat = samples.reshape(-1).to(torch.complex128)
    return _basis(phi, modes).reshape(flat.shape[0], -1).conj().T @ flat / flat.shape[0]


@dataclass(frozen=True)
class GeneratorSeries:
    """
    Truncated Fourier series G(phi, J) = sum_m g_m(J) exp(i m . phi) at one action J.
    `derivative_J` holds, per degree of freedom, the series solved at J - d and J + d
    (d in `action_steps`); without them the series is treated as independent of J.
    """

    modes: torch.Tensor
    coefficients: torch.Tensor
    truncation_order: int
    action_J: torch.Tensor
    grid_size: int
    epsilon: float = 0.0
    iterations: int = 0
    history: Tuple[float, ...] = ()
    derivative_J: Optional[Tuple[Tuple["GeneratorSeries", "GeneratorSeries"], ...]] = None
    action_steps: Tuple[float, ...] = field(default=())

    @property
    def n_dof(self) -> int:
        return self.modes.shape[-1]

    def as_dict(self) -> Dict[Tuple[int, ...], complex]:
        return {tuple(m.tolist()): complex(g.item()) for m, g in zip(self.modes, self.coefficients)}

    def coefficient(self, m) -> complex:
        return self.as_dict().get(tuple(int(x) for x in m), 0j)

    def validate(self, tol: float = 1e-12) -> list:
        violations = []
        table = self.as_dict()
        if any(not any(m) for m in table):
            violations.append("zero mode stored in generator series")
        for m, g in table.items():
            partner = table.get(tuple(-x for x in m))
            if partner is None:
                violations.append(f"mode {m} has no partner {tuple(-x for x in m)}")
            elif abs(partner - g.conjugate()) > tol * max(1.0, abs(g)):
                violations.append(f"g_{m} and g_{tuple(-x for x in m)} are not complex conjugates")
        return violations

    def check(self) -> "GeneratorSeries":
        violations = self.validate()
        if violations:
            raise InvariantError("invalid generator series: " + "; ".join(violations[:4]))
        return self

    def evaluate(self, phi: torch.Tensor) -> torch.Tensor:
        values = _basis(phi, self.modes) @ self.coefficients
        return values.real

    def imaginary_part(self, phi: torch.Tensor) -> torch.Tensor:
        return (_basis(phi, self.modes) @ self.coefficients).imag

    def gradient_phi(self, phi: torch.Tensor) -> torch.Tensor:
        """dG/dphi = sum_m i m g_m exp(i m . phi), shape (..., n)."""
        weighted = 1j * self.coefficients.unsqueeze(-1) * self.modes.to(torch.complex128)
        return (_basis(phi, self.modes) @ weighted).real

    def gradient_J(self, phi: torch.Tensor) -> torch.Tensor:
        """dG/dJ by central differences over the neighbouring series, shape (..., n)."""
        if not self.derivative_J:
            return torch.zeros(phi.shape, dtype=torch.float64)
        parts = []
        for (minus, plus), step in zip(self.derivative_J, self.action_steps):
            parts.append((plus.evaluate(phi) - minus.evaluate(phi)) / (2 * step))
        return torch.stack(parts, dim=-1)

    def to_csv(self, path: str, epsilon: Optional[float] = None, residual: Optional[float] = None):
        dir_path = os.path.dirname(path)
        if dir_path:
            os.makedirs(dir_path, exist_ok=True)
        J = ";".join(f"{v:.17g}" for v in self.action_J.tolist())
        epsilon = self.epsilon if epsilon is None else epsilon
        residual = float("nan") if residual is None else residual
        with open(path, "w", encoding="utf-8") as f:
            f.write(f"# J={J},epsilon={epsilon:.17g},order={self.truncation_order},grid={self.grid_size},residual={residual:.17g}\n")
            f.write("m,re_g,im_g\n")
            for m, g in zip(self.modes.tolist(), self.coefficients.tolist()):
                f.write(f"{';'.join(str(x) for x in m)},{g.real:.17g},{g.imag:.17g}\n")


def _as_action(J, n_dof: int) -> torch.Tensor:
    J = torch.as_tensor(J, dtype=torch.float64).reshape(-1)
    if J.shape[0] != n_dof:
        raise ConfigError(f"action has {J.shape[0]} components, Hamiltonian has {n_dof} degrees of freedom")
    return J


def _symmetrize(coefficients: torch.Tensor, partner: torch.Tensor) -> torch.Tensor:
    # g_{-m} = conj(g_m) so that G stays real
    return 0.5 * (coefficients + coefficients[partner].conj())


def _fixed_point(ph: PerturbedHamiltonian, J, order: int, grid: int, tol: float, max_iter: int, strict: bool) -> GeneratorSeries:
    _check_grid(grid, order)
    J = _as_action(J, ph.n_dof)
    modes = mode_vectors(order, ph.n_dof)
    partner = torch.tensor([modes.tolist().index([-x for x in m]) for m in modes.tolist()], dtype=torch.int64)
    phi = torus_grid(grid, ph.n_dof)

    frequency = ph.h0_prime(J)
    divisors = modes.to(torch.float64) @ frequency
    small = divisors.abs() < RESONANCE_THRESHOLD
    if bool(small.any()):
        index = int(torch.nonzero(small)[0])
        raise ResonanceError(modes[index].tolist(), divisors[index].item())

    coefficients = torch.zeros(modes.shape[0], dtype=torch.complex128)
    basis = _basis(phi, modes)
    weighted_modes = modes.to(torch.complex128)
    h0_J = ph.h0(J)
    history = []
    change = float("inf")
    for iteration in range(1, max_iter + 1):
        G_phi = (basis @ (1j * coefficients.unsqueeze(-1) * weighted_modes)).real
        I = J + G_phi
        bracket = ph.epsilon * ph.v(phi, I) + ph.h0(I) - h0_J - G_phi @ frequency
        updated = 1j / divisors * _project_modes(bracket, phi, modes)
        updated = _symmetrize(updated, partner)
        change = (basis @ (updated - coefficients)).abs().max().item()
        history.append(change)
        coefficients = updated
        if change <= tol:
            break
    else:
        if strict:
            raise ConvergenceError(change, max_iter)
    logger.debug(f"generator at J={J.tolist()}: {len(history)} iterations, last change {change:.3e}")
    return GeneratorSeries(
        modes=modes,
        coefficients=coefficients,
        truncation_order=order,
        action_J=J,
        grid_size=grid,
        epsilon=ph.epsilon,
        iterations=len(history),
        history=tuple(history),
    )


def solve_generator(
    ph: PerturbedHamiltonian,
    J,
    order: int = 8,
    grid: int = 64,
    tol: float = 1e-12,
    max_iter: int = 200,
    with_action_derivative: bool = True,
) -> GeneratorSeries:
    """
    Fixed-point iteration from G = 0 of
    g_m(J) = i / (m . dH0/dJ) * Fourier_m[eps V(phi, J + G_phi) + H0(J + G_phi) - H0(J) - dH0/dJ . G_phi].
    """
    series = _fixed_point(ph, J, order, grid, tol, max_iter, strict=True)
    if not with_action_derivative:
        return series
    neighbours, steps = [], []
    for i in range(ph.n_dof):
        step = 1e-4 * (1.0 + abs(series.action_J[i].item()))
        shift = torch.zeros(ph.n_dof, dtype=torch.float64)
        shift[i] = step
        minus = _fixed_point(ph, series.action_J - shift, order, grid, tol, max_iter, strict=True)
        plus = _fixed_point(ph, series.action_J + shift, order, grid, tol, max_iter, strict=True)
        neighbours.append((minus, plus))
        steps.append(step)
    return GeneratorSeries(
        modes=series.modes,
        coefficients=series.coefficients,
        truncation_order=order,
        action_J=series.action_J,
        grid_size=grid,
        epsilon=ph.epsilon,
        iterations=series.iterations,
        history=series.history,
        derivative_J=tuple(neighbours),
        action_steps=tuple(steps),
    )


def first_order_generator(ph: PerturbedHamiltonian, J, order: int = 8, grid: int = 64) -> GeneratorSeries:
    """The first iterate from G = 0: classical first-order perturbation theory."""
    return _fixed_point(ph, J, order, grid, tol=0.0, max_iter=1, strict=False)


def new_hamiltonian_K(ph: PerturbedHamiltonian, G: GeneratorSeries) -> float:
    """K(J) = (1/(2pi)^n) * integral [H0(J + G_phi) + eps V(phi, J + G_phi)] dphi."""
    if G.n_dof != ph.n_dof:
        raise ConfigError(f"series has {G.n_dof} degrees of freedom, Hamiltonian has {ph.n_dof}")
    phi = torus_grid(G.grid_size, G.n_dof)
    return ph(phi, G.action_J + G.gradient_phi(phi)).mean().item()


def hamiltonian_residual(ph: PerturbedHamiltonian, G: GeneratorSeries) -> float:
    """sup over the torus grid of |H(phi, J + G_phi) - K(J)|."""
    phi = torus_grid(G.grid_size, G.n_dof)
    values = ph(phi, G.action_J + G.gradient_phi(phi))
    return (values - values.mean()).abs().max().item()


def apply_transform(G: GeneratorSeries, phi: torch.Tensor, J) -> Tuple[torch.Tensor, torch.Tensor]:
    """I = J + dG/dphi, psi = phi + dG/dJ (mod 2pi)."""
    J = _as_action(J, G.n_dof)
    if not torch.allclose(J, G.action_J, rtol=0.0, atol=1e-12):
        raise ConfigError(f"series was solved at J={G.action_J.tolist()}, transform requested at J={J.tolist()}")
    phi = torch.as_tensor(phi, dtype=torch.float64)
    I = J + G.gradient_phi(phi)
    psi = torch.remainder(phi + G.gradient_J(phi), 2 * math.pi)
    return I, psi


def invariant_torus(G: GeneratorSeries, n_points: int = 256) -> Tuple[torch.Tensor, torch.Tensor]:
    """The closed curve I(phi) = J + dG/dphi traced over phi in [0, 2pi] at fixed J (one degree of freedom)."""
    if G.n_dof != 1:
        raise ConfigError("invariant torus tracing is implemented for one degree of freedom")
    phi = torch.linspace(0.0, 2 * math.pi, n_points + 1, dtype=torch.float64).unsqueeze(-1)
    return phi.squeeze(-1), (G.action_J + G.gradient_phi(phi)).squeeze(-1)


def symplectic_check(G: GeneratorSeries, grid: int = 128, step: float = 1e-5) -> float:
    """
    max over the grid of |det d(psi, J)/d(phi, I) - 1| for one degree of freedom.
    With (phi, J) as independent coordinates the determinant reduces to
    (dpsi/dphi) / (dI/dJ); both are taken by central differences.
    """
    G.check()
    if G.n_dof != 1:
        raise ConfigError(f"symplectic check supports one degree of freedom (got n={G.n_dof})")
    phi = torus_grid(grid, 1)
    ahead, behind = phi + step, phi - step

    dpsi_dphi = 1.0 + (G.gradient_J(ahead) - G.gradient_J(behind)).squeeze(-1) / (2 * step)
    if G.derivative_J:
        (minus, plus), = G.derivative_J
        d = G.action_steps[0]
        dI_dJ = 1.0 + (plus.gradient_phi(phi) - minus.gradient_phi(phi)).squeeze(-1) / (2 * d)
    else:
        dI_dJ = torch.ones_like(dpsi_dphi)
    return (dpsi_dphi / dI_dJ - 1.0).abs().max().item()
