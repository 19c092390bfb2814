import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import torch

from ..errors import ConfigError, DegenerateStateError, InvariantError
from ..hjnet import Trajectory
from ..witnesses import SIGMA_X, SIGMA_Z, commutator, hermitian_eigs, kron


logger = logging.getLogger(__name__)

WARMUP_FRACTION = 0.05


def coupling_operator(name: str = "zz") -> torch.Tensor:
    """Two-qubit coupling operator C: `zz` for sigma_z (x) sigma_z, `xx` for sigma_x (x) sigma_x."""
    if name == "zz":
        return kron(SIGMA_Z, SIGMA_Z)
    if name == "xx":
        return kron(SIGMA_X, SIGMA_X)
    raise ConfigError(f"unknown coupling operator {name!r}, expected 'zz' or 'xx'")


@dataclass(frozen=True)
class DensityMatrix:
    """4x4 two-qubit state in the basis |00>, |01>, |10>, |11>, checked on construction."""

    data: torch.Tensor

    def __post_init__(self):
        object.__setattr__(self, "data", torch.as_tensor(self.data).to(torch.complex128))
        violations = self.validate()
        if violations:
            raise InvariantError("not a density matrix: " + "; ".join(violations))

    def validate(self, atol: float = 1e-10, psd_tol: float = 1e-9) -> list:
        rho = self.data
        if rho.shape != (4, 4):
            return [f"shape {tuple(rho.shape)} is not (4, 4)"]
        violations = []
        asym = (rho - rho.conj().T).abs().max().item()
        if asym > atol:
            violations.append(f"max |rho - rho^dagger| = {asym:.3e}")
        trace = torch.trace(rho)
        if abs(trace.item() - 1.0) > atol:
            violations.append(f"trace {trace.item():.12g} != 1")
        if asym <= 1e-3:
            min_eig = hermitian_eigs(rho, atol=1e-3)[-1].item()
            if min_eig < -psd_tol:
                violations.append(f"min eigenvalue {min_eig:.3e} < 0")
        return violations

    def trace(self) -> float:
        return torch.trace(self.data).real.item()


def _matrix(rho) -> torch.Tensor:
    return getattr(rho, "data", rho)


@dataclass(frozen=True)
class CouplingSeries:
    """
    Scalar coupling g(t) on a uniform grid driving H_int(t) = g(t) C.
    `g` has shape (steps,) or (steps, *batch) for an ensemble.
    """

    times: torch.Tensor
    g: torch.Tensor
    gamma: float = 0.0
    c_op: torch.Tensor = field(default_factory=coupling_operator)

    @property
    def dt(self) -> float:
        return (self.times[1] - self.times[0]).item() if len(self.times) > 1 else 0.0

    @classmethod
    def constant(cls, g0: float, n_steps: int, dt: float, gamma: float = 0.0, c_op: Optional[torch.Tensor] = None) -> "CouplingSeries":
        times = torch.arange(n_steps + 1, dtype=torch.float64) * dt
        g = torch.full((n_steps + 1,), float(g0), dtype=torch.float64)
        return cls(times, g, gamma, coupling_operator() if c_op is None else c_op)

    def validate(self) -> list:
        violations = []
        if self.g.shape[0] != self.times.shape[0]:
            violations.append(f"{self.g.shape[0]} couplings for {self.times.shape[0]} times")
        if not bool(torch.isfinite(self.g).all()):
            violations.append("coupling g holds non-finite values")
        if len(self.times) > 2:
            steps = self.times.diff()
            if (steps - steps[0]).abs().max().item() > 1e-9 * max(1.0, abs(steps[0].item())):
                violations.append("times are not uniform")
        if self.gamma < 0 or not math.isfinite(self.gamma):
            violations.append(f"gamma must be >= 0 (got {self.gamma!r})")
        if (self.c_op - self.c_op.conj().T).abs().max().item() > 1e-12:
            violations.append("coupling operator is not Hermitian")
        return violations

    def check(self) -> "CouplingSeries":
        violations = self.validate()
        if violations:
            raise ConfigError(violations)
        return self


def coupling_signal(traj: Trajectory, scale: float, gamma: float = 0.0, c_op: Optional[torch.Tensor] = None) -> CouplingSeries:
    """g(t) = scale * (sum_k Delta_k F_k + E), read from the recorded interaction energy."""
    if not len(traj):
        raise ConfigError("trajectory is empty")
    g = scale * traj.sample("h_int")
    return CouplingSeries(traj.times, g, gamma, coupling_operator() if c_op is None else c_op)


def forward_scattering(rho, g: float, c_op: torch.Tensor) -> torch.Tensor:
    """-i g [C, rho]."""
    return -1j * g * commutator(c_op, _matrix(rho))


def damping_term(rho, g_now: float, g_prev: float, gamma: float, c_op: torch.Tensor) -> torch.Tensor:
    """-(gamma/2) g_now g_prev [C, [C, rho]]."""
    return -0.5 * gamma * g_now * g_prev * commutator(c_op, commutator(c_op, _matrix(rho)))


def project_physical(rho_raw: torch.Tensor, step: Optional[int] = None) -> DensityMatrix:
    """Hermitize, clip negative eigenvalues to zero and renormalize the trace."""
    rho_raw = _matrix(rho_raw).to(torch.complex128)
    asym = (rho_raw - rho_raw.conj().T).abs().max().item()
    if asym > 1e-3:
        raise InvariantError(f"matrix is too far from Hermitian to project (max asymmetry {asym:.3e})")
    h = 0.5 * (rho_raw + rho_raw.conj().T)
    values, vectors = hermitian_eigs(h, eigenvectors=True)
    logger.debug(f"step {step}: pre-projection min eigenvalue {values[-1].item():.3e}")
    if values[-1].item() >= 0.0:
        trace = torch.trace(h).real.item()
        if trace <= 0.0:
            raise DegenerateStateError("trace vanished", step=step)
        return DensityMatrix(h / trace)
    clipped = values.clamp(min=0.0)
    trace = clipped.sum().item()
    if trace <= 0.0:
        raise DegenerateStateError("all eigenvalues clipped", step=step)
    rebuilt = (vectors * (clipped / trace).to(vectors.dtype).unsqueeze(-2)) @ vectors.conj().T
    return DensityMatrix(0.5 * (rebuilt + rebuilt.conj().T))


def boltzmann_step(rho, g_now: float, g_prev: float, dt: float, params: CouplingSeries, step: Optional[int] = None) -> DensityMatrix:
    """rho' = project(rho + dt (-i g_now [C, rho] - (gamma/2) g_now g_prev [C, [C, rho]]))."""
    c_op = params.c_op
    increment = forward_scattering(rho, g_now, c_op) + damping_term(rho, g_now, g_prev, params.gamma, c_op)
    return project_physical(_matrix(rho) + dt * increment, step=step)


def run_evolution(traj: Optional[Trajectory], rho0, params: CouplingSeries) -> List[DensityMatrix]:
    """
    One density matrix per grid time. Step k is driven by g at the previous grid point and
    the damping memory by the point before it (zero before the first step).
    """
    params.check()
    if params.g.dim() != 1:
        raise ConfigError("run_evolution takes a single coupling series; slice ensembles per member")
    if traj is not None and len(traj) != len(params.g):
        raise ConfigError(f"trajectory has {len(traj)} steps, coupling series has {len(params.g)}")
    rho = rho0 if isinstance(rho0, DensityMatrix) else DensityMatrix(rho0)
    states = [rho]
    dt = params.dt
    g = params.g.tolist()
    for k in range(1, len(g)):
        g_prev = g[k - 2] if k >= 2 else 0.0
        rho = boltzmann_step(rho, g[k - 1], g_prev, dt, params, step=k)
        states.append(rho)
    return states


def exact_phase_evolution(rho0, c_op: torch.Tensor, phase: float) -> DensityMatrix:
    """exp(-i theta C) rho0 exp(i theta C)."""
    u = torch.linalg.matrix_exp(-1j * phase * c_op)
    return DensityMatrix(u @ _matrix(rho0).to(torch.complex128) @ u.conj().T)


def trace_distance(rho, sigma) -> float:
    return 0.5 * hermitian_eigs(_matrix(rho) - _matrix(sigma)).abs().sum().item()


def warmup_index(n: int, fraction: float = WARMUP_FRACTION) -> int:
    """First reported index after cutting the early steps."""
    return int(math.ceil(fraction * n - 1e-9))


def learning_potential(
    ensemble: Union[Trajectory, Sequence[Trajectory]],
    scale: float,
    t_shift: Optional[float] = None,
) -> Tuple[torch.Tensor, torch.Tensor]:
    """
    Ensemble mean of the coupling signal. The time axis is shifted by -t_shift (one epoch
    by default) so that the input period sits at negative times.
    """
    if isinstance(ensemble, Trajectory):
        reference = ensemble
        g = coupling_signal(ensemble, scale).g
        if g.dim() != 2 or g.shape[1] < 2:
            raise ConfigError("learning potential needs at least two ensemble members")
        potential = g.mean(dim=1)
    else:
        members = list(ensemble)
        if len(members) < 2:
            raise ConfigError("learning potential needs at least two ensemble members")
        reference = members[0]
        for i, traj in enumerate(members[1:], start=1):
            if len(traj) != len(reference) or abs(traj.dt - reference.dt) > 1e-15 or abs(traj.t0 - reference.t0) > 1e-15:
                raise ConfigError(f"ensemble member {i} is on a different time grid")
        potential = torch.stack([coupling_signal(traj, scale).g for traj in members]).mean(dim=0)
    if t_shift is None:
        t_shift = reference.epoch_length_T or 0.0
    return reference.times - t_shift, potential
