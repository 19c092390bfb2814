import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import torch
from tqdm import tqdm

from ..errors import ConfigError, IntegrationError
from .configuration_hjnet import NetConfig
from .trajectory import NetState, Trajectory


logger = logging.getLogger(__name__)


def _check_dims(cfg: NetConfig, y: torch.Tensor, w: Optional[torch.Tensor] = None):
    n = cfg.n_neurons
    if y.shape[-1] != n:
        raise ConfigError(f"neuron vector has length {y.shape[-1]}, config expects n_neurons={n}")
    if w is not None and tuple(w.shape[-2:]) != (n, n):
        raise ConfigError(f"weight matrix has shape {tuple(w.shape[-2:])}, config expects ({n}, {n})")


def _drive(y: torch.Tensor, weights: torch.Tensor, cfg: NetConfig) -> torch.Tensor:
    """Argument of the transfer function: Y_i + theta_i + sum_j W_ij y_j."""
    bias = cfg.tensor("external_input") + cfg.tensor("thresholds")
    return bias + torch.einsum("...ij,...j->...i", weights, y)


def neuron_model_F(y: torch.Tensor, w: torch.Tensor, cfg: NetConfig, epoch_w: Optional[torch.Tensor] = None) -> torch.Tensor:
    """F_i = (1/lambda) * (-y_i + f(Y_i + theta_i + sum_j W_ij y_j)), with `epoch_w` replacing `w` when given."""
    weights = w if epoch_w is None else epoch_w
    _check_dims(cfg, y, weights)
    return (-y + cfg.transfer(_drive(y, weights, cfg))) / cfg.lambda_


def error_E(t: float, y: torch.Tensor, w: torch.Tensor, cfg: NetConfig) -> torch.Tensor:
    _check_dims(cfg, y, w)
    return ((y - cfg.tensor("target")) ** 2).mean(dim=-1)


def error_gradient(y: torch.Tensor, cfg: NetConfig) -> torch.Tensor:
    """dE/dy of the mean-squared error."""
    return 2.0 * (y - cfg.tensor("target")) / cfg.n_neurons


def hamiltonian_h(delta: torch.Tensor, F: torch.Tensor, E: torch.Tensor) -> torch.Tensor:
    if delta.shape != F.shape:
        raise ConfigError(f"costate shape {tuple(delta.shape)} does not match model shape {tuple(F.shape)}")
    return (delta * F).sum(dim=-1) + E


@dataclass(frozen=True)
class EpochTerms:
    """
    Delay terms of the epoch Hamiltonian, read from the epoch buffer at the start of a
    step and held fixed over its RK4 substeps.

    shifted_w:     S_T W = W(t - T)
    epoch_start_w: W(nT), the weights at the start of the current epoch
    past_kinetic:  sum over v = 1..n+1 of sum_kl (S_vT M)_kl^2
    """

    epoch: int
    shifted_w: torch.Tensor
    epoch_start_w: torch.Tensor
    past_kinetic: torch.Tensor

    def effective_weights(self, w: torch.Tensor) -> torch.Tensor:
        # what was learned one epoch ago plus the change made in the present epoch
        return self.shifted_w + (w - self.epoch_start_w)


def epoch_index(t: float, cfg: NetConfig) -> int:
    return max(0, int(math.floor(t / cfg.epoch_length_T + 1e-9)))


def epoch_shift(traj: Trajectory, v: int, t: float, field: str = "w", period: Optional[float] = None) -> torch.Tensor:
    """(S_vT X)(t) = X(t - vT) for X in {W, M}; zero before the first stored sample."""
    if v < 0:
        raise ConfigError(f"epoch shift must be non-negative (got {v})")
    period = traj.epoch_length_T if period is None else period
    return traj.epoch_buffer.lookup(field, t - v * period)


def epoch_terms(traj: Trajectory, t: float, cfg: NetConfig) -> EpochTerms:
    n = epoch_index(t, cfg)
    T = cfg.epoch_length_T
    past_kinetic = torch.zeros(traj.batch_shape, dtype=torch.float64)
    for v in range(1, n + 2):
        past_kinetic = past_kinetic + (epoch_shift(traj, v, t, "m", T) ** 2).sum(dim=(-2, -1))
    return EpochTerms(
        epoch=n,
        shifted_w=epoch_shift(traj, 1, t, "w", T),
        epoch_start_w=traj.epoch_buffer.lookup("w", n * T),
        past_kinetic=past_kinetic,
    )


def kinetic_energy(m: torch.Tensor, terms: EpochTerms, cfg: NetConfig) -> torch.Tensor:
    return ((m ** 2).sum(dim=(-2, -1)) + terms.past_kinetic) / (2.0 * cfg.omega)


def extended_hamiltonian_H(state: NetState, traj: Trajectory, cfg: NetConfig, terms: Optional[EpochTerms] = None) -> torch.Tensor:
    """H = sum_k Delta_k F_k(t, y, S_T W) + (1/2 omega) sum_v sum_kl (S_vT M)^2_kl + E(t, y, W)."""
    if terms is None:
        terms = epoch_terms(traj, state.t, cfg)
    F = neuron_model_F(state.y, state.w, cfg, epoch_w=terms.effective_weights(state.w))
    E = error_E(state.t, state.y, state.w, cfg)
    return hamiltonian_h(state.delta, F, E) + kinetic_energy(state.m, terms, cfg)


def interaction_hamiltonian(state: NetState, cfg: NetConfig, terms: EpochTerms) -> torch.Tensor:
    """H_int = sum_k Delta_k F_k(t, y, S_T W) + E(t, y, W), the learning potential."""
    F = neuron_model_F(state.y, state.w, cfg, epoch_w=terms.effective_weights(state.w))
    return hamiltonian_h(state.delta, F, error_E(state.t, state.y, state.w, cfg))


def costate_derivative(state: NetState, cfg: NetConfig, epoch_w: Optional[torch.Tensor] = None) -> torch.Tensor:
    """
    Continuous-time back-propagation:
    dDelta_i/dt = (1/lambda) [Delta_i - sum_j Delta_j f'_j W_ji] - dE/dy_i
    """
    weights = state.w if epoch_w is None else epoch_w
    _check_dims(cfg, state.y, weights)
    slope = cfg.transfer.derivative(_drive(state.y, weights, cfg))
    back = torch.einsum("...j,...ji->...i", state.delta * slope, weights)
    return (state.delta - back) / cfg.lambda_ - error_gradient(state.y, cfg)


def _rates(state: NetState, cfg: NetConfig, terms: EpochTerms, mask: torch.Tensor):
    w_eff = terms.effective_weights(state.w)
    dy = neuron_model_F(state.y, state.w, cfg, epoch_w=w_eff)
    ddelta = costate_derivative(state, cfg, epoch_w=w_eff)
    dw = mask * state.m / cfg.omega
    # dH/dW_kl = Delta_k f'_k y_l / lambda, since dW_eff/dW is the identity
    slope = cfg.transfer.derivative(_drive(state.y, w_eff, cfg))
    dm = -mask * torch.einsum("...k,...l->...kl", state.delta * slope, state.y) / cfg.lambda_
    return dy, ddelta, dw, dm


def _shifted(state: NetState, rates, h: float) -> NetState:
    dy, ddelta, dw, dm = rates
    return NetState(state.t + h, state.y + h * dy, state.delta + h * ddelta, state.w + h * dw, state.m + h * dm)


def characteristic_step(
    state: NetState,
    traj: Trajectory,
    cfg: NetConfig,
    dt: Optional[float] = None,
    terms: Optional[EpochTerms] = None,
) -> NetState:
    """
    Advance (y, Delta, W, M) by one classical RK4 step of
    dy/dt = dH/dDelta, dDelta/dt = -dH/dy, dW/dt = dH/dM, dM/dt = -dH/dW.
    """
    dt = cfg.dt if dt is None else dt
    if terms is None:
        terms = epoch_terms(traj, state.t, cfg)
    mask = cfg.weight_mask()

    k1 = _rates(state, cfg, terms, mask)
    k2 = _rates(_shifted(state, k1, 0.5 * dt), cfg, terms, mask)
    k3 = _rates(_shifted(state, k2, 0.5 * dt), cfg, terms, mask)
    k4 = _rates(_shifted(state, k3, dt), cfg, terms, mask)
    for k in (k1, k2, k3, k4):
        if not all(bool(torch.isfinite(x).all()) for x in k):
            raise IntegrationError("non-finite derivative in characteristic system", t=state.t)

    combined = tuple((a + 2.0 * b + 2.0 * c + d) / 6.0 for a, b, c, d in zip(k1, k2, k3, k4))
    new_state = _shifted(state, combined, dt)
    if not new_state.is_finite():
        raise IntegrationError("non-finite state after RK4 step", t=state.t)
    largest = new_state.max_abs()
    if largest > cfg.max_state_magnitude:
        raise IntegrationError(
            f"state magnitude {largest:.3e} exceeds max_state_magnitude={cfg.max_state_magnitude:g}", t=new_state.t
        )
    return new_state


def action_accumulate(traj: Trajectory, J0: float, kind: str = "error") -> torch.Tensor:
    """
    Trapezoidal action along the run. `error`: J(t) = J0 - int E dtau.
    `classical`: J(t) = J0 + int (Delta . dy/dt + M . dW/dt - H) dtau.
    """
    if kind == "error":
        integrand = -traj.sample("E")
    elif kind == "classical":
        integrand = traj.sample("lagrangian")
    else:
        raise ConfigError(f"unknown action kind {kind!r}")
    increments = 0.5 * traj.dt * (integrand[1:] + integrand[:-1])
    action = torch.full_like(integrand, float(J0))
    action[1:] = action[1:] + torch.cumsum(increments, dim=0)
    return action


def wavefunction_from_action(amplitude, J, hbar_eff: float) -> torch.Tensor:
    """psi = A exp(-(i / hbar) J), evaluated pointwise."""
    if hbar_eff <= 0:
        raise ConfigError(f"hbar_eff must be > 0 (got {hbar_eff})")
    amplitude = torch.as_tensor(amplitude, dtype=torch.float64)
    J = torch.as_tensor(J, dtype=torch.float64)
    if amplitude.shape != J.shape:
        amplitude = amplitude.expand_as(J)
    return amplitude.to(torch.complex128) * torch.exp(-1j * J.to(torch.complex128) / hbar_eff)


def initial_weights(cfg: NetConfig, seed: int) -> torch.Tensor:
    generator = torch.Generator().manual_seed(int(seed))
    w = torch.rand(cfg.n_neurons, cfg.n_neurons, generator=generator, dtype=torch.float64) - 0.5
    return w * cfg.weight_mask()


def initial_state(cfg: NetConfig, seeds: Optional[Sequence[int]] = None) -> NetState:
    """y(0) from the config, Delta(0) = 0, M(0) = 0, W(0) uniform on [-0.5, 0.5] per seed."""
    if seeds is None:
        w = initial_weights(cfg, cfg.seed)
        y = cfg.tensor("initial_y")
    else:
        w = torch.stack([initial_weights(cfg, s) for s in seeds])
        y = cfg.tensor("initial_y").expand(len(seeds), -1).clone()
    return NetState(0.0, y, torch.zeros_like(y), w, torch.zeros_like(w))


def _record(traj: Trajectory, state: NetState, cfg: NetConfig, terms: EpochTerms):
    E = error_E(state.t, state.y, state.w, cfg)
    kinetic = kinetic_energy(state.m, terms, cfg)
    h_int = interaction_hamiltonian(state, cfg, terms)
    H = h_int + kinetic
    dy = neuron_model_F(state.y, state.w, cfg, epoch_w=terms.effective_weights(state.w))
    dw = cfg.weight_mask() * state.m / cfg.omega
    lagrangian = (state.delta * dy).sum(dim=-1) + (state.m * dw).sum(dim=(-2, -1)) - H
    traj.record(E=E, H=H, h_int=h_int, lagrangian=lagrangian)


def _integrate(cfg: NetConfig, state: NetState, disable_progress: bool = True) -> Trajectory:
    cfg.check()
    traj = Trajectory(cfg.dt, epoch_length_T=cfg.epoch_length_T)
    traj.append(state)
    terms = epoch_terms(traj, state.t, cfg)
    _record(traj, state, cfg, terms)
    for k in tqdm(range(cfg.n_steps), desc="integrating", disable=disable_progress):
        state = characteristic_step(state, traj, cfg, terms=terms)
        # grid times are index * dt, never accumulated
        state = NetState(traj.expected_time(k + 1), state.y, state.delta, state.w, state.m)
        traj.append(state)
        terms = epoch_terms(traj, state.t, cfg)
        _record(traj, state, cfg, terms)
    traj.action_J = action_accumulate(traj, 0.0)
    H = traj.sample("H")
    drift = (H[-1] - H[0]).abs().max().item()
    logger.debug(f"integrated {cfg.n_steps} steps to t={state.t:.6g}, |H(end) - H(0)| = {drift:.3e}")
    return traj


def learning_run(cfg: NetConfig, disable_progress: bool = True) -> Trajectory:
    """Integrate the characteristic system over [0, n_epochs * T] from the seeded initial state."""
    return _integrate(cfg, initial_state(cfg), disable_progress)


def ensemble_run(cfg: NetConfig, seeds: Sequence[int], disable_progress: bool = True) -> Trajectory:
    """Integrate all members at once; tensors of the returned trajectory carry a leading member axis."""
    if len(seeds) == 0:
        raise ConfigError("ensemble needs at least one seed")
    logger.info(f"integrating ensemble of {len(seeds)} members over {cfg.n_steps} steps")
    return _integrate(cfg, initial_state(cfg, seeds), disable_progress)


def trajectory_wavefunction(traj: Trajectory, cfg: NetConfig, amplitude: float = 1.0) -> torch.Tensor:
    """psi(t) = A exp(-(i / hbar_eff) J(t)) along a completed run."""
    if traj.action_J is None:
        traj.action_J = action_accumulate(traj, 0.0)
    return wavefunction_from_action(torch.full_like(traj.action_J, amplitude), traj.action_J, cfg.hbar_eff)
