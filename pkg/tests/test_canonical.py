import math

import pytest
import torch

from modeling.canonical import (
    GeneratorSeries,
    PerturbedHamiltonian,
    apply_transform,
    first_order_generator,
    fourier_project,
    hamiltonian_residual,
    invariant_torus,
    mode_vectors,
    new_hamiltonian_K,
    pendulum_hamiltonian,
    rotor_hamiltonian,
    solve_generator,
    symplectic_check,
    torus_grid,
)
from modeling.errors import ConfigError, ConvergenceError, InvariantError, ResonanceError


def grid_1d(n=64):
    return torus_grid(n, 1)[..., 0]


def hand_series(coefficients: dict, J=1.0, order=2, grid=64):
    """Series with the given {m: g_m} for one degree of freedom, no J-dependence."""
    modes = mode_vectors(order, 1)
    values = torch.tensor([coefficients.get(m, 0j) for m in modes[:, 0].tolist()], dtype=torch.complex128)
    return GeneratorSeries(modes, values, order, torch.tensor([J], dtype=torch.float64), grid)


def test_fourier_project_pure_modes():
    phi = grid_1d()
    assert fourier_project(torch.cos(phi), [1]) == pytest.approx(0.5, abs=1e-12)
    assert fourier_project(torch.full_like(phi, 3.25), [0]) == pytest.approx(3.25, abs=1e-12)
    assert fourier_project(torch.sin(phi), [1]) == pytest.approx(-0.5j, abs=1e-12)
    for m in range(1, 31):
        assert abs(fourier_project(torch.cos(m * phi), [m]) - 0.5) <= 1e-12


def test_fourier_project_two_dimensional():
    phi = torus_grid(32, 2)
    samples = torch.cos(phi[..., 0] - 2 * phi[..., 1])
    assert fourier_project(samples, [1, -2]) == pytest.approx(0.5, abs=1e-12)
    assert fourier_project(samples, [1, 2]) == pytest.approx(0.0, abs=1e-12)


def test_fourier_project_coarse_grid():
    with pytest.raises(ConfigError):
        fourier_project(torch.ones(6, dtype=torch.float64), [3])


def test_unperturbed_generator_is_zero():
    G = solve_generator(pendulum_hamiltonian(0.0), 1.0)
    assert G.iterations == 1
    assert torch.equal(G.coefficients, torch.zeros_like(G.coefficients))


def test_rotor_first_order_generator():
    G = solve_generator(rotor_hamiltonian(0.1), 1.0)
    assert G.coefficient([1]) == pytest.approx(0.05j, abs=1e-8)
    assert G.coefficient([-1]) == pytest.approx(-0.05j, abs=1e-8)
    phi = grid_1d().unsqueeze(-1)
    torch.testing.assert_close(G.evaluate(phi), -0.1 * torch.sin(phi[..., 0]), rtol=0, atol=1e-8)
    assert new_hamiltonian_K(rotor_hamiltonian(0.1), G) == pytest.approx(1.0, abs=1e-4)


@pytest.mark.parametrize("omega", [0.5, 2.0])
@pytest.mark.parametrize("eps", [0.01, 0.1])
def test_first_order_matches_hand_perturbation(omega, eps):
    G = first_order_generator(rotor_hamiltonian(eps, omega), 1.0)
    phi = grid_1d().unsqueeze(-1)
    torch.testing.assert_close(G.evaluate(phi), -(eps / omega) * torch.sin(phi[..., 0]), rtol=0, atol=1e-8)


def test_angle_independent_perturbation():
    ph = PerturbedHamiltonian(
        h0=lambda I: 0.5 * (I ** 2).sum(-1),
        h0_prime=lambda I: I,
        v=lambda phi, I: (I ** 3).sum(-1) + 0 * phi.sum(-1),
        epsilon=0.1,
    )
    G = solve_generator(ph, 1.0)
    assert G.coefficients.abs().max().item() <= 1e-15
    assert new_hamiltonian_K(ph, G) == pytest.approx(0.5 + 0.1, abs=1e-14)


def test_resonant_mode_is_named():
    with pytest.raises(ResonanceError) as info:
        solve_generator(pendulum_hamiltonian(0.1), 0.0)
    assert info.value.mode == (-8,)
    assert info.value.divisor == 0.0


def test_two_dimensional_resonance():
    ph = PerturbedHamiltonian(
        h0=lambda I: (I * torch.tensor([1.0, 2.0], dtype=torch.float64)).sum(-1),
        h0_prime=lambda I: torch.tensor([1.0, 2.0], dtype=torch.float64).expand_as(I),
        v=lambda phi, I: torch.cos(phi).sum(-1),
        epsilon=0.01,
        n_dof=2,
    )
    with pytest.raises(ResonanceError) as info:
        solve_generator(ph, [1.0, 1.0], order=2, grid=8)
    m = info.value.mode
    assert m[0] + 2 * m[1] == 0


def test_non_convergence_carries_residual():
    with pytest.raises(ConvergenceError) as info:
        solve_generator(pendulum_hamiltonian(0.1), 1.0, max_iter=2)
    assert info.value.iterations == 2
    assert info.value.residual > 0


def test_history_is_non_increasing_after_second_iterate():
    for eps in (0.02, 0.05, 0.1):
        G = solve_generator(pendulum_hamiltonian(eps), 1.0, with_action_derivative=False)
        history = G.history[1:]
        assert all(b <= a for a, b in zip(history, history[1:]))


def test_reconstructed_generator_is_real():
    G = solve_generator(pendulum_hamiltonian(0.1), 1.0)
    assert G.validate() == []
    phi = grid_1d().unsqueeze(-1)
    assert G.imaginary_part(phi).abs().max().item() <= 1e-12


@pytest.mark.parametrize("eps", [0.08, 0.04, 0.02, 0.01])
def test_first_order_residual_scales_with_epsilon_squared(eps):
    big = hamiltonian_residual(pendulum_hamiltonian(eps), first_order_generator(pendulum_hamiltonian(eps), 1.0))
    small = hamiltonian_residual(pendulum_hamiltonian(eps / 2), first_order_generator(pendulum_hamiltonian(eps / 2), 1.0))
    assert 2.5 <= big / small <= 6.0


def test_residual_small_at_weak_coupling():
    ph = pendulum_hamiltonian(0.01)
    assert hamiltonian_residual(ph, first_order_generator(ph, 1.0)) <= 1e-3
    assert hamiltonian_residual(ph, solve_generator(ph, 1.0)) <= 1e-10


def test_identity_transform():
    G = hand_series({})
    phi = torch.tensor([[0.3], [2.0], [5.9]], dtype=torch.float64)
    I, psi = apply_transform(G, phi, [1.0])
    torch.testing.assert_close(I, torch.ones_like(I))
    torch.testing.assert_close(psi, phi)


def test_transform_of_sine_generator():
    # G = -0.1 sin(phi)
    G = hand_series({1: 0.05j, -1: -0.05j})
    phi = torch.linspace(0, 2 * math.pi, 17, dtype=torch.float64).unsqueeze(-1)
    I, psi = apply_transform(G, phi, [1.0])
    torch.testing.assert_close(I, 1.0 - 0.1 * torch.cos(phi), rtol=0, atol=1e-14)
    torch.testing.assert_close(psi, torch.remainder(phi, 2 * math.pi))


def test_transform_rejects_other_action():
    with pytest.raises(ConfigError):
        apply_transform(hand_series({}), torch.zeros(1, 1, dtype=torch.float64), [2.0])


def test_invariant_torus_closes():
    G = solve_generator(pendulum_hamiltonian(0.1), 1.0)
    phi, I = invariant_torus(G, 64)
    assert phi[0].item() == 0.0 and phi[-1].item() == pytest.approx(2 * math.pi)
    assert abs(I[0].item() - I[-1].item()) <= 1e-12
    assert I.min().item() < 1.0 < I.max().item()


def test_symplectic_check_identity():
    assert symplectic_check(hand_series({}), grid=128) == 0.0


def test_symplectic_check_pendulum():
    G = solve_generator(pendulum_hamiltonian(0.1), 1.0)
    assert G.derivative_J is not None
    assert symplectic_check(G, grid=128, step=1e-5) <= 1e-6


def test_symplectic_check_rejects_corrupted_series():
    G = solve_generator(pendulum_hamiltonian(0.1), 1.0, with_action_derivative=False)
    coefficients = G.coefficients.clone()
    index = G.modes[:, 0].tolist().index(1)
    coefficients[index] = 2 * coefficients[index]
    broken = GeneratorSeries(G.modes, coefficients, G.truncation_order, G.action_J, G.grid_size)
    with pytest.raises(InvariantError):
        symplectic_check(broken)


def test_symplectic_check_one_dimension_only():
    modes = mode_vectors(1, 2)
    G = GeneratorSeries(modes, torch.zeros(modes.shape[0], dtype=torch.complex128), 1, torch.ones(2, dtype=torch.float64), 8)
    with pytest.raises(ConfigError):
        symplectic_check(G)


def test_h0_prime_consistency():
    assert pendulum_hamiltonian(0.1).validate() == []
    wrong = PerturbedHamiltonian(h0=lambda I: (I ** 2).sum(-1), h0_prime=lambda I: I, v=lambda phi, I: 0 * I.sum(-1), epsilon=0.0)
    assert len(wrong.validate()) == 1


def test_generator_csv(tmp_path):
    G = solve_generator(pendulum_hamiltonian(0.1), 1.0)
    path = tmp_path / "generator.csv"
    G.to_csv(str(path), residual=1e-13)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# J=1,epsilon=0.10000000000000001,order=8,grid=64,residual=")
    assert lines[1] == "m,re_g,im_g"
    assert len(lines) == 2 + 16
    assert lines[2].split(",")[0] == "-8"
