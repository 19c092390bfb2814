import math

import pytest
import torch

from modeling.errors import ConfigError, DegenerateStateError, InvariantError
from modeling.hjnet import NetState, Trajectory, ensemble_run, learning_run
from modeling.qboltz import (
    CouplingSeries,
    DensityMatrix,
    boltzmann_step,
    coupling_operator,
    coupling_signal,
    damping_term,
    exact_phase_evolution,
    forward_scattering,
    learning_potential,
    project_physical,
    run_evolution,
    trace_distance,
    warmup_index,
)
from modeling.witnesses import bell_state, concurrence, plus_plus, purity, random_density_matrix


def diag(*values):
    return torch.diag(torch.tensor(values, dtype=torch.float64)).to(torch.complex128)


def flat_trajectory(h_int, dt=0.1, epoch_length_T=None):
    """Trajectory of resting neurons with a prescribed interaction energy per step."""
    traj = Trajectory(dt, epoch_length_T=epoch_length_T)
    zeros = torch.zeros(2, dtype=torch.float64)
    for k, value in enumerate(h_int):
        traj.append(NetState(k * dt, zeros, zeros, torch.zeros(2, 2, dtype=torch.float64), torch.zeros(2, 2, dtype=torch.float64)), h_int=value)
    return traj


def test_coupling_operators():
    zz = coupling_operator("zz")
    torch.testing.assert_close(zz, diag(1, -1, -1, 1))
    xx = coupling_operator("xx")
    torch.testing.assert_close(xx @ xx, torch.eye(4, dtype=torch.complex128))
    with pytest.raises(ConfigError):
        coupling_operator("yy")


def test_forward_scattering_matches_commutator(generator):
    c_op = coupling_operator("zz")
    for _ in range(10):
        rho = random_density_matrix(generator)
        expected = -1j * 0.7 * (c_op @ rho - rho @ c_op)
        torch.testing.assert_close(forward_scattering(rho, 0.7, c_op), expected)


def test_damping_term_matches_double_commutator(generator):
    c_op = coupling_operator("xx")
    for _ in range(10):
        rho = random_density_matrix(generator)
        inner = c_op @ rho - rho @ c_op
        expected = -0.5 * 0.2 * 1.5 * 0.5 * (c_op @ inner - inner @ c_op)
        torch.testing.assert_close(damping_term(rho, 1.5, 0.5, 0.2, c_op), expected)


def test_zero_coupling_leaves_state_unchanged():
    params = CouplingSeries.constant(0.0, 10, 0.01, gamma=0.3)
    states = run_evolution(None, plus_plus(), params)
    assert len(states) == 11
    for rho in states:
        torch.testing.assert_close(rho.data, plus_plus())


def test_projection_clips_negative_eigenvalue():
    rho = project_physical(diag(1.1, -0.1, 0, 0))
    torch.testing.assert_close(rho.data, diag(1, 0, 0, 0), rtol=0, atol=1e-12)


def test_projection_leaves_physical_state_alone(generator):
    sigma = random_density_matrix(generator)
    torch.testing.assert_close(project_physical(sigma).data, sigma, rtol=0, atol=1e-12)


def test_projection_failures():
    with pytest.raises(DegenerateStateError):
        project_physical(diag(-1, -1, 0, 0), step=4)
    broken = torch.zeros(4, 4, dtype=torch.complex128)
    broken[0, 1] = 1.0
    with pytest.raises(InvariantError):
        project_physical(broken)


def test_density_matrix_validation():
    DensityMatrix(bell_state())
    with pytest.raises(InvariantError, match="trace"):
        DensityMatrix(diag(1, 1, 0, 0))
    with pytest.raises(InvariantError, match="eigenvalue"):
        DensityMatrix(diag(1.5, -0.5, 0, 0))
    with pytest.raises(InvariantError, match="shape"):
        DensityMatrix(torch.eye(2, dtype=torch.complex128) / 2)


def test_coupling_series_validation():
    params = CouplingSeries.constant(1.0, 4, 0.1)
    assert params.validate() == []
    assert params.dt == pytest.approx(0.1)
    bad = CouplingSeries(params.times, params.g, gamma=-1.0)
    with pytest.raises(ConfigError):
        bad.check()
    uneven = CouplingSeries(torch.tensor([0.0, 0.1, 0.3], dtype=torch.float64), torch.ones(3, dtype=torch.float64))
    assert any("uniform" in v for v in uneven.validate())


def test_step_preserves_trace_and_hermiticity(generator):
    params = CouplingSeries.constant(1.0, 1, 0.01, gamma=0.5)
    for _ in range(20):
        rho = boltzmann_step(random_density_matrix(generator), 1.0, 0.8, 0.01, params)
        assert rho.trace() == pytest.approx(1.0, abs=1e-12)
        assert (rho.data - rho.data.conj().T).abs().max().item() <= 1e-12


def test_damping_alone_lowers_purity():
    c_op = coupling_operator("zz")
    rho = plus_plus()
    damped = project_physical(rho + 0.01 * damping_term(rho, 1.0, 1.0, 1.0, c_op))
    assert purity(damped) < purity(rho) - 1e-4


def test_first_step_has_no_damping_memory():
    params = CouplingSeries.constant(1.0, 1, 0.01, gamma=5.0)
    states = run_evolution(None, plus_plus(), params)
    undamped = boltzmann_step(plus_plus(), 1.0, 0.0, 0.01, params)
    torch.testing.assert_close(states[1].data, undamped.data)


def test_unitary_limit_matches_exact_phase():
    dt, n_steps = 1e-4, 10000
    params = CouplingSeries.constant(1.0, n_steps, dt, gamma=0.0)
    states = run_evolution(None, plus_plus(), params)
    exact = exact_phase_evolution(plus_plus(), params.c_op, n_steps * dt)
    assert trace_distance(states[-1], exact) <= 10 * dt
    assert concurrence(states[-1]) == pytest.approx(abs(math.sin(2.0)), abs=1e-3)
    for k in (2500, 5000, 7500):
        assert concurrence(states[k]) == pytest.approx(abs(math.sin(2 * k * dt)), abs=1e-3)


def test_trace_distance():
    assert trace_distance(bell_state(), bell_state()) == pytest.approx(0.0, abs=1e-12)
    assert trace_distance(diag(1, 0, 0, 0), diag(0, 1, 0, 0)) == pytest.approx(1.0)


def test_coupling_signal_reads_interaction_energy():
    # sum_k Delta_k F_k = 0.5, E = 0.25
    traj = flat_trajectory([0.75, 0.75, 0.75])
    torch.testing.assert_close(coupling_signal(traj, 2.0).g, torch.full((3,), 1.5, dtype=torch.float64))
    assert torch.equal(coupling_signal(traj, 0.0).g, torch.zeros(3, dtype=torch.float64))
    with pytest.raises(ConfigError):
        coupling_signal(Trajectory(0.1), 1.0)


def test_coupling_signal_on_learning_run(two_neuron_cfg):
    traj = learning_run(two_neuron_cfg)
    params = coupling_signal(traj, 0.5, gamma=0.1)
    torch.testing.assert_close(params.g, 0.5 * traj.sample("h_int"))
    assert params.dt == pytest.approx(two_neuron_cfg.dt)
    states = run_evolution(traj, plus_plus(), params)
    assert len(states) == len(traj)


def test_run_evolution_rejects_mismatch(two_neuron_cfg):
    traj = learning_run(two_neuron_cfg)
    with pytest.raises(ConfigError):
        run_evolution(traj, plus_plus(), CouplingSeries.constant(1.0, 3, two_neuron_cfg.dt))


def test_warmup_index():
    assert warmup_index(100) == 5
    assert warmup_index(101) == 6
    assert warmup_index(100, 0.0) == 0
    assert warmup_index(20, 0.05) == 1


def test_learning_potential_of_identical_members():
    members = [flat_trajectory([0.1, 0.4, -0.2], epoch_length_T=0.1) for _ in range(3)]
    t, V = learning_potential(members, 2.0)
    torch.testing.assert_close(V, torch.tensor([0.2, 0.8, -0.4], dtype=torch.float64))
    torch.testing.assert_close(t, torch.tensor([-0.1, 0.0, 0.1], dtype=torch.float64))


def test_learning_potential_of_resting_ensemble():
    members = [flat_trajectory([0.0] * 5) for _ in range(2)]
    t, V = learning_potential(members, 1.0, t_shift=0.0)
    assert torch.equal(V, torch.zeros(5, dtype=torch.float64))
    assert t[0].item() == 0.0


def test_learning_potential_rejects_bad_ensembles():
    with pytest.raises(ConfigError):
        learning_potential([flat_trajectory([0.0, 1.0])], 1.0)
    with pytest.raises(ConfigError, match="time grid"):
        learning_potential([flat_trajectory([0.0, 1.0]), flat_trajectory([0.0, 1.0, 2.0])], 1.0)
    with pytest.raises(ConfigError, match="time grid"):
        learning_potential([flat_trajectory([0.0, 1.0]), flat_trajectory([0.0, 1.0], dt=0.2)], 1.0)


def test_learning_potential_of_batched_run(two_neuron_cfg):
    batched = ensemble_run(two_neuron_cfg, [1, 2, 3])
    t, V = learning_potential(batched, 1.0)
    singles = [batched.member(i) for i in range(3)]
    t_single, V_single = learning_potential(singles, 1.0)
    torch.testing.assert_close(V, V_single)
    torch.testing.assert_close(t, t_single)
    assert t[0].item() == pytest.approx(-two_neuron_cfg.epoch_length_T)
