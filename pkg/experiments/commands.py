import logging
import math
import os
import time
from typing import List

import torch
from tqdm import tqdm

from modeling.canonical import (
    first_order_generator,
    hamiltonian_residual,
    invariant_torus,
    pendulum_hamiltonian,
    solve_generator,
    symplectic_check,
)
from modeling.errors import ConfigError, ConvergenceError, DegenerateStateError, ResonanceError
from modeling.hjnet import ensemble_run, learning_run, trajectory_wavefunction
from modeling.qboltz import (
    CouplingSeries,
    DensityMatrix,
    coupling_signal,
    learning_potential,
    run_evolution,
    warmup_index,
)
from modeling.witnesses import witness_report

from .config import ExperimentConfig
from .plotting import PlotSpec, emit_plot
from .utils import RunManifest, config_hash, has_sign_change, is_non_decreasing, read_csv, save_csv, unique_interior_minimum


logger = logging.getLogger(__name__)

RHO_COLUMNS = [f"{part}_rho_{i}{j}" for i in range(4) for j in range(4) for part in ("re", "im")]
EVOLUTION_HEADER = ["t", *RHO_COLUMNS, "concurrence", "negativity"]
WITNESS_HEADER = ["t", "concurrence", "negativity", "lambda1", "lambda2", "lambda3", "lambda4", "pt_min_eig", "purity"]
CANONICAL_HEADER = ["epsilon", "residual", "converged_residual", "symplectic_defect", "iterations", "status"]


def _start(cfg: ExperimentConfig, seeds) -> RunManifest:
    cfg.check()
    os.makedirs(cfg.output_dir, exist_ok=True)
    return RunManifest(config_hash=config_hash(cfg.to_dict()), seeds=list(seeds))


def _finish(cfg: ExperimentConfig, manifest: RunManifest, started: float) -> RunManifest:
    manifest.wall_time = time.perf_counter() - started
    for name, passed in manifest.shape_checks.items():
        if passed is False:
            logger.warning(f"shape check '{name}' failed")
    manifest.save(cfg.output_dir)
    logger.info(f"{len(manifest.artifacts)} artifacts written to {cfg.output_dir}")
    return manifest


def _plot(cfg: ExperimentConfig, manifest: RunManifest, csv_path: str, spec: PlotSpec):
    if cfg.emit_plots:
        manifest.add(emit_plot(csv_path, spec))


def _rho_row(rho: torch.Tensor) -> list:
    values = []
    for z in rho.reshape(-1).tolist():
        values += [z.real, z.imag]
    return values


def cmd_simulate(cfg: ExperimentConfig) -> RunManifest:
    """Integrate the network for the master seed and export the trajectory."""
    started = time.perf_counter()
    manifest = _start(cfg, [cfg.net.seed])
    traj = learning_run(cfg.net, disable_progress=False)
    path = manifest.add(os.path.join(cfg.output_dir, "trajectory.csv"))
    traj.to_csv(path, psi=trajectory_wavefunction(traj, cfg.net))
    E = traj.sample("E")
    manifest.shape_checks["error_not_increased"] = bool(E[-1].item() <= E[0].item())
    _plot(cfg, manifest, path, PlotSpec("t", ["E", "H"], title="network trajectory", ylabel="energy"))
    return _finish(cfg, manifest, started)


def cmd_potential(cfg: ExperimentConfig) -> RunManifest:
    """Ensemble-averaged interaction energy with the input period at negative times."""
    started = time.perf_counter()
    seeds = cfg.seeds
    manifest = _start(cfg, seeds)
    traj = ensemble_run(cfg.net, seeds, disable_progress=False)
    if len(seeds) == 1:
        times = traj.times - cfg.net.epoch_length_T
        potential = coupling_signal(traj, cfg.coupling.scale).g[:, 0]
    else:
        times, potential = learning_potential(traj, cfg.coupling.scale)
    path = manifest.add(os.path.join(cfg.output_dir, "potential.csv"))
    save_csv(path, ["t", "V"], zip(times.tolist(), potential.tolist()))
    V = potential.tolist()
    manifest.shape_checks["sign_change"] = has_sign_change(V)
    manifest.shape_checks["unique_interior_minimum"] = unique_interior_minimum(V)
    _plot(cfg, manifest, path, PlotSpec("t", ["V"], title="averaged interaction potential"))
    return _finish(cfg, manifest, started)


def _coupling(cfg: ExperimentConfig):
    c_op = cfg.coupling.operator()
    if cfg.constant_g is not None:
        const = cfg.constant_g
        logger.info(f"constant coupling g0={const.g0} over {const.n_steps} steps of {const.dt}")
        return None, CouplingSeries.constant(const.g0, const.n_steps, const.dt, cfg.coupling.gamma, c_op)
    traj = learning_run(cfg.net, disable_progress=False)
    return traj, coupling_signal(traj, cfg.coupling.scale, cfg.coupling.gamma, c_op)


def cmd_entangle(cfg: ExperimentConfig) -> RunManifest:
    """Network run, coupling signal, density-matrix evolution and witnesses per step."""
    started = time.perf_counter()
    manifest = _start(cfg, [] if cfg.constant_g is not None else [cfg.net.seed])
    traj, params = _coupling(cfg)
    try:
        states = run_evolution(traj, DensityMatrix(cfg.initial_rho()), params)
    except DegenerateStateError as e:
        logger.error(f"evolution aborted, last good step {None if e.step is None else e.step - 1}")
        raise

    times = params.times.tolist()
    reports = [witness_report(rho, t) for rho, t in tqdm(zip(states, times), total=len(states), desc="witnesses")]

    path = manifest.add(os.path.join(cfg.output_dir, "evolution.csv"))
    save_csv(path, EVOLUTION_HEADER, ([r.t, *_rho_row(rho.data), r.concurrence, r.negativity] for rho, r in zip(states, reports)))

    start = warmup_index(len(reports), cfg.warmup_fraction)
    reported = reports[start:]
    path = manifest.add(os.path.join(cfg.output_dir, "concurrence.csv"))
    save_csv(path, WITNESS_HEADER, (r.to_row() for r in reported))

    if cfg.constant_g is None:
        C = [r.concurrence for r in reported]
        manifest.shape_checks["concurrence_non_decreasing"] = is_non_decreasing(C)
        manifest.shape_checks["final_concurrence_at_least_half"] = bool(C and C[-1] >= 0.5)
    else:
        g0 = cfg.constant_g.g0
        error = max(abs(r.concurrence - abs(math.sin(2 * g0 * r.t))) for r in reports)
        manifest.shape_checks["unitary_oracle_error"] = error
        logger.info(f"max deviation from |sin(2 g0 t)|: {error:.3e}")
    _plot(cfg, manifest, path, PlotSpec("t", ["concurrence", "negativity"], title="evolution of concurrence", ylabel="witness"))
    return _finish(cfg, manifest, started)


def cmd_canonical(cfg: ExperimentConfig) -> RunManifest:
    """Pendulum sweep over epsilon: first-order and converged residuals, symplectic defect."""
    started = time.perf_counter()
    manifest = _start(cfg, [])
    can = cfg.canonical
    rows, residuals, largest = [], {}, None
    for eps in tqdm(can.epsilons, desc="epsilon sweep"):
        ph = pendulum_hamiltonian(eps)
        try:
            first = first_order_generator(ph, can.action_J, can.order, can.grid)
            residual = hamiltonian_residual(ph, first)
            G = solve_generator(ph, can.action_J, can.order, can.grid, can.tol, can.max_iter)
            defect = symplectic_check(G, grid=can.symplectic_grid)
            rows.append([eps, residual, hamiltonian_residual(ph, G), defect, G.iterations, "ok"])
            residuals[eps] = residual
            if largest is None or abs(eps) > abs(largest[0]):
                largest = (eps, G, residual)
        except (ResonanceError, ConvergenceError) as e:
            logger.warning(f"epsilon={eps}: {e}")
            rows.append([eps, float("nan"), float("nan"), float("nan"), getattr(e, "iterations", 0), type(e).__name__])

    rows.sort(key=lambda row: row[0])
    path = manifest.add(os.path.join(cfg.output_dir, "canonical.csv"))
    save_csv(path, CANONICAL_HEADER, rows)
    ratios = {e: residuals[e] / residuals[e / 2] for e in residuals if e != 0 and e / 2 in residuals and residuals[e / 2] > 0}
    manifest.shape_checks["residual_halving_ratios"] = {f"{e:g}": r for e, r in sorted(ratios.items())}
    manifest.shape_checks["epsilon_squared_scaling"] = bool(ratios) and all(2.5 <= r <= 6.0 for r in ratios.values())

    if largest is not None:
        eps, G, residual = largest
        manifest.add(os.path.join(cfg.output_dir, "generator.csv"))
        G.to_csv(manifest.artifacts[-1], epsilon=eps, residual=hamiltonian_residual(pendulum_hamiltonian(eps), G))
        phi, I = invariant_torus(G, can.torus_points)
        torus_path = manifest.add(os.path.join(cfg.output_dir, "torus.csv"))
        save_csv(torus_path, ["phi", "I"], zip(phi.tolist(), I.tolist()))
        _plot(cfg, manifest, torus_path, PlotSpec("phi", ["I"], title=f"invariant torus at epsilon={eps:g}", xlabel="angle", ylabel="action"))
    _plot(cfg, manifest, path, PlotSpec("epsilon", ["residual", "converged_residual"], title="Hamilton-Jacobi residual", logy=True))
    return _finish(cfg, manifest, started)


def _cell(csv_path: str, header: List[str], row: List[str], number: int, column: str) -> float:
    i = header.index(column)
    value = row[i] if i < len(row) else ""
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"{csv_path}: row {number}, column {column!r}: not a number ({value!r})")


def cmd_witness(csv_path: str, cfg: ExperimentConfig) -> RunManifest:
    """Witness table for every density matrix of an evolution-format CSV."""
    started = time.perf_counter()
    manifest = _start(cfg, [])
    try:
        header, rows = read_csv(csv_path)
    except OSError as e:
        raise ConfigError(f"{csv_path}: cannot read evolution table ({e.strerror})")
    missing = [c for c in ["t", *RHO_COLUMNS] if c not in header]
    if missing:
        raise ConfigError(f"{csv_path}: missing column(s) {missing}")
    reports = []
    for number, row in enumerate(tqdm(rows, desc="witnesses"), start=1):
        values = [_cell(csv_path, header, row, number, c) for c in RHO_COLUMNS]
        rho = torch.complex(torch.tensor(values[0::2], dtype=torch.float64), torch.tensor(values[1::2], dtype=torch.float64))
        reports.append(witness_report(DensityMatrix(rho.reshape(4, 4)), _cell(csv_path, header, row, number, "t")))
    if not reports:
        raise ConfigError(f"{csv_path}: no density matrices")
    path = manifest.add(os.path.join(cfg.output_dir, "witness.csv"))
    save_csv(path, WITNESS_HEADER, (r.to_row() for r in reports))
    _plot(cfg, manifest, path, PlotSpec("t", ["concurrence", "negativity"], title="entanglement witnesses", ylabel="witness"))
    return _finish(cfg, manifest, started)


COMMANDS = {
    "simulate": cmd_simulate,
    "potential": cmd_potential,
    "entangle": cmd_entangle,
    "canonical": cmd_canonical,
}
