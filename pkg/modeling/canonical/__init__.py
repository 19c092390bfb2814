from .generator import (
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
