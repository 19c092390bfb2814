from .boltzmann import (
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
