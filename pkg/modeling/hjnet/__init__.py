from .configuration_hjnet import NetConfig, Transfer
from .trajectory import EpochBuffer, NetState, Trajectory
from .modeling_hjnet import (
    EpochTerms,
    action_accumulate,
    characteristic_step,
    costate_derivative,
    ensemble_run,
    epoch_index,
    epoch_shift,
    epoch_terms,
    error_E,
    error_gradient,
    extended_hamiltonian_H,
    hamiltonian_h,
    initial_state,
    interaction_hamiltonian,
    kinetic_energy,
    learning_run,
    neuron_model_F,
    trajectory_wavefunction,
    wavefunction_from_action,
)
