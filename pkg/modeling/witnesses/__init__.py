from .linalg import commutator, hermitian_eigs, kron, matrix_sqrt_psd
from .states import (
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    bell_state,
    ket_to_dm,
    plus_plus,
    product_state,
    random_density_matrix,
    random_local_unitary,
    random_unitary,
    werner_state,
)
from .entanglement import (
    WitnessReport,
    concurrence,
    concurrence_nested,
    concurrence_pure,
    negativity,
    partial_trace,
    partial_transpose,
    purity,
    spin_flip,
    witness_report,
    wootters_lambdas,
)
