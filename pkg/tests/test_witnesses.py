import math

import pytest
import torch

from modeling.errors import NumericError, PurityError
from modeling.qboltz import coupling_operator, exact_phase_evolution
from modeling.witnesses import (
    bell_state,
    concurrence,
    concurrence_nested,
    concurrence_pure,
    hermitian_eigs,
    ket_to_dm,
    matrix_sqrt_psd,
    negativity,
    partial_trace,
    partial_transpose,
    plus_plus,
    product_state,
    purity,
    random_density_matrix,
    random_local_unitary,
    spin_flip,
    werner_state,
    witness_report,
)


def c128(values):
    return torch.tensor(values, dtype=torch.complex128)


def diag(*values):
    return torch.diag(torch.tensor(values, dtype=torch.float64)).to(torch.complex128)


@pytest.fixture
def random_states():
    generator = torch.Generator().manual_seed(2024)
    return [random_density_matrix(generator) for _ in range(1000)]


def single_qubit(theta, phi):
    return c128([math.cos(theta / 2), complex(math.cos(phi), math.sin(phi)) * math.sin(theta / 2)])


def test_hermitian_eigs_order():
    torch.testing.assert_close(hermitian_eigs(torch.eye(4, dtype=torch.complex128)), torch.ones(4, dtype=torch.float64))
    torch.testing.assert_close(hermitian_eigs(diag(3, 1, 2, 0)), torch.tensor([3.0, 2.0, 1.0, 0.0], dtype=torch.float64))


def test_hermitian_eigs_reconstruction(generator):
    a = torch.complex(torch.randn(4, 4, generator=generator, dtype=torch.float64), torch.randn(4, 4, generator=generator, dtype=torch.float64))
    m = a + a.conj().T
    values, vectors = hermitian_eigs(m, eigenvectors=True)
    torch.testing.assert_close(vectors @ torch.diag(values).to(torch.complex128) @ vectors.conj().T, m, rtol=0, atol=1e-10)
    assert torch.all(values[:-1] >= values[1:])


def test_hermitian_eigs_rejects_non_hermitian():
    with pytest.raises(NumericError):
        hermitian_eigs(c128([[0, 1], [0, 0]]))


def test_matrix_sqrt_psd():
    torch.testing.assert_close(matrix_sqrt_psd(torch.eye(4, dtype=torch.complex128)), torch.eye(4, dtype=torch.complex128))
    torch.testing.assert_close(matrix_sqrt_psd(diag(4, 1, 0, 9)), diag(2, 1, 0, 3), rtol=0, atol=1e-12)


def test_matrix_sqrt_squares_back(random_states):
    for rho in random_states[:50]:
        root = matrix_sqrt_psd(rho)
        torch.testing.assert_close(root @ root, rho, rtol=0, atol=1e-9)


def test_partial_trace():
    a = ket_to_dm(single_qubit(0.7, 0.2))
    b = ket_to_dm(single_qubit(2.1, -1.0))
    torch.testing.assert_close(partial_trace(product_state(a, b), "A"), a)
    torch.testing.assert_close(partial_trace(product_state(a, b), "B"), b)
    torch.testing.assert_close(partial_trace(bell_state(), "A"), torch.eye(2, dtype=torch.complex128) / 2)


def test_partial_trace_keeps_unit_trace(random_states):
    for rho in random_states[:100]:
        assert torch.trace(partial_trace(rho, "B")).real.item() == pytest.approx(1.0, abs=1e-12)


def test_concurrence_pure():
    assert concurrence_pure(product_state(single_qubit(0.4, 0.1), single_qubit(1.3, 2.0))) == pytest.approx(0.0, abs=1e-7)
    assert concurrence_pure(bell_state()) == pytest.approx(1.0, abs=1e-12)
    rho = exact_phase_evolution(plus_plus(), coupling_operator("zz"), math.pi / 8)
    assert concurrence_pure(rho) == pytest.approx(math.sqrt(2) / 2, abs=1e-9)


def test_concurrence_pure_rejects_mixed_state():
    with pytest.raises(PurityError, match="concurrence"):
        concurrence_pure(werner_state(0.5))


def test_spin_flip():
    identity = torch.eye(4, dtype=torch.complex128) / 4
    torch.testing.assert_close(spin_flip(identity), identity)
    torch.testing.assert_close(spin_flip(bell_state()), bell_state())


def test_spin_flip_involution(random_states):
    for rho in random_states[:100]:
        torch.testing.assert_close(spin_flip(spin_flip(rho)), rho, rtol=0, atol=1e-12)


def test_concurrence_reference_states():
    assert concurrence(bell_state()) == pytest.approx(1.0, abs=1e-9)
    assert negativity(bell_state()) == pytest.approx(0.5, abs=1e-9)
    for kind in ("phi-", "psi+", "psi-"):
        assert concurrence(bell_state(kind)) == pytest.approx(1.0, abs=1e-9)
    generator = torch.Generator().manual_seed(5)
    for _ in range(20):
        a = random_density_matrix(generator, dim=2)
        b = random_density_matrix(generator, dim=2)
        rho = product_state(a, b)
        assert concurrence(rho) <= 1e-9
        assert negativity(rho) <= 1e-9


@pytest.mark.parametrize("k", range(11))
def test_werner_family(k):
    p = k / 10
    rho = werner_state(p)
    assert concurrence(rho) == pytest.approx(max(0.0, (3 * p - 1) / 2), abs=1e-6)
    assert negativity(rho) == pytest.approx(max(0.0, (3 * p - 1) / 4), abs=1e-6)


def test_werner_threshold():
    assert concurrence(werner_state(1 / 3)) == pytest.approx(0.0, abs=1e-9)
    assert concurrence(werner_state(0.34)) > 0
    assert concurrence(werner_state(0.5)) == pytest.approx(0.25, abs=1e-6)
    assert negativity(werner_state(0.5)) == pytest.approx(0.125, abs=1e-6)


def test_partial_transpose():
    assert hermitian_eigs(partial_transpose(bell_state(), "B"))[-1].item() == pytest.approx(-0.5, abs=1e-12)
    rho = product_state(single_qubit(0.3, 0.9), single_qubit(2.5, -0.4))
    assert hermitian_eigs(partial_transpose(rho, "A"))[-1].item() >= -1e-12


def test_partial_transpose_twice(random_states):
    for rho in random_states[:100]:
        pt = partial_transpose(rho, "B")
        assert torch.trace(pt).real.item() == pytest.approx(1.0, abs=1e-12)
        torch.testing.assert_close(partial_transpose(pt, "B"), rho)


def test_concurrence_routes_agree(random_states):
    for rho in random_states:
        assert concurrence(rho) == pytest.approx(concurrence_nested(rho), abs=1e-8)


def test_pure_state_routes_agree(generator):
    for _ in range(50):
        rho = random_density_matrix(generator, rank=1)
        assert concurrence_pure(rho) == pytest.approx(concurrence(rho), abs=1e-7)


def test_ppt_equivalence(random_states):
    disagreements = [rho for rho in random_states if (concurrence(rho) > 1e-8) != (negativity(rho) > 1e-8)]
    assert disagreements == []


def test_ppt_equivalence_on_werner_sweep():
    for k in range(101):
        rho = werner_state(k / 100)
        C, N = concurrence(rho), negativity(rho)
        assert (C > 1e-8) == (N > 1e-8)
        assert N <= C + 1e-8


def test_local_unitary_invariance(random_states, generator):
    for rho in random_states[:100]:
        u = random_local_unitary(generator)
        rotated = u @ rho @ u.conj().T
        assert concurrence(rotated) == pytest.approx(concurrence(rho), abs=1e-9)
        assert negativity(rotated) == pytest.approx(negativity(rho), abs=1e-9)


def test_witness_report(random_states):
    report = witness_report(bell_state(), t=0.5)
    assert report.t == 0.5
    assert report.concurrence == pytest.approx(1.0, abs=1e-9)
    assert report.purity == pytest.approx(1.0)
    assert report.pt_min_eigenvalue == pytest.approx(-0.5, abs=1e-12)
    assert len(report.to_row()) == 9
    for rho in random_states[:100]:
        report = witness_report(rho)
        assert 0.0 <= report.concurrence <= 1.0
        assert 0.0 <= report.negativity <= 0.5
        assert 0.25 - 1e-12 <= report.purity <= 1.0 + 1e-12
        assert list(report.wootters_lambdas) == sorted(report.wootters_lambdas, reverse=True)
        assert min(report.wootters_lambdas) >= 0.0
        assert report.purity == pytest.approx(purity(rho))
