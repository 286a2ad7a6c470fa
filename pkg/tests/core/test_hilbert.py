import numpy as np
import pytest

from src.core.exceptions import ConfigError, DomainError, TruncationError
from src.core.hilbert import (
    FOCK_TAIL_TOL,
    build_boson_ops,
    build_jplus,
    build_jx,
    build_jy,
    build_jz,
    coherent_state,
    embed_field,
    embed_spin,
    fock_tail_weight,
    initial_state,
    required_fock,
)
from src.core.types import HilbertSpaceSpec, Operator

ALGEBRA_TOL = 1e-12
LARGE_N_BAR = 20.0
DEFAULT_CUTOFF = 40


@pytest.mark.parametrize("n_qubits", [2, 3, 4, 5])
def test_spin_operators_satisfy_angular_momentum_algebra(
    n_qubits: int,
) -> None:
    spec = HilbertSpaceSpec(n_qubits, n_fock=1)
    jx, jy, jz = build_jx(spec), build_jy(spec), build_jz(spec)

    comm = jx.commutator(jy).matrix
    assert np.allclose(comm, 1j * jz.matrix, atol=ALGEBRA_TOL)

    j = spec.spin_j
    casimir = (jx @ jx).matrix + (jy @ jy).matrix + (jz @ jz).matrix
    assert np.allclose(casimir, j * (j + 1) * np.eye(spec.spin_dim))


def test_jz_is_diagonal_from_minus_j_to_plus_j() -> None:
    spec = HilbertSpaceSpec(4, n_fock=1)
    diag = np.real(np.diag(build_jz(spec).matrix))
    assert diag.tolist() == [-2.0, -1.0, 0.0, 1.0, 2.0]


def test_jplus_raises_the_ground_state() -> None:
    spec = HilbertSpaceSpec(2, n_fock=1)
    ground = np.array([1.0, 0.0, 0.0])
    raised = build_jplus(spec).matrix @ ground
    # sqrt(J(J+1) - m(m+1)) with J=1, m=-1.
    assert np.allclose(raised, [0.0, np.sqrt(2.0), 0.0])


def test_truncated_boson_commutator_is_identity_below_the_cutoff(
    small_spec: HilbertSpaceSpec,
) -> None:
    a, a_dag, number = build_boson_ops(small_spec)
    comm = a.commutator(a_dag).matrix
    expected = np.eye(small_spec.n_fock)
    expected[-1, -1] = -(small_spec.n_fock - 1)
    assert np.allclose(comm, expected)
    assert np.allclose((a_dag @ a).matrix, number.matrix)


def test_hilbert_space_spec_rejects_invalid_sizes() -> None:
    with pytest.raises(ConfigError):
        HilbertSpaceSpec(n_qubits=1)
    with pytest.raises(ConfigError):
        HilbertSpaceSpec(n_qubits=2, n_fock=0)


def test_hilbert_space_spec_indexes_spin_major(
    small_spec: HilbertSpaceSpec,
) -> None:
    assert small_spec.spin_dim == 3
    assert small_spec.total_dim == 3 * 8
    assert small_spec.index(1, 2) == 8 + 2


def test_coherent_state_is_normalised_with_poisson_mean() -> None:
    n_bar = 4.0
    psi = coherent_state(n_bar, DEFAULT_CUTOFF)
    number = np.arange(DEFAULT_CUTOFF)
    assert psi.norm == pytest.approx(1.0, abs=1e-12)
    assert np.sum(number * np.abs(psi.amplitudes) ** 2) == pytest.approx(
        n_bar, abs=1e-6
    )
    assert np.all(psi.amplitudes.real > 0)


def test_coherent_state_with_zero_photons_is_the_vacuum() -> None:
    psi = coherent_state(0.0, 5)
    assert psi.amplitudes.tolist() == [1, 0, 0, 0, 0]


def test_coherent_state_rejects_insufficient_cutoff() -> None:
    assert fock_tail_weight(LARGE_N_BAR, DEFAULT_CUTOFF) > FOCK_TAIL_TOL
    with pytest.raises(TruncationError) as info:
        coherent_state(LARGE_N_BAR, DEFAULT_CUTOFF)
    assert info.value.slug == "truncation"
    assert info.value.n_fock == DEFAULT_CUTOFF


def test_coherent_state_rejects_negative_mean() -> None:
    with pytest.raises(DomainError):
        coherent_state(-1.0, 10)


def test_required_fock_is_the_smallest_adequate_cutoff() -> None:
    n_fock = required_fock(LARGE_N_BAR)
    assert n_fock > DEFAULT_CUTOFF
    assert fock_tail_weight(LARGE_N_BAR, n_fock) <= FOCK_TAIL_TOL
    assert fock_tail_weight(LARGE_N_BAR, n_fock - 1) > FOCK_TAIL_TOL
    # A cutoff of 40 is already enough at the low end of the n_bar range.
    assert required_fock(1.0) < DEFAULT_CUTOFF


def test_initial_state_is_battery_ground_state_times_coherent_field() -> None:
    spec = HilbertSpaceSpec(n_qubits=2, n_fock=20)
    psi = initial_state(spec, 1.0)
    jz = embed_spin(build_jz(spec), spec)
    _, _, number = build_boson_ops(spec)
    n_op = embed_field(number, spec)
    assert psi.expect(jz).real == pytest.approx(-1.0)
    assert psi.expect(n_op).real == pytest.approx(1.0, abs=1e-6)


def test_embedding_rejects_operators_of_the_wrong_size(
    small_spec: HilbertSpaceSpec,
) -> None:
    with pytest.raises(DomainError):
        embed_spin(Operator(np.eye(small_spec.n_fock)), small_spec)
    with pytest.raises(DomainError):
        embed_field(Operator(np.eye(small_spec.spin_dim)), small_spec)


def test_initial_state_rejects_a_cutoff_too_short_for_the_field(
    small_spec: HilbertSpaceSpec,
) -> None:
    assert fock_tail_weight(1.0, small_spec.n_fock) > FOCK_TAIL_TOL
    with pytest.raises(TruncationError):
        initial_state(small_spec, 1.0)


@pytest.mark.parametrize("n_qubits", range(2, 9))
def test_jx_squared_in_the_ground_state_is_n_over_four(
    n_qubits: int,
) -> None:
    spec = HilbertSpaceSpec(n_qubits, n_fock=1)
    jx = build_jx(spec)
    ground = np.zeros(spec.spin_dim)
    ground[0] = 1.0
    value = ground @ (jx @ jx).matrix @ ground
    assert value.real == pytest.approx(n_qubits / 4, abs=ALGEBRA_TOL)


def test_coherent_state_amplitudes_at_one_photon() -> None:
    psi = coherent_state(1.0, 30)
    c = psi.amplitudes.real
    assert c[0] == pytest.approx(np.exp(-0.5), abs=1e-12)
    assert c[1] == pytest.approx(np.exp(-0.5), abs=1e-12)


@pytest.mark.parametrize("n_bar", [1.0, 5.0, 10.0])
def test_field_quadrature_of_coherent_state_is_two_sqrt_n_bar(
    n_bar: float,
) -> None:
    spec = HilbertSpaceSpec(2, n_fock=DEFAULT_CUTOFF)
    a, a_dag, _ = build_boson_ops(spec)
    quadrature = Operator(a.matrix + a_dag.matrix, hermitian=True)
    psi = coherent_state(n_bar, DEFAULT_CUTOFF)
    assert psi.expect(quadrature).real == pytest.approx(
        2 * np.sqrt(n_bar), abs=1e-6
    )
