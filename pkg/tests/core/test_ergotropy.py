import numpy as np
import pytest

from src.core.ergotropy import (
    BatteryHamiltonian,
    ergotropy,
    normalized_ergotropy,
    normalized_series,
    partial_trace_field,
    passive_energy,
    reduce_amplitudes,
    stored_energy,
)
from src.core.exceptions import DomainError, NumericalError
from src.core.hilbert import coherent_state
from src.core.types import DensityMatrix, HilbertSpaceSpec, StateVector
from src.sweep.acceptance import brute_force_ergotropy

IDENTITY_TOL = 1e-10


def _spin_state(spec: HilbertSpaceSpec, m_index: int) -> np.ndarray:
    spin = np.zeros(spec.spin_dim)
    spin[m_index] = 1.0
    return spin


def _product(spec: HilbertSpaceSpec, spin: np.ndarray) -> StateVector:
    field = coherent_state(1.0, spec.n_fock, tol=1e-3)
    return StateVector(np.kron(spin, field.amplitudes))


def test_dicke_battery_hamiltonian_levels_and_scale() -> None:
    hb = BatteryHamiltonian.dicke(2, omega0=1.5)
    assert hb.levels.tolist() == pytest.approx([-1.5, 0.0, 1.5])
    assert hb.scale == pytest.approx(3.0)


def test_ground_state_has_no_ergotropy_and_excited_state_has_all(
    small_spec: HilbertSpaceSpec,
) -> None:
    hb = BatteryHamiltonian.dicke(small_spec.n_qubits)
    ground = _product(small_spec, _spin_state(small_spec, 0))
    excited = _product(small_spec, _spin_state(small_spec, 2))
    assert normalized_ergotropy(ground, small_spec, hb) == pytest.approx(
        0.0, abs=1e-12
    )
    assert normalized_ergotropy(excited, small_spec, hb) == pytest.approx(
        1.0
    )


def test_partial_trace_of_product_state_is_the_spin_projector(
    small_spec: HilbertSpaceSpec,
) -> None:
    spin = np.array([1.0, 1.0j, 0.0]) / np.sqrt(2)
    rho = partial_trace_field(_product(small_spec, spin), small_spec)
    assert np.allclose(rho.matrix, np.outer(spin, spin.conj()))
    assert rho.trace == pytest.approx(1.0)
    assert rho.purity == pytest.approx(1.0)


def test_batched_partial_trace_matches_single_states(
    small_spec: HilbertSpaceSpec,
) -> None:
    rng = np.random.default_rng(7)
    amps = rng.normal(size=(small_spec.total_dim, 4)) + 1j * rng.normal(
        size=(small_spec.total_dim, 4)
    )
    amps /= np.linalg.norm(amps, axis=0)
    batch = reduce_amplitudes(amps, small_spec)
    assert batch.shape == (4, 3, 3)
    for t in range(4):
        single = reduce_amplitudes(amps[:, t], small_spec)
        assert np.allclose(batch[t], single)


def test_reduce_amplitudes_rejects_wrong_dimension(
    small_spec: HilbertSpaceSpec,
) -> None:
    with pytest.raises(DomainError):
        reduce_amplitudes(np.ones(5), small_spec)


def test_passive_state_has_zero_ergotropy() -> None:
    hb = BatteryHamiltonian(np.diag([0.0, 1.0, 2.0]))
    rho = DensityMatrix(np.diag([0.6, 0.3, 0.1]))
    assert ergotropy(rho, hb) == pytest.approx(0.0, abs=1e-15)
    assert passive_energy(rho, hb) == pytest.approx(0.5)


def test_population_inversion_is_fully_extractable() -> None:
    hb = BatteryHamiltonian(np.diag([0.0, 1.0]))
    rho = DensityMatrix(np.diag([0.2, 0.8]))
    # Sorted pairing puts 0.8 on the ground level.
    assert ergotropy(rho, hb) == pytest.approx(0.8 - 0.2)


def test_pure_state_ergotropy_equals_stored_energy() -> None:
    rng = np.random.default_rng(3)
    h = rng.normal(size=(4, 4))
    hb = BatteryHamiltonian(h + h.T)
    psi = rng.normal(size=4) + 1j * rng.normal(size=4)
    psi /= np.linalg.norm(psi)
    rho = DensityMatrix(np.outer(psi, psi.conj()))
    assert ergotropy(rho, hb) == pytest.approx(
        stored_energy(rho, hb), abs=IDENTITY_TOL
    )


def test_ergotropy_is_invariant_under_energy_offsets() -> None:
    hb = BatteryHamiltonian(np.diag([-1.0, 0.0, 1.0]))
    rho = DensityMatrix(np.diag([0.1, 0.2, 0.7]))
    assert ergotropy(rho, hb.shifted(12.5)) == pytest.approx(
        ergotropy(rho, hb), abs=IDENTITY_TOL
    )


def test_sorted_pairing_matches_brute_force_on_random_inputs() -> None:
    rng = np.random.default_rng(11)
    for dim in (2, 3, 4, 5):
        g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        rho = g @ g.conj().T
        rho /= np.trace(rho).real
        h = rng.normal(size=(dim, dim))
        hb = BatteryHamiltonian(h + h.T)
        assert ergotropy(DensityMatrix(rho), hb) == pytest.approx(
            brute_force_ergotropy(rho, hb.matrix), abs=1e-12
        )


def test_significantly_negative_populations_are_rejected() -> None:
    hb = BatteryHamiltonian(np.diag([0.0, 1.0]))
    with pytest.raises(NumericalError):
        ergotropy(DensityMatrix(np.diag([1.1, -0.1])), hb)


def test_tiny_negative_populations_are_clamped() -> None:
    hb = BatteryHamiltonian(np.diag([0.0, 1.0]))
    rho = DensityMatrix(np.diag([1.0 + 1e-11, -1e-11]))
    assert ergotropy(rho, hb) == pytest.approx(0.0, abs=1e-10)


def test_dimension_mismatch_is_a_domain_error() -> None:
    hb = BatteryHamiltonian(np.diag([0.0, 1.0, 2.0]))
    with pytest.raises(DomainError):
        ergotropy(DensityMatrix(np.eye(2) / 2), hb)


def test_normalized_series_returns_ergotropy_and_energy_per_column(
    small_spec: HilbertSpaceSpec,
) -> None:
    hb = BatteryHamiltonian.dicke(small_spec.n_qubits)
    states = [
        _product(small_spec, _spin_state(small_spec, k)).amplitudes
        for k in range(3)
    ]
    eps, energy = normalized_series(
        np.stack(states, axis=1), small_spec, hb
    )
    assert eps.tolist() == pytest.approx([0.0, 0.5, 1.0], abs=1e-12)
    assert energy.tolist() == pytest.approx([0.0, 0.5, 1.0], abs=1e-12)
