import logging
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Tuple

import numpy as np

from src.core.exceptions import DomainError, EigSolverFailure, NumericalError
from src.core.hilbert import build_jz
from src.core.types import (
    ComplexArray,
    DensityMatrix,
    FloatArray,
    HilbertSpaceSpec,
    StateVector,
)

logger = logging.getLogger(__name__)

# Eigenvalues of rho in [-CLAMP_TOL, 0) are rounding noise; below
# -ABORT_TOL the reduced state is broken.
CLAMP_TOL = 1e-10
ABORT_TOL = 1e-8
ERGOTROPY_FLOOR = -1e-9


@dataclass(frozen=True, eq=False)
class BatteryHamiltonian:
    """
    Hermitian battery Hamiltonian with ascending levels and the energy scale
    used for normalisation (N * omega0 for the Dicke battery).
    """

    matrix: ComplexArray
    scale: float = 1.0

    def __post_init__(self) -> None:
        m = np.array(self.matrix, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DomainError(f"battery Hamiltonian must be square {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def dicke(cls, n_qubits: int, omega0: float = 1.0) -> "BatteryHamiltonian":
        spec = HilbertSpaceSpec(n_qubits, n_fock=1)
        return cls(omega0 * build_jz(spec).matrix, scale=n_qubits * omega0)

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[0])

    @cached_property
    def levels(self) -> FloatArray:
        return np.sort(np.linalg.eigvalsh(self.matrix))

    def shifted(self, offset: float) -> "BatteryHamiltonian":
        return replace(
            self, matrix=self.matrix + offset * np.eye(self.dim)
        )


def reduce_amplitudes(
    amplitudes: ComplexArray, spec: HilbertSpaceSpec
) -> ComplexArray:
    """
    Partial trace over the cavity for one state (dim,) or a batch of states
    stacked as columns (dim, T). Returns (spin_dim, spin_dim) or
    (T, spin_dim, spin_dim).
    """
    if amplitudes.shape[0] != spec.total_dim:
        raise DomainError(
            f"state has dim {amplitudes.shape[0]}, "
            f"expected {spec.total_dim}"
        )
    if amplitudes.ndim == 1:
        psi = amplitudes.reshape(spec.spin_dim, spec.n_fock)
        return psi @ psi.conj().T
    psi = amplitudes.reshape(spec.spin_dim, spec.n_fock, -1)
    return np.einsum("ant,bnt->tab", psi, psi.conj())


def partial_trace_field(
    psi: StateVector, spec: HilbertSpaceSpec
) -> DensityMatrix:
    return DensityMatrix(reduce_amplitudes(psi.amplitudes, spec))


def _populations(rho: ComplexArray) -> FloatArray:
    """Clamped, descending eigenvalues of (a batch of) density matrices."""
    herm = 0.5 * (rho + np.swapaxes(rho.conj(), -1, -2))
    try:
        r = np.linalg.eigvalsh(herm)
    except np.linalg.LinAlgError as e:
        raise EigSolverFailure(f"density-matrix eigensolver: {e}") from e
    if np.any(r < -ABORT_TOL):
        raise NumericalError(
            f"density matrix eigenvalue {float(np.min(r)):.3e} < "
            f"-{ABORT_TOL:g}"
        )
    if np.any(r < -CLAMP_TOL):
        logger.warning(
            f"Clamping density matrix eigenvalue {float(np.min(r)):.3e}"
        )
    r = np.clip(r, 0.0, None)
    r = r / np.sum(r, axis=-1, keepdims=True)
    return np.flip(r, axis=-1)


def _energies(rho: ComplexArray, hb: BatteryHamiltonian) -> FloatArray:
    return np.real(np.einsum("...ij,ji->...", rho, hb.matrix))


def _ergotropy_values(
    rho: ComplexArray, hb: BatteryHamiltonian
) -> FloatArray:
    if rho.shape[-1] != hb.dim:
        raise DomainError(
            f"density matrix dim {rho.shape[-1]} != Hamiltonian dim {hb.dim}"
        )
    passive = _populations(rho) @ hb.levels
    w = _energies(rho, hb) - passive
    if np.any(w < ERGOTROPY_FLOOR):
        raise NumericalError(f"negative ergotropy {float(np.min(w)):.3e}")
    return np.clip(w, 0.0, None)


def passive_energy(rho: DensityMatrix, hb: BatteryHamiltonian) -> float:
    """sum_k r_k eps_k with r descending and eps ascending."""
    return float(_populations(rho.matrix) @ hb.levels)


def ergotropy(rho: DensityMatrix, hb: BatteryHamiltonian) -> float:
    return float(_ergotropy_values(rho.matrix, hb))


def stored_energy(rho: DensityMatrix, hb: BatteryHamiltonian) -> float:
    """Energy above the battery ground state, Tr[rho H_B] - eps_min."""
    return float(_energies(rho.matrix, hb)) - float(hb.levels[0])


def normalized_ergotropy(
    psi: StateVector, spec: HilbertSpaceSpec, hb: BatteryHamiltonian
) -> float:
    w = ergotropy(partial_trace_field(psi, spec), hb) / hb.scale
    return min(w, 1.0)


def normalized_series(
    amplitudes: ComplexArray, spec: HilbertSpaceSpec, hb: BatteryHamiltonian
) -> Tuple[FloatArray, FloatArray]:
    """
    Normalised ergotropy and normalised stored energy for states stacked as
    columns of `amplitudes` (dim, T).
    """
    rho = reduce_amplitudes(amplitudes, spec)
    eps = np.clip(_ergotropy_values(rho, hb) / hb.scale, 0.0, 1.0)
    energy = (_energies(rho, hb) - hb.levels[0]) / hb.scale
    return eps, energy
