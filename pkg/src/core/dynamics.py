import logging
import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from src.core.ergotropy import BatteryHamiltonian, normalized_series
from src.core.exceptions import (
    DomainError,
    EigSolverFailure,
    NumericalError,
)
from src.core.hilbert import (
    FOCK_TAIL_TOL,
    build_boson_ops,
    build_jx,
    build_jz,
    embed_field,
    embed_spin,
    fock_tail_weight,
    initial_state,
    required_fock,
    tensor,
)
from src.core.types import (
    ComplexArray,
    DickeParams,
    FloatArray,
    HilbertSpaceSpec,
    Operator,
    StateVector,
    TimeGrid,
    Trajectory,
)

logger = logging.getLogger(__name__)

UNITARY_TOL = 1e-10
RECONSTRUCTION_TOL = 1e-9


def build_hamiltonian(params: DickeParams) -> Operator:
    """
    H_D = w0 Jz + wc a^dag a + (2 lambda / sqrt(N)) (a + a^dag) Jx
    on the spin-major joint space.
    """
    spec = params.space
    a, a_dag, number = build_boson_ops(spec)
    field_quadrature = Operator(a.matrix + a_dag.matrix, hermitian=True)
    g = 2 * params.coupling / np.sqrt(params.n_qubits)
    h = (
        params.omega0 * embed_spin(build_jz(spec), spec).matrix
        + params.omega_c * embed_field(number, spec).matrix
        + g * tensor(build_jx(spec), field_quadrature).matrix
    )
    return Operator(h, hermitian=True)


def parity_operator(spec: HilbertSpaceSpec) -> Operator:
    """exp(i pi (Jz + J + a^dag a)), diagonal with entries +-1."""
    m_index = np.repeat(np.arange(spec.spin_dim), spec.n_fock)
    n = np.tile(np.arange(spec.n_fock), spec.spin_dim)
    return Operator(np.diag((-1.0) ** (m_index + n)), hermitian=True)


@dataclass(frozen=True, eq=False)
class SpectralPropagator:
    """e^{-iHt}|psi0> through the eigenbasis of a time-independent H."""

    eigenvalues: FloatArray
    eigenvectors: ComplexArray
    initial_coeffs: ComplexArray

    def __post_init__(self) -> None:
        for name in ("eigenvalues", "eigenvectors", "initial_coeffs"):
            getattr(self, name).setflags(write=False)

    @property
    def dim(self) -> int:
        return int(self.eigenvalues.shape[0])

    @property
    def energy(self) -> float:
        weights = np.abs(self.initial_coeffs) ** 2
        return float(np.sum(weights * self.eigenvalues))

    def amplitudes_at(self, times: FloatArray) -> ComplexArray:
        """Evolved states stacked as columns, shape (dim, len(times))."""
        phases = np.exp(-1j * np.outer(self.eigenvalues, times))
        return self.eigenvectors @ (self.initial_coeffs[:, None] * phases)

    def evolve(self, t: float) -> StateVector:
        if t < 0:
            raise DomainError(f"evolution time must be >= 0, got {t}")
        return StateVector(self.amplitudes_at(np.array([t]))[:, 0])

    def evolve_from(self, psi: StateVector, t: float) -> StateVector:
        if t < 0:
            raise DomainError(f"evolution time must be >= 0, got {t}")
        coeffs = self.eigenvectors.conj().T @ psi.amplitudes
        return StateVector(
            self.eigenvectors
            @ (coeffs * np.exp(-1j * self.eigenvalues * t))
        )


def diagonalize(h: Operator, psi0: StateVector) -> SpectralPropagator:
    if psi0.dim != h.dim:
        raise DomainError(f"state dim {psi0.dim} != operator dim {h.dim}")
    try:
        energies, vecs = scipy.linalg.eigh(h.matrix)
    except np.linalg.LinAlgError as e:
        raise EigSolverFailure(f"Hamiltonian eigensolver: {e}") from e

    unitary_err = np.max(np.abs(vecs.conj().T @ vecs - np.eye(h.dim)))
    if unitary_err > UNITARY_TOL:
        raise NumericalError(f"eigenvectors not unitary ({unitary_err:.2e})")
    scale = max(float(np.max(np.abs(h.matrix))), 1e-300)
    recon = vecs @ np.diag(energies) @ vecs.conj().T
    recon_err = float(np.max(np.abs(recon - h.matrix)))
    if recon_err > RECONSTRUCTION_TOL * scale:
        raise NumericalError(
            f"spectral reconstruction error {recon_err:.2e}"
        )

    return SpectralPropagator(
        eigenvalues=np.asarray(energies, dtype=np.float64),
        eigenvectors=np.asarray(vecs, dtype=np.complex128),
        initial_coeffs=vecs.conj().T @ psi0.amplitudes,
    )


def effective_params(
    params: DickeParams,
    auto_fock: bool = True,
    tail_tol: float = FOCK_TAIL_TOL,
) -> DickeParams:
    """Grows n_fock when the coherent-state tail exceeds tail_tol."""
    tail = fock_tail_weight(params.n_bar, params.n_fock)
    if not auto_fock or tail <= tail_tol:
        return params
    n_fock = required_fock(params.n_bar, tail_tol)
    logger.warning(
        f"n_fock={params.n_fock} leaves tail {tail:.2e} for "
        f"n_bar={params.n_bar:g}; using n_fock={n_fock}"
    )
    return params.with_fock(n_fock)


def compute_trajectory(
    params: DickeParams,
    grid: TimeGrid,
    auto_fock: bool = True,
    tail_tol: float = FOCK_TAIL_TOL,
) -> Trajectory:
    """
    Evolves |J,-J> ⊗ |alpha> over the grid and records the normalised
    ergotropy of the reduced battery state at every grid time.
    """
    start = time.perf_counter()
    params = effective_params(params, auto_fock, tail_tol)
    spec = params.space
    h = build_hamiltonian(params)
    psi0 = initial_state(spec, params.n_bar)
    prop = diagonalize(h, psi0)

    amps = prop.amplitudes_at(grid.times)
    hb = BatteryHamiltonian.dicke(params.n_qubits, params.omega0)
    eps, energy = normalized_series(amps, spec, hb)

    # Conservation diagnostics evaluated directly on the evolved states.
    weights = np.abs(amps) ** 2
    norm_drift = float(np.max(np.abs(np.sqrt(weights.sum(axis=0)) - 1.0)))
    h_expect = np.real(np.sum(amps.conj() * (h.matrix @ amps), axis=0))
    e_scale = max(abs(float(h_expect[0])), params.omega0)
    energy_drift = float(np.max(np.abs(h_expect - h_expect[0]))) / e_scale
    parity = np.real(np.diag(parity_operator(spec).matrix)) @ weights
    parity_drift = float(np.max(np.abs(parity - parity[0])))

    logger.debug(
        f"trajectory N={params.n_qubits} lambda={params.coupling:g} "
        f"n_bar={params.n_bar:g} dim={spec.total_dim} "
        f"eps_max={float(np.max(eps)):.4f} "
        f"in {time.perf_counter() - start:.2f}s"
    )
    return Trajectory(
        params=params,
        grid=grid,
        eps=eps,
        energy=energy,
        norm_drift=norm_drift,
        energy_drift=energy_drift,
        parity_drift=parity_drift,
        fock_tail=fock_tail_weight(params.n_bar, params.n_fock),
        propagator=prop,
    )
