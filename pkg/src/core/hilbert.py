"""
Collective-spin and truncated-boson operator algebra for the Dicke battery.

All joint-space objects use the spin-major ordering documented on
HilbertSpaceSpec: kron(spin, field).
"""

import logging
from typing import Tuple

import numpy as np
from scipy.special import gammaln

from src.core.exceptions import DomainError, TruncationError
from src.core.types import (
    FloatArray,
    HilbertSpaceSpec,
    Operator,
    StateVector,
)

logger = logging.getLogger(__name__)

FOCK_TAIL_TOL = 1e-8
MAX_AUTO_FOCK = 400


def _m_values(spec: HilbertSpaceSpec) -> FloatArray:
    return np.arange(spec.spin_dim, dtype=np.float64) - spec.spin_j


def build_jz(spec: HilbertSpaceSpec) -> Operator:
    return Operator(np.diag(_m_values(spec)), hermitian=True)


def build_jplus(spec: HilbertSpaceSpec) -> Operator:
    """<J,m+1|J+|J,m> = sqrt(J(J+1) - m(m+1)) on the first subdiagonal."""
    j = spec.spin_j
    m = _m_values(spec)[:-1]
    # J+ raises m, i.e. maps column index k to row index k+1.
    return Operator(np.diag(np.sqrt(j * (j + 1) - m * (m + 1)), k=-1))


def build_jx(spec: HilbertSpaceSpec) -> Operator:
    jp = build_jplus(spec).matrix
    return Operator(0.5 * (jp + jp.T), hermitian=True)


def build_jy(spec: HilbertSpaceSpec) -> Operator:
    jp = build_jplus(spec).matrix
    return Operator((jp - jp.T) / 2j, hermitian=True)


def build_boson_ops(
    spec: HilbertSpaceSpec,
) -> Tuple[Operator, Operator, Operator]:
    """Returns (a, a_dag, number) truncated to spec.n_fock levels."""
    a = np.diag(np.sqrt(np.arange(1, spec.n_fock, dtype=np.float64)), k=1)
    number = np.diag(np.arange(spec.n_fock, dtype=np.float64))
    return Operator(a), Operator(a.T), Operator(number, hermitian=True)


def _poisson_amplitudes(n_bar: float, n_fock: int) -> FloatArray:
    n = np.arange(n_fock, dtype=np.float64)
    if n_bar == 0:
        amps = np.zeros(n_fock)
        amps[0] = 1.0
        return amps
    log_c = -n_bar / 2 + n * 0.5 * np.log(n_bar) - 0.5 * gammaln(n + 1)
    return np.exp(log_c)


def fock_tail_weight(n_bar: float, n_fock: int) -> float:
    """Coherent-state probability lost above the cutoff, 1 - sum |c_n|^2."""
    if n_bar < 0:
        raise DomainError(f"n_bar must be >= 0, got {n_bar}")
    kept = float(np.sum(_poisson_amplitudes(n_bar, n_fock) ** 2))
    return max(0.0, 1.0 - kept)


def required_fock(n_bar: float, tol: float = FOCK_TAIL_TOL) -> int:
    """Smallest cutoff whose coherent-state tail weight is <= tol."""
    n_fock = max(1, int(np.ceil(n_bar)))
    while fock_tail_weight(n_bar, n_fock) > tol:
        n_fock += 1
        if n_fock > MAX_AUTO_FOCK:
            raise TruncationError(
                n_bar, n_fock, fock_tail_weight(n_bar, n_fock)
            )
    return n_fock


def coherent_state(
    n_bar: float, n_fock: int, tol: float = FOCK_TAIL_TOL
) -> StateVector:
    """
    Truncated coherent state with real alpha = +sqrt(n_bar).
    Raises TruncationError when the discarded tail weight exceeds tol.
    """
    if n_bar < 0:
        raise DomainError(f"n_bar must be >= 0, got {n_bar}")
    amps = _poisson_amplitudes(n_bar, n_fock)
    tail = max(0.0, 1.0 - float(np.sum(amps**2)))
    if tail > tol:
        raise TruncationError(n_bar, n_fock, tail)
    return StateVector(amps / np.linalg.norm(amps))


def initial_state(spec: HilbertSpaceSpec, n_bar: float) -> StateVector:
    """|J,-J> (battery ground state) ⊗ |alpha>."""
    spin = np.zeros(spec.spin_dim)
    spin[0] = 1.0
    field = coherent_state(n_bar, spec.n_fock)
    return StateVector(np.kron(spin, field.amplitudes))


def identity(dim: int) -> Operator:
    return Operator(np.eye(dim), hermitian=True)


def tensor(a: Operator, b: Operator) -> Operator:
    return Operator(
        np.kron(a.matrix, b.matrix), hermitian=a.hermitian and b.hermitian
    )


def embed_spin(op: Operator, spec: HilbertSpaceSpec) -> Operator:
    if op.dim != spec.spin_dim:
        raise DomainError(
            f"spin operator has dim {op.dim}, expected {spec.spin_dim}"
        )
    return tensor(op, identity(spec.n_fock))


def embed_field(op: Operator, spec: HilbertSpaceSpec) -> Operator:
    if op.dim != spec.n_fock:
        raise DomainError(
            f"field operator has dim {op.dim}, expected {spec.n_fock}"
        )
    return tensor(identity(spec.spin_dim), op)
