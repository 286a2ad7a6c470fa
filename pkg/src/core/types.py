from dataclasses import dataclass, field, replace
from typing import Optional, Protocol

import numpy as np
import numpy.typing as npt

from src.core.exceptions import ConfigError, DomainError, NumericalError

ComplexArray = npt.NDArray[np.complex128]
FloatArray = npt.NDArray[np.float64]

# Constants
DEFAULT_N_FOCK = 40
DEFAULT_T_MAX = 45.0
DEFAULT_N_POINTS = 2000
HERMITIAN_TOL = 1e-12
NORM_TOL = 1e-10


def _frozen(values: npt.ArrayLike, dtype: type) -> npt.NDArray[np.generic]:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class HilbertSpaceSpec:
    """
    Spin (J = N/2 Dicke sector) ⊗ truncated Fock space.
    Basis ordering is spin-major: index = m_index * n_fock + n, with
    m_index = 0 for m = -J and n = 0 for the vacuum.
    """

    n_qubits: int
    n_fock: int = DEFAULT_N_FOCK

    def __post_init__(self) -> None:
        if int(self.n_qubits) != self.n_qubits or self.n_qubits < 2:
            raise ConfigError(f"n_qubits must be >= 2, got {self.n_qubits}")
        if int(self.n_fock) != self.n_fock or self.n_fock < 1:
            raise ConfigError(f"n_fock must be >= 1, got {self.n_fock}")

    @property
    def spin_j(self) -> float:
        return self.n_qubits / 2

    @property
    def spin_dim(self) -> int:
        return self.n_qubits + 1

    @property
    def total_dim(self) -> int:
        return self.spin_dim * self.n_fock

    def index(self, m_index: int, n: int) -> int:
        return m_index * self.n_fock + n


@dataclass(frozen=True, eq=False)
class Operator:
    matrix: ComplexArray
    hermitian: bool = False

    def __post_init__(self) -> None:
        m = _frozen(self.matrix, np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DomainError(f"operator must be square, got {m.shape}")
        if self.hermitian and m.size:
            asym = float(np.max(np.abs(m - m.conj().T)))
            if asym > HERMITIAN_TOL * max(1.0, float(np.max(np.abs(m)))):
                raise NumericalError(
                    f"operator tagged Hermitian deviates by {asym:.2e}"
                )
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[0])

    def dag(self) -> "Operator":
        return Operator(self.matrix.conj().T, hermitian=self.hermitian)

    def __matmul__(self, other: "Operator") -> "Operator":
        if self.dim != other.dim:
            raise DomainError(f"dimension mismatch {self.dim} vs {other.dim}")
        return Operator(self.matrix @ other.matrix)

    def commutator(self, other: "Operator") -> "Operator":
        return Operator((self @ other).matrix - (other @ self).matrix)


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: ComplexArray

    def __post_init__(self) -> None:
        amps = _frozen(self.amplitudes, np.complex128)
        if amps.ndim != 1:
            raise DomainError("state amplitudes must be a vector")
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > NORM_TOL:
            raise NumericalError(f"state norm {norm:.12f} is not unit")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return int(self.amplitudes.shape[0])

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def expect(self, op: Operator) -> complex:
        if op.dim != self.dim:
            raise DomainError(f"dimension mismatch {op.dim} vs {self.dim}")
        return complex(np.vdot(self.amplitudes, op.matrix @ self.amplitudes))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    matrix: ComplexArray

    def __post_init__(self) -> None:
        m = _frozen(self.matrix, np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DomainError(f"density matrix must be square, got {m.shape}")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))

    @property
    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))


@dataclass(frozen=True)
class DickeParams:
    n_qubits: int
    coupling: float  # lambda, units of omega0
    n_bar: float
    omega0: float = 1.0
    omega_c: float = 1.0
    n_fock: int = DEFAULT_N_FOCK

    def __post_init__(self) -> None:
        # Structural checks live on the space spec.
        HilbertSpaceSpec(self.n_qubits, self.n_fock)
        if not self.coupling > 0:
            raise DomainError(f"lambda must be > 0, got {self.coupling}")
        if not self.omega0 > 0 or not self.omega_c > 0:
            raise DomainError("omega0 and omega_c must be > 0")
        if not self.n_bar >= 0:
            raise DomainError(f"n_bar must be >= 0, got {self.n_bar}")

    @property
    def space(self) -> HilbertSpaceSpec:
        return HilbertSpaceSpec(self.n_qubits, self.n_fock)

    def with_fock(self, n_fock: int) -> "DickeParams":
        return replace(self, n_fock=n_fock)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid on the inclusive interval [0, t_max] (units 1/omega0)."""

    t_max: float = DEFAULT_T_MAX
    n_points: int = DEFAULT_N_POINTS

    def __post_init__(self) -> None:
        if not self.t_max > 0:
            raise ConfigError(f"t_max must be > 0, got {self.t_max}")
        if int(self.n_points) != self.n_points or self.n_points < 2:
            raise ConfigError(f"n_points must be >= 2, got {self.n_points}")

    @property
    def times(self) -> FloatArray:
        return np.linspace(0.0, self.t_max, self.n_points)

    @property
    def dt(self) -> float:
        return self.t_max / (self.n_points - 1)

    def floor_time(self, t: float) -> float:
        """Last grid time not after t."""
        if not 0 <= t <= self.t_max:
            raise DomainError(f"t={t} outside grid [0, {self.t_max}]")
        i = int(np.floor(t / self.dt + 1e-9))
        return float(self.times[min(i, self.n_points - 1)])


class Propagator(Protocol):
    def evolve(self, t: float) -> StateVector: ...


@dataclass(frozen=True, eq=False)
class Trajectory:
    params: DickeParams
    grid: TimeGrid
    eps: FloatArray
    energy: FloatArray
    norm_drift: float = 0.0
    energy_drift: float = 0.0
    parity_drift: float = 0.0
    fock_tail: float = 0.0
    propagator: Optional[Propagator] = field(
        default=None, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        object.__setattr__(self, "eps", _frozen(self.eps, np.float64))
        object.__setattr__(self, "energy", _frozen(self.energy, np.float64))
        if self.eps.shape != (self.grid.n_points,):
            raise DomainError("eps samples do not match the time grid")

    @property
    def times(self) -> FloatArray:
        return self.grid.times

    @property
    def eps_max(self) -> float:
        return float(np.max(self.eps))

    @property
    def t_at_max(self) -> float:
        return float(self.times[int(np.argmax(self.eps))])

    def without_propagator(self) -> "Trajectory":
        return replace(self, propagator=None)


@dataclass(frozen=True)
class CollapsePoint:
    n_qubits: int
    coupling: float
    n_bar: float
    eps_target: float
    tau_star: float  # first grid sample with eps >= eps_target
    tau_qsl: float
    gamma_n: float
    x: float
    ratio: float
    # Crossing refined on the exact dynamics, when a propagator was kept.
    tau_star_exact: Optional[float] = None

    def violates(self, slack: float = 1e-9) -> bool:
        return self.x < np.sqrt(self.eps_target) - slack
