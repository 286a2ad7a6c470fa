"""
Analytical speed-limit objects for the Dicke battery and first-passage
extraction from simulated trajectories.

Closed-form helpers accept scalars or numpy arrays for the time argument.
"""

from typing import Optional, Union

import numpy as np
import numpy.typing as npt
from scipy import optimize

from src.core.ergotropy import BatteryHamiltonian, normalized_ergotropy
from src.core.exceptions import DomainError, InvalidThreshold
from src.core.types import CollapsePoint, FloatArray, Trajectory

DEFAULT_T_PROBE = 0.1
REFINE_XTOL = 1e-12

FloatOrArray = Union[float, FloatArray]


def _scalar_or_array(values: FloatArray) -> FloatOrArray:
    return float(values) if values.ndim == 0 else values


def _check_rate_inputs(
    coupling: float, n_bar: float, n_qubits: int
) -> None:
    if not coupling > 0:
        raise DomainError(f"lambda must be > 0, got {coupling}")
    if not n_bar > 0:
        raise DomainError(f"n_bar must be > 0, got {n_bar}")
    if n_qubits < 1:
        raise DomainError(f"n_qubits must be positive, got {n_qubits}")


def _check_eps(eps: float) -> None:
    if not 0 < eps <= 1:
        raise DomainError(f"eps must lie in (0, 1], got {eps}")


def short_time_coefficient(n_qubits: int) -> float:
    """A = 4/N."""
    return 4.0 / n_qubits


def gamma_n(coupling: float, n_bar: float, n_qubits: int) -> float:
    """Charging-rate figure of merit 2 lambda sqrt(n_bar / N)."""
    _check_rate_inputs(coupling, n_bar, n_qubits)
    return float(2 * coupling * np.sqrt(n_bar / n_qubits))


def omega_n(coupling: float, n_bar: float, n_qubits: int) -> float:
    """Classical-field rotation frequency 4 lambda sqrt(n_bar) / sqrt(N)."""
    return 2 * gamma_n(coupling, n_bar, n_qubits)


def tau_qsl(
    eps: float, coupling: float, n_bar: float, n_qubits: int
) -> float:
    _check_eps(eps)
    _check_rate_inputs(coupling, n_bar, n_qubits)
    return float(np.sqrt(n_qubits * eps) / (2 * coupling * np.sqrt(n_bar)))


def min_coupling(
    eps: float, tau_target: float, n_bar: float, n_qubits: int
) -> float:
    """Smallest lambda for which tau_QSL(eps) <= tau_target."""
    _check_eps(eps)
    if not tau_target > 0:
        raise DomainError(f"tau_target must be > 0, got {tau_target}")
    if not n_bar > 0:
        raise DomainError(f"n_bar must be > 0, got {n_bar}")
    return float(
        np.sqrt(n_qubits * eps) / (2 * tau_target * np.sqrt(n_bar))
    )


def global_bound(
    t: npt.ArrayLike, coupling: float, n_bar: float, n_qubits: int
) -> FloatOrArray:
    """(4/N) lambda^2 n_bar t^2, not clipped at 1."""
    t_arr = np.asarray(t, dtype=np.float64)
    if np.any(t_arr < 0):
        raise DomainError("time must be >= 0")
    a_th = short_time_coefficient(n_qubits)
    bound = a_th * coupling**2 * n_bar * t_arr**2
    return _scalar_or_array(bound)


def classical_field_eps(
    t: npt.ArrayLike, coupling: float, n_bar: float, n_qubits: int
) -> FloatOrArray:
    """[1 - cos(Omega_N t)] / 2 , the c-number drive limit."""
    t_arr = np.asarray(t, dtype=np.float64)
    if np.any(t_arr < 0):
        raise DomainError("time must be >= 0")
    if n_bar == 0:
        return _scalar_or_array(np.zeros_like(t_arr))
    omega = omega_n(coupling, n_bar, n_qubits)
    return _scalar_or_array(0.5 * (1 - np.cos(omega * t_arr)))


def _refine_crossing(
    traj: Trajectory, eps_target: float, lo: float, hi: float
) -> float:
    """Root of eps(t) - eps_target on [lo, hi] from exact propagation."""
    if traj.propagator is None:
        raise DomainError("refining tau* needs the trajectory propagator")
    propagator = traj.propagator
    p = traj.params
    spec = p.space
    hb = BatteryHamiltonian.dicke(p.n_qubits, p.omega0)

    def excess(t: float) -> float:
        eps = normalized_ergotropy(propagator.evolve(t), spec, hb)
        return eps - eps_target

    if excess(lo) >= 0:
        return lo
    if excess(hi) <= 0:
        return hi
    return float(optimize.brentq(excess, lo, hi, xtol=REFINE_XTOL))


def first_passage(
    traj: Trajectory, eps_target: float, refine: bool = False
) -> Optional[float]:
    """
    inf{t : eps(t) >= eps_target} on the trajectory grid, i.e. the first
    sample at or above the target. With refine, the crossing inside the
    preceding grid step is solved for on the exact dynamics instead. None
    when the target is never reached on the grid.
    """
    if not 0 < eps_target <= 1:
        raise InvalidThreshold(
            f"eps_target must lie in (0, 1], got {eps_target}"
        )
    hits = np.flatnonzero(traj.eps >= eps_target)
    if hits.size == 0:
        return None
    i = int(hits[0])
    times = traj.times
    if i == 0 or not refine:
        return float(times[i])
    return _refine_crossing(
        traj, eps_target, float(times[i - 1]), float(times[i])
    )


def extract_short_time_coefficient(
    traj: Trajectory, t_probe: float = DEFAULT_T_PROBE
) -> float:
    """
    A_num = eps(t_probe) / (lambda^2 n_bar t_probe^2). Uses an exact
    propagation to t_probe when the trajectory carries its propagator, and
    grid interpolation otherwise.
    """
    if not 0 < t_probe <= traj.grid.t_max:
        raise DomainError(
            f"t_probe={t_probe} outside grid (0, {traj.grid.t_max}]"
        )
    params = traj.params
    if not params.n_bar > 0:
        raise DomainError("A_num is undefined for n_bar = 0")
    if traj.propagator is not None:
        hb = BatteryHamiltonian.dicke(params.n_qubits, params.omega0)
        eps = normalized_ergotropy(
            traj.propagator.evolve(t_probe), params.space, hb
        )
    else:
        eps = float(np.interp(t_probe, traj.times, traj.eps))
    return eps / (params.coupling**2 * params.n_bar * t_probe**2)


def make_collapse_point(
    traj: Trajectory, eps_target: float, refine: bool = True
) -> Optional[CollapsePoint]:
    """
    Collapse point for one target; X and the ratio use the grid tau*.
    The exact crossing is added when refine is set and the trajectory
    still carries its propagator.
    """
    tau_star = first_passage(traj, eps_target)
    if tau_star is None:
        return None
    tau_exact = None
    if refine and traj.propagator is not None:
        tau_exact = first_passage(traj, eps_target, refine=True)
    p = traj.params
    gamma = gamma_n(p.coupling, p.n_bar, p.n_qubits)
    x = gamma * tau_star
    return CollapsePoint(
        n_qubits=p.n_qubits,
        coupling=p.coupling,
        n_bar=p.n_bar,
        eps_target=eps_target,
        tau_star=tau_star,
        tau_qsl=tau_qsl(eps_target, p.coupling, p.n_bar, p.n_qubits),
        gamma_n=gamma,
        x=x,
        ratio=float(x / np.sqrt(eps_target)),
        tau_star_exact=tau_exact,
    )
