"""
Reproduction data sets built on single trajectories: the short-time
coefficient table, the representative charging curves and the
classical-field comparison.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.core.dynamics import compute_trajectory
from src.core.exceptions import DomainError
from src.core.hilbert import FOCK_TAIL_TOL
from src.core.qsl_bounds import (
    DEFAULT_T_PROBE,
    classical_field_eps,
    extract_short_time_coefficient,
    gamma_n,
    global_bound,
    omega_n,
    short_time_coefficient,
)
from src.core.types import DEFAULT_N_FOCK, DickeParams, TimeGrid, Trajectory

logger = logging.getLogger(__name__)

SHORT_TIME_QUBITS = (2, 3, 4, 5)
SHORT_TIME_COUPLINGS = (0.1, 0.3, 0.5, 1.0)
SHORT_TIME_N_BARS = (1.0, 5.0, 10.0)

# (lambda, n_bar), fastest first.
CURVE_PAIRS: Tuple[Tuple[float, float], ...] = (
    (2.0, 10.0),
    (1.0, 5.0),
    (0.5, 10.0),
    (0.5, 3.0),
    (0.3, 3.0),
)
CURVE_QUBITS = 2

CLASSICAL_FIELD_WINDOW = 0.5

# Reference coefficients are sampled on the default sweep grid.
SAMPLE_GRID = TimeGrid()


def trajectory_frame(traj: Trajectory) -> pd.DataFrame:
    """Per-grid-time columns written by the `trajectory` command."""
    p = traj.params
    times = traj.times
    return pd.DataFrame(
        {
            "t": times,
            "eps": traj.eps,
            "global_bound": global_bound(
                times, p.coupling, p.n_bar, p.n_qubits
            ),
            "classical_field_eps": classical_field_eps(
                times, p.coupling, p.n_bar, p.n_qubits
            ),
            "energy": traj.energy,
        }
    )


def short_time_table(
    n_qubits_list: Sequence[int] = SHORT_TIME_QUBITS,
    couplings: Sequence[float] = SHORT_TIME_COUPLINGS,
    n_bars: Sequence[float] = SHORT_TIME_N_BARS,
    t_probe: float = DEFAULT_T_PROBE,
    sample_grid: Optional[TimeGrid] = SAMPLE_GRID,
    n_fock: int = DEFAULT_N_FOCK,
    auto_fock: bool = True,
    tail_tol: float = FOCK_TAIL_TOL,
) -> pd.DataFrame:
    """
    A_num = eps(t) / (lambda^2 n_bar t^2) for every cell of the
    (N, lambda, n_bar) product, next to A_th = 4/N. With a sample_grid, t
    is the last sample of that grid not after t_probe; otherwise t_probe.
    """
    t = sample_grid.floor_time(t_probe) if sample_grid else t_probe
    if not t > 0:
        raise DomainError(f"sample time must be > 0, got {t}")
    grid = TimeGrid(t_max=t, n_points=2)
    rows = []
    for n in sorted(n_qubits_list):
        a_th = short_time_coefficient(n)
        for lam in couplings:
            for nb in n_bars:
                params = DickeParams(n, lam, nb, n_fock=n_fock)
                traj = compute_trajectory(params, grid, auto_fock, tail_tol)
                a_num = extract_short_time_coefficient(traj, t)
                rows.append(
                    {
                        "N": n,
                        "lambda": lam,
                        "n_bar": nb,
                        "t": t,
                        "A_num": a_num,
                        "A_th": a_th,
                        "err_percent": 100 * abs(a_num - a_th) / a_th,
                    }
                )
    logger.info(f"Short-time table: {len(rows)} cells at t={t:.6g}")
    return pd.DataFrame(rows)


@dataclass(frozen=True)
class ChargingCurve:
    coupling: float
    n_bar: float
    gamma_n: float
    trajectory: Trajectory


def charging_curves(
    grid: TimeGrid,
    pairs: Sequence[Tuple[float, float]] = CURVE_PAIRS,
    n_qubits: int = CURVE_QUBITS,
    n_fock: int = DEFAULT_N_FOCK,
    auto_fock: bool = True,
) -> List[ChargingCurve]:
    if not pairs:
        raise DomainError("at least one (lambda, n_bar) pair is required")
    curves = []
    for lam, nb in pairs:
        traj = compute_trajectory(
            DickeParams(n_qubits, lam, nb, n_fock=n_fock), grid, auto_fock
        )
        curves.append(
            ChargingCurve(
                coupling=lam,
                n_bar=nb,
                gamma_n=gamma_n(lam, nb, n_qubits),
                trajectory=traj.without_propagator(),
            )
        )
    return curves


def curves_frame(curves: Sequence[ChargingCurve]) -> pd.DataFrame:
    """Long-format trajectories keyed by (lambda, n_bar)."""
    frames = []
    for c in curves:
        df = trajectory_frame(c.trajectory)
        df.insert(0, "n_bar", c.n_bar)
        df.insert(0, "lambda", c.coupling)
        frames.append(df)
    return pd.concat(frames, ignore_index=True)


def curve_markers(curves: Sequence[ChargingCurve]) -> pd.DataFrame:
    """Maximum reached by each curve and the time it is first reached."""
    return pd.DataFrame(
        [
            {
                "lambda": c.coupling,
                "n_bar": c.n_bar,
                "gamma_n": c.gamma_n,
                "eps_max": c.trajectory.eps_max,
                "t_at_max": c.trajectory.t_at_max,
            }
            for c in curves
        ]
    )


def speed_ratio(curves: Sequence[ChargingCurve]) -> float:
    """Gamma_N of the fastest curve over that of the slowest."""
    gammas = [c.gamma_n for c in curves]
    return max(gammas) / min(gammas)


def classical_field_deviation(
    traj: Trajectory, t_window: float = CLASSICAL_FIELD_WINDOW
) -> float:
    """
    max |eps(t) - [1 - cos(Omega_N t)]/2| for t <= min(pi/Omega_N, t_window).
    """
    p = traj.params
    if not p.n_bar > 0:
        raise DomainError("classical-field limit needs n_bar > 0")
    t_end = min(np.pi / omega_n(p.coupling, p.n_bar, p.n_qubits), t_window)
    mask = traj.times <= t_end
    reference = classical_field_eps(
        traj.times[mask], p.coupling, p.n_bar, p.n_qubits
    )
    return float(np.max(np.abs(traj.eps[mask] - reference)))
