from typing import List

import numpy as np
import pytest

from src.core.types import (
    CollapsePoint,
    DickeParams,
    HilbertSpaceSpec,
    TimeGrid,
)
from src.sweep.engine import SweepConfig, SweepResult, run_sweep


@pytest.fixture
def small_spec() -> HilbertSpaceSpec:
    """N=2 spin sector with a short Fock ladder."""
    return HilbertSpaceSpec(n_qubits=2, n_fock=8)


@pytest.fixture
def small_params() -> DickeParams:
    return DickeParams(n_qubits=2, coupling=1.0, n_bar=2.0, n_fock=20)


@pytest.fixture
def short_grid() -> TimeGrid:
    return TimeGrid(t_max=3.0, n_points=301)


@pytest.fixture(scope="session")
def small_sweep_config() -> SweepConfig:
    """Two N values, a coarse grid and a short window."""
    return SweepConfig(
        n_qubits_list=(2, 3),
        lambda_grid=(0.5, 1.0, 2.0),
        n_bar_grid=(1.0, 4.0),
        eps_grid=tuple(float(v) for v in np.linspace(0.05, 0.9, 6)),
        t_max=8.0,
        n_points=801,
        n_fock=30,
    )


@pytest.fixture(scope="session")
def small_sweep(small_sweep_config: SweepConfig) -> SweepResult:
    return run_sweep(small_sweep_config)


@pytest.fixture(scope="session")
def default_sweep() -> SweepResult:
    """The full default scan, shared by every reproduction test."""
    return run_sweep(SweepConfig(), workers=4)


def make_point(
    eps: float,
    x: float,
    n_qubits: int = 2,
    coupling: float = 1.0,
    n_bar: float = 2.0,
) -> CollapsePoint:
    """Synthetic collapse point with X = Gamma_N tau* set directly."""
    gamma = 2 * coupling * np.sqrt(n_bar / n_qubits)
    tau = x / gamma
    return CollapsePoint(
        n_qubits=n_qubits,
        coupling=coupling,
        n_bar=n_bar,
        eps_target=eps,
        tau_star=float(tau),
        tau_qsl=float(np.sqrt(eps) / gamma),
        gamma_n=float(gamma),
        x=x,
        ratio=float(x / np.sqrt(eps)),
    )


@pytest.fixture
def bound_points() -> List[CollapsePoint]:
    """Points at 10% above the bound over a spread of eps."""
    return [
        make_point(float(e), 1.1 * float(np.sqrt(e)))
        for e in np.linspace(0.05, 0.95, 10)
    ]
