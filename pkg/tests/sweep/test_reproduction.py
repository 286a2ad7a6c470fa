import numpy as np
import pytest

from src.core.dynamics import compute_trajectory
from src.core.exceptions import DomainError
from src.core.qsl_bounds import gamma_n
from src.core.types import DickeParams, TimeGrid
from src.sweep.reproduction import (
    CURVE_PAIRS,
    charging_curves,
    classical_field_deviation,
    curve_markers,
    curves_frame,
    short_time_table,
    speed_ratio,
    trajectory_frame,
)

TABLE1_COLUMNS = ["N", "lambda", "n_bar", "t", "A_num", "A_th", "err_percent"]


def test_short_time_table_has_one_row_per_cell() -> None:
    table = short_time_table(
        n_qubits_list=(2, 3), couplings=(0.1, 0.5), n_bars=(1.0,)
    )
    assert list(table.columns) == TABLE1_COLUMNS
    assert len(table) == 4
    assert table["A_th"].tolist() == pytest.approx([2, 2, 4 / 3, 4 / 3])
    recomputed = 100 * (table["A_num"] - table["A_th"]).abs() / table["A_th"]
    assert np.allclose(table["err_percent"], recomputed)


def test_weak_drive_coefficient_matches_four_over_n() -> None:
    table = short_time_table(
        n_qubits_list=(2,), couplings=(0.1,), n_bars=(1.0,)
    )
    assert table["t"].iloc[0] == pytest.approx(4 * 45.0 / 1999)
    assert table["A_num"].iloc[0] == pytest.approx(1.9930, abs=1e-4)


@pytest.mark.parametrize(
    "n_qubits, expected", [(3, 1.2750), (4, 0.9663)]
)
def test_strong_drive_coefficient_at_the_grid_sample(
    n_qubits: int, expected: float
) -> None:
    table = short_time_table(
        n_qubits_list=(n_qubits,), couplings=(1.0,), n_bars=(10.0,)
    )
    assert table["A_num"].iloc[0] == pytest.approx(expected, abs=1e-4)


def test_short_time_table_without_a_grid_samples_the_exact_time() -> None:
    table = short_time_table(
        n_qubits_list=(2,),
        couplings=(0.1,),
        n_bars=(1.0,),
        t_probe=0.05,
        sample_grid=None,
    )
    assert table["t"].iloc[0] == 0.05
    assert table["A_num"].iloc[0] == pytest.approx(2.0, rel=1e-2)


def test_short_time_table_rejects_non_positive_time() -> None:
    with pytest.raises(DomainError):
        short_time_table(n_qubits_list=(2,), t_probe=0.0)


def test_trajectory_frame_columns_and_bound(
    small_params: DickeParams, short_grid: TimeGrid
) -> None:
    df = trajectory_frame(compute_trajectory(small_params, short_grid))
    assert list(df.columns) == [
        "t",
        "eps",
        "global_bound",
        "classical_field_eps",
        "energy",
    ]
    assert len(df) == short_grid.n_points
    assert (df["eps"] <= df["global_bound"] + 1e-9).all()


def test_charging_curves_are_ordered_by_speed() -> None:
    curves = charging_curves(TimeGrid(t_max=1.0, n_points=101))
    assert [(c.coupling, c.n_bar) for c in curves] == list(CURVE_PAIRS)
    assert all(c.trajectory.propagator is None for c in curves)
    expected = gamma_n(2.0, 10.0, 2) / gamma_n(0.3, 3.0, 2)
    assert speed_ratio(curves) == pytest.approx(expected)

    frame = curves_frame(curves)
    assert len(frame) == len(CURVE_PAIRS) * 101
    assert list(frame.columns[:2]) == ["lambda", "n_bar"]
    markers = curve_markers(curves)
    assert markers["eps_max"].iloc[0] > markers["eps_max"].iloc[-1]


def test_classical_field_limit_at_large_photon_number() -> None:
    traj = compute_trajectory(
        DickeParams(n_qubits=2, coupling=0.1, n_bar=20.0),
        TimeGrid(t_max=1.0, n_points=201),
    )
    assert classical_field_deviation(traj) < 0.02
