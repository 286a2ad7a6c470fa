from typing import List

import numpy as np
import pytest

from src.core.exceptions import DomainError
from src.core.types import CollapsePoint
from src.sweep.analytics import POINT_COLUMNS, CollapseAnalyzer
from src.sweep.engine import SweepResult
from tests.conftest import make_point

ENVELOPE_BINS = 50
SQRT_HALF = np.sqrt(0.5)


def test_points_frame_uses_output_column_names(
    bound_points: List[CollapsePoint],
) -> None:
    df = CollapseAnalyzer.points_frame(bound_points)
    assert list(df.columns) == list(POINT_COLUMNS.values())
    assert len(df) == len(bound_points)
    assert df["eps"].iloc[0] == pytest.approx(0.05)


def test_points_frame_of_no_points_keeps_the_header() -> None:
    df = CollapseAnalyzer.points_frame([])
    assert df.empty
    assert {"tau_star", "tau_star_exact"} <= set(df.columns)


def test_collapse_statistics_summarise_each_n() -> None:
    points = [
        make_point(0.25, 0.5 * 1.01),
        make_point(0.25, 0.5 * 1.30),
        make_point(0.25, 0.5 * 1.20),
        make_point(0.36, 0.6 * 1.02, n_qubits=3),
        make_point(0.36, 0.6 * 0.99, n_qubits=3),
    ]
    summary = CollapseAnalyzer.collapse_statistics(points)
    assert summary["N"].tolist() == [2, 3]
    row2 = summary.iloc[0]
    assert row2["A_th"] == pytest.approx(2.0)
    assert row2["valid_count"] == 3
    assert row2["min_ratio"] == pytest.approx(1.01)
    assert row2["median_ratio"] == pytest.approx(1.20)
    assert row2["violations"] == 0
    assert summary.iloc[1]["violations"] == 1


def test_collapse_statistics_tolerate_rounding_within_slack() -> None:
    point = make_point(0.25, 0.5 - 1e-12)
    summary = CollapseAnalyzer.collapse_statistics([point])
    assert summary.iloc[0]["violations"] == 0


def test_collapse_statistics_need_points() -> None:
    with pytest.raises(DomainError):
        CollapseAnalyzer.collapse_statistics([])


def test_lower_envelope_keeps_the_minimum_per_bin() -> None:
    points = [
        make_point(0.05, 0.30),
        make_point(0.05, 0.25),
        make_point(0.96, 1.5),
    ]
    bins = CollapseAnalyzer.lower_envelope(points)
    assert len(bins) == ENVELOPE_BINS
    filled = [b for b in bins if b.x_min is not None]
    assert len(filled) == 2
    assert filled[0].x_min == pytest.approx(0.25)
    assert filled[0].left <= 0.05 < filled[0].right
    # The right edge of the range belongs to the last bin.
    assert bins[-1].x_min == pytest.approx(1.5)
    assert bins[-1].eps_at_min == pytest.approx(0.96)


def test_lower_envelope_bins_are_uniform_over_the_target_range() -> None:
    bins = CollapseAnalyzer.lower_envelope([make_point(0.5, 0.8)])
    assert bins[0].left == pytest.approx(0.02)
    assert bins[-1].right == pytest.approx(0.96)
    widths = [b.right - b.left for b in bins]
    assert np.allclose(widths, widths[0])


def test_lower_envelope_rejects_empty_input() -> None:
    with pytest.raises(DomainError):
        CollapseAnalyzer.lower_envelope([])


def test_envelope_frame_adds_the_bound_column() -> None:
    bins = CollapseAnalyzer.lower_envelope([make_point(0.5, 0.8)], n_bins=4)
    df = CollapseAnalyzer.envelope_frame(bins)
    assert len(df) == 4
    assert np.allclose(df["sqrt_eps"], np.sqrt(df["center"]))


def test_fit_on_points_exactly_on_the_bound_has_sqrt_eps_slope() -> None:
    points = [
        make_point(0.5, SQRT_HALF, coupling=float(lam))
        for lam in np.linspace(0.2, 2.0, 8)
    ]
    fit = CollapseAnalyzer.fit_tau_vs_inverse_gamma(points, eps=0.5)
    assert fit.slope == pytest.approx(SQRT_HALF, abs=1e-6)
    assert fit.intercept == pytest.approx(0.0, abs=1e-9)
    assert fit.n_points == 8


def test_fit_uses_the_nearest_available_target() -> None:
    points = [
        make_point(0.4996, 1.2 * np.sqrt(0.4996), coupling=lam)
        for lam in (0.5, 1.0, 1.5)
    ] + [make_point(0.3, 0.8, coupling=1.0)]
    fit = CollapseAnalyzer.fit_tau_vs_inverse_gamma(points, eps=0.5)
    assert fit.eps == pytest.approx(0.4996)
    assert fit.slope == pytest.approx(1.2 * np.sqrt(0.4996))


def test_fit_needs_two_distinct_rates() -> None:
    with pytest.raises(DomainError):
        CollapseAnalyzer.fit_tau_vs_inverse_gamma([make_point(0.5, 0.8)])
    same_rate = [make_point(0.5, 0.8), make_point(0.5, 0.9)]
    with pytest.raises(DomainError):
        CollapseAnalyzer.fit_tau_vs_inverse_gamma(same_rate)


def test_statistics_on_a_real_sweep_have_no_violations(
    small_sweep: SweepResult,
) -> None:
    summary = CollapseAnalyzer.collapse_statistics(small_sweep.points)
    assert (summary["violations"] == 0).all()
    assert (summary["min_ratio"] >= 1.0 - 1e-9).all()
    assert summary["valid_count"].sum() == small_sweep.valid_count()
