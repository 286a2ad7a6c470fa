from dataclasses import asdict, dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import stats

from src.core.exceptions import DomainError
from src.core.qsl_bounds import short_time_coefficient
from src.core.types import CollapsePoint
from src.sweep.engine import SweepResult

VIOLATION_SLACK = 1e-9
ENVELOPE_RANGE = (0.02, 0.96)

POINT_COLUMNS = {
    "n_qubits": "N",
    "coupling": "lambda",
    "n_bar": "n_bar",
    "eps_target": "eps",
    "tau_star": "tau_star",
    "tau_qsl": "tau_qsl",
    "gamma_n": "gamma_n",
    "x": "x",
    "ratio": "ratio",
    "tau_star_exact": "tau_star_exact",
}


@dataclass(frozen=True)
class EnvelopeBin:
    center: float
    left: float
    right: float
    x_min: Optional[float]
    eps_at_min: Optional[float]
    count: int = 0


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    eps: float
    n_points: int
    r_value: float


class CollapseAnalyzer:
    @staticmethod
    def points_frame(points: Sequence[CollapsePoint]) -> pd.DataFrame:
        """Collapse points as a frame with the CSV column names."""
        df = pd.DataFrame([asdict(p) for p in points])
        if df.empty:
            return pd.DataFrame(columns=list(POINT_COLUMNS.values()))
        return df[list(POINT_COLUMNS)].rename(columns=POINT_COLUMNS)

    @staticmethod
    def collapse_statistics(
        points: Union[SweepResult, Sequence[CollapsePoint]],
        slack: float = VIOLATION_SLACK,
    ) -> pd.DataFrame:
        """
        Per-N min/median of tau*/tau_QSL over valid points and the count of
        points with X < sqrt(eps) - slack.
        """
        if isinstance(points, SweepResult):
            points = points.points
        df = CollapseAnalyzer.points_frame(points)
        if df.empty:
            raise DomainError("no valid collapse points to summarise")
        df["violation"] = df["x"] < np.sqrt(df["eps"]) - slack
        summary = (
            df.groupby("N")
            .agg(
                valid_count=("ratio", "size"),
                min_ratio=("ratio", "min"),
                median_ratio=("ratio", "median"),
                violations=("violation", "sum"),
            )
            .reset_index()
        )
        summary.insert(
            1, "A_th", summary["N"].map(short_time_coefficient)
        )
        summary["violations"] = summary["violations"].astype(int)
        return summary

    @staticmethod
    def lower_envelope(
        points: Sequence[CollapsePoint],
        n_bins: int = 50,
        eps_range: Tuple[float, float] = ENVELOPE_RANGE,
    ) -> List[EnvelopeBin]:
        """
        Minimum X per uniform eps-bin; the last bin is closed on the right.
        Empty bins carry x_min = None and count = 0.
        """
        if not points:
            raise DomainError("lower envelope needs at least one point")
        if n_bins < 1:
            raise DomainError(f"n_bins must be >= 1, got {n_bins}")
        edges = np.linspace(eps_range[0], eps_range[1], n_bins + 1)
        eps = np.array([p.eps_target for p in points])
        x = np.array([p.x for p in points])
        idx = np.searchsorted(edges, eps, side="right") - 1
        idx[np.isclose(eps, edges[-1])] = n_bins - 1

        bins = []
        for i in range(n_bins):
            mask = idx == i
            x_min: Optional[float] = None
            eps_at_min: Optional[float] = None
            if np.any(mask):
                j = int(np.argmin(np.where(mask, x, np.inf)))
                x_min, eps_at_min = float(x[j]), float(eps[j])
            bins.append(
                EnvelopeBin(
                    center=float(0.5 * (edges[i] + edges[i + 1])),
                    left=float(edges[i]),
                    right=float(edges[i + 1]),
                    x_min=x_min,
                    eps_at_min=eps_at_min,
                    count=int(np.count_nonzero(mask)),
                )
            )
        return bins

    @staticmethod
    def envelope_frame(bins: Sequence[EnvelopeBin]) -> pd.DataFrame:
        df = pd.DataFrame([asdict(b) for b in bins])
        df["sqrt_eps"] = np.sqrt(df["center"])
        return df

    @staticmethod
    def fit_tau_vs_inverse_gamma(
        points: Sequence[CollapsePoint],
        eps: float = 0.5,
        n_qubits: Optional[int] = None,
    ) -> LinearFit:
        """
        Least-squares line tau*(eps) = slope / Gamma_N + intercept, using the
        eps target closest to `eps`.
        """
        pool = [
            p for p in points if n_qubits is None or p.n_qubits == n_qubits
        ]
        if not pool:
            raise DomainError("no points available for the tau* fit")
        targets = np.unique([p.eps_target for p in pool])
        eps_used = float(targets[np.argmin(np.abs(targets - eps))])
        chosen = [p for p in pool if p.eps_target == eps_used]
        if len(chosen) < 2:
            raise DomainError(
                f"need >= 2 points at eps={eps_used:g}, got {len(chosen)}"
            )
        inv_gamma = np.array([1.0 / p.gamma_n for p in chosen])
        tau = np.array([p.tau_star for p in chosen])
        if np.ptp(inv_gamma) == 0:
            raise DomainError("all points share one Gamma_N; slope undefined")
        fit = stats.linregress(inv_gamma, tau)
        return LinearFit(
            slope=float(fit.slope),
            intercept=float(fit.intercept),
            eps=eps_used,
            n_points=len(chosen),
            r_value=float(fit.rvalue),
        )
