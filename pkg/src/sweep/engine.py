import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Dict, List, Mapping, Optional, Tuple

import numpy as np

from src.core.dynamics import compute_trajectory
from src.core.exceptions import ConfigError, DickeError
from src.core.hilbert import FOCK_TAIL_TOL
from src.core.qsl_bounds import global_bound, make_collapse_point
from src.core.types import (
    DEFAULT_N_FOCK,
    DEFAULT_N_POINTS,
    DEFAULT_T_MAX,
    CollapsePoint,
    DickeParams,
    TimeGrid,
)

logger = logging.getLogger(__name__)

Task = Tuple[int, float, float]


def _uniform(start: float, stop: float, num: int) -> Tuple[float, ...]:
    return tuple(float(v) for v in np.linspace(start, stop, num))


@dataclass(frozen=True)
class SweepConfig:
    n_qubits_list: Tuple[int, ...] = (2, 3, 4, 5)
    # Round values spanning [0.1, 2] and [1, 20]; `*_range` keys give
    # uniform grids instead.
    lambda_grid: Tuple[float, ...] = (0.1, 0.2, 0.3, 0.5, 0.7, 1.0, 1.5, 2.0)
    n_bar_grid: Tuple[float, ...] = (1.0, 2.0, 3.0, 5.0, 10.0, 15.0, 20.0)
    eps_grid: Tuple[float, ...] = _uniform(0.02, 0.96, 50)
    t_max: float = DEFAULT_T_MAX
    n_points: int = DEFAULT_N_POINTS
    n_fock: int = DEFAULT_N_FOCK
    auto_fock: bool = True
    fock_tail_tol: float = FOCK_TAIL_TOL
    round_n_bar: bool = False
    refine_tau: bool = True
    omega0: float = 1.0
    omega_c: float = 1.0

    def validate(self) -> "SweepConfig":
        grids = {
            "n_qubits_list": self.n_qubits_list,
            "lambda_grid": self.lambda_grid,
            "n_bar_grid": self.n_bar_values,
            "eps_grid": self.eps_grid,
        }
        for name, values in grids.items():
            if len(values) == 0:
                raise ConfigError(f"{name} must not be empty")
            if np.any(np.diff(np.asarray(values, dtype=float)) <= 0):
                raise ConfigError(f"{name} must be strictly increasing")
        if any(int(n) != n or n < 2 for n in self.n_qubits_list):
            raise ConfigError("n_qubits_list entries must be integers >= 2")
        if min(self.lambda_grid) <= 0:
            raise ConfigError("lambda_grid values must be > 0")
        if min(self.n_bar_values) <= 0:
            raise ConfigError("n_bar_grid values must be > 0")
        if min(self.eps_grid) <= 0 or max(self.eps_grid) > 1:
            raise ConfigError("eps_grid values must lie in (0, 1]")
        if int(self.n_fock) != self.n_fock or self.n_fock < 1:
            raise ConfigError(f"n_fock must be >= 1, got {self.n_fock}")
        if not self.fock_tail_tol > 0:
            raise ConfigError("fock_tail_tol must be > 0")
        if self.omega0 <= 0 or self.omega_c <= 0:
            raise ConfigError("omega0 and omega_c must be > 0")
        # TimeGrid validates t_max and n_points.
        TimeGrid(self.t_max, self.n_points)
        return self

    @property
    def n_bar_values(self) -> Tuple[float, ...]:
        if self.round_n_bar:
            return tuple(float(v) for v in np.round(self.n_bar_grid))
        return tuple(self.n_bar_grid)

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid(self.t_max, self.n_points)

    def tasks(self) -> List[Task]:
        return [
            (int(n), float(lam), float(nb))
            for n in sorted(self.n_qubits_list)
            for lam in self.lambda_grid
            for nb in self.n_bar_values
        ]

    def params_for(self, task: Task) -> DickeParams:
        n, lam, nb = task
        return DickeParams(
            n_qubits=n,
            coupling=lam,
            n_bar=nb,
            omega0=self.omega0,
            omega_c=self.omega_c,
            n_fock=self.n_fock,
        )

    def to_mapping(self) -> Dict[str, Any]:
        data = asdict(self)
        for k, v in data.items():
            if isinstance(v, tuple):
                data[k] = list(v)
        return data

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Any]) -> "SweepConfig":
        """
        Builds a config from a flat mapping. Grids may be given as explicit
        lists (`lambda_grid`) or as `{start, stop, num}` ranges
        (`lambda_range`); time settings may be nested under `time`.
        """
        known = {f.name for f in fields(cls)}
        kwargs: Dict[str, Any] = {}
        for key, value in mapping.items():
            if key == "time":
                if not isinstance(value, Mapping):
                    raise ConfigError("time must be a mapping")
                for sub, sub_value in value.items():
                    if sub not in ("t_max", "n_points"):
                        raise ConfigError(f"unknown time key '{sub}'")
                    kwargs[sub] = sub_value
            elif key.endswith("_range"):
                grid_key = key[: -len("_range")] + "_grid"
                if grid_key not in known:
                    raise ConfigError(f"unknown config key '{key}'")
                try:
                    kwargs[grid_key] = _uniform(
                        float(value["start"]),
                        float(value["stop"]),
                        int(value["num"]),
                    )
                except (KeyError, TypeError, ValueError) as e:
                    raise ConfigError(
                        f"{key} needs numeric start/stop/num: {e}"
                    ) from e
            elif key in known:
                kwargs[key] = value
            else:
                raise ConfigError(f"unknown config key '{key}'")

        for key in ("lambda_grid", "n_bar_grid", "eps_grid"):
            if key in kwargs:
                kwargs[key] = tuple(float(v) for v in kwargs[key])
        if "n_qubits_list" in kwargs:
            kwargs["n_qubits_list"] = tuple(
                int(v) for v in kwargs["n_qubits_list"]
            )
        try:
            return cls(**kwargs).validate()
        except (TypeError, ValueError) as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(str(e)) from e


@dataclass(frozen=True)
class PointFailure:
    n_qubits: int
    coupling: float
    n_bar: float
    cause: str


@dataclass(frozen=True)
class TrajectoryDiagnostics:
    n_qubits: int
    coupling: float
    n_bar: float
    n_fock: int
    fock_tail: float
    eps_max: float
    t_at_max: float
    norm_drift: float
    energy_drift: float
    parity_drift: float
    bound_excess: float  # max_t eps(t) - (4/N) lambda^2 n t^2


@dataclass
class TaskOutcome:
    task: Task
    points: List[CollapsePoint] = field(default_factory=list)
    diagnostics: Optional[TrajectoryDiagnostics] = None
    failure: Optional[PointFailure] = None


@dataclass
class SweepResult:
    config: SweepConfig
    points: List[CollapsePoint] = field(default_factory=list)
    diagnostics: List[TrajectoryDiagnostics] = field(default_factory=list)
    failures: List[PointFailure] = field(default_factory=list)

    def valid_count(self, n_qubits: Optional[int] = None) -> int:
        if n_qubits is None:
            return len(self.points)
        return sum(1 for p in self.points if p.n_qubits == n_qubits)

    def violation_count(self, slack: float = 1e-9) -> int:
        return sum(1 for p in self.points if p.violates(slack))

    @property
    def max_targets_per_n(self) -> int:
        c = self.config
        return len(c.lambda_grid) * len(c.n_bar_grid) * len(c.eps_grid)


def run_task(config: SweepConfig, task: Task) -> TaskOutcome:
    """One (N, lambda, n_bar) trajectory shared by every eps target."""
    outcome = TaskOutcome(task=task)
    try:
        traj = compute_trajectory(
            config.params_for(task),
            config.grid,
            auto_fock=config.auto_fock,
            tail_tol=config.fock_tail_tol,
        )
        p = traj.params
        bound = global_bound(traj.times, p.coupling, p.n_bar, p.n_qubits)
        outcome.diagnostics = TrajectoryDiagnostics(
            n_qubits=p.n_qubits,
            coupling=p.coupling,
            n_bar=p.n_bar,
            n_fock=p.n_fock,
            fock_tail=traj.fock_tail,
            eps_max=traj.eps_max,
            t_at_max=traj.t_at_max,
            norm_drift=traj.norm_drift,
            energy_drift=traj.energy_drift,
            parity_drift=traj.parity_drift,
            bound_excess=float(np.max(traj.eps - bound)),
        )
        for eps in config.eps_grid:
            point = make_collapse_point(traj, eps, config.refine_tau)
            if point is not None:
                outcome.points.append(point)
    except DickeError as e:
        outcome.failure = PointFailure(*task, cause=f"{e.slug}: {e}")
    return outcome


class SweepEngine:
    """
    Runs every (N, lambda, n_bar) trajectory of a SweepConfig and merges the
    collapse points in task order, independent of the worker count.
    """

    def __init__(self, config: SweepConfig, workers: int = 1) -> None:
        self.config = config.validate()
        if workers < 1:
            raise ConfigError(f"workers must be >= 1, got {workers}")
        self.workers = workers

    def _outcomes(self, tasks: List[Task]) -> List[TaskOutcome]:
        if self.workers == 1:
            return [run_task(self.config, t) for t in tasks]
        with ProcessPoolExecutor(max_workers=self.workers) as pool:
            return list(
                pool.map(run_task, [self.config] * len(tasks), tasks)
            )

    def run(self) -> SweepResult:
        tasks = self.config.tasks()
        logger.info(
            f"Sweep started: {len(tasks)} trajectories x "
            f"{len(self.config.eps_grid)} targets, workers={self.workers}"
        )
        start = time.perf_counter()
        result = SweepResult(config=self.config)
        for outcome in self._outcomes(tasks):
            result.points.extend(outcome.points)
            if outcome.diagnostics is not None:
                result.diagnostics.append(outcome.diagnostics)
            if outcome.failure is not None:
                logger.warning(
                    f"Trajectory {outcome.task} failed: "
                    f"{outcome.failure.cause}"
                )
                result.failures.append(outcome.failure)
        logger.info(
            f"Sweep finished in {time.perf_counter() - start:.1f}s: "
            f"{result.valid_count()} valid points, "
            f"{len(result.failures)} failed trajectories"
        )
        return result


def run_sweep(config: SweepConfig, workers: int = 1) -> SweepResult:
    return SweepEngine(config, workers).run()
