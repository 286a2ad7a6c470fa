import argparse
import logging
import os
import sys
from dataclasses import asdict, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from dotenv import load_dotenv

from src.core.dynamics import compute_trajectory
from src.core.exceptions import ConfigError, DickeError, NumericalError
from src.core.qsl_bounds import gamma_n, min_coupling, tau_qsl
from src.core.types import (
    DEFAULT_N_FOCK,
    DEFAULT_N_POINTS,
    DEFAULT_T_MAX,
    DickeParams,
    TimeGrid,
)
from src.gateways.files import (
    CsvResultSink,
    RunManifest,
    load_config_mapping,
)
from src.sweep.acceptance import AcceptanceSuite, criteria_frame
from src.sweep.analytics import CollapseAnalyzer
from src.sweep.engine import SweepConfig, SweepEngine, SweepResult
from src.sweep.reproduction import (
    CURVE_QUBITS,
    SHORT_TIME_QUBITS,
    charging_curves,
    curve_markers,
    curves_frame,
    short_time_table,
    speed_ratio,
    trajectory_frame,
)

logger = logging.getLogger("dicke_qsl")

DEFAULT_OUT_DIR = "results"


def _configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="[%(asctime)s] [%(levelname)s] [%(name)s] %(message)s",
        datefmt="%H:%M:%S",
    )


def _env_workers() -> int:
    raw = os.getenv("DICKE_WORKERS", "1")
    try:
        return int(raw)
    except ValueError as e:
        raise ConfigError(f"DICKE_WORKERS must be an integer: {raw}") from e


def _grid(args: argparse.Namespace) -> TimeGrid:
    return TimeGrid(
        t_max=args.t_max if args.t_max is not None else DEFAULT_T_MAX,
        n_points=(
            args.n_points if args.n_points is not None else DEFAULT_N_POINTS
        ),
    )


def _n_fock(args: argparse.Namespace) -> int:
    return args.n_fock if args.n_fock is not None else DEFAULT_N_FOCK


def _sweep_config(args: argparse.Namespace) -> SweepConfig:
    """Config file values, then command-line overrides."""
    config = SweepConfig.from_mapping(load_config_mapping(args.config))
    overrides: Dict[str, Any] = {
        key: getattr(args, key)
        for key in ("n_fock", "t_max", "n_points")
        if getattr(args, key) is not None
    }
    if args.no_auto_fock:
        overrides["auto_fock"] = False
    return replace(config, **overrides).validate()


def _truncation_rows(result: SweepResult) -> List[Dict[str, Any]]:
    return [
        {
            "N": d.n_qubits,
            "lambda": d.coupling,
            "n_bar": d.n_bar,
            "n_fock": d.n_fock,
            "fock_tail": d.fock_tail,
        }
        for d in result.diagnostics
        if d.n_fock != result.config.n_fock
    ]


def cmd_trajectory(args: argparse.Namespace) -> int:
    params = DickeParams(
        n_qubits=args.n_qubits,
        coupling=args.coupling,
        n_bar=args.n_bar,
        n_fock=_n_fock(args),
    )
    grid = _grid(args)
    traj = compute_trajectory(params, grid, auto_fock=not args.no_auto_fock)

    sink = CsvResultSink(args.out_dir)
    sink.write_frame("trajectory", trajectory_frame(traj))
    p = traj.params
    manifest = RunManifest(
        command="trajectory",
        config={
            "n_qubits": p.n_qubits,
            "lambda": p.coupling,
            "n_bar": p.n_bar,
            "t_max": grid.t_max,
            "n_points": grid.n_points,
            "n_fock": params.n_fock,
        },
        outputs=sink.outputs,
        truncation=[{"n_fock": p.n_fock, "fock_tail": traj.fock_tail}],
    )
    manifest.write(sink)
    logger.info(
        f"eps_max={traj.eps_max:.6f} at t={traj.t_at_max:.4f}, "
        f"norm drift {traj.norm_drift:.2e}"
    )
    return 0


def cmd_table1(args: argparse.Namespace) -> int:
    table = short_time_table(
        n_qubits_list=args.n_qubits,
        t_probe=args.t_probe,
        sample_grid=_grid(args),
        n_fock=_n_fock(args),
        auto_fock=not args.no_auto_fock,
    )
    sink = CsvResultSink(args.out_dir)
    sink.write_frame("table1", table)
    RunManifest(
        command="table1",
        config={
            "n_qubits": list(args.n_qubits),
            "t_probe": args.t_probe,
            "t_sample": float(table["t"].iloc[0]),
            "n_fock": _n_fock(args),
        },
        outputs=sink.outputs,
    ).write(sink)
    return 0


def _write_sweep(result: SweepResult, sink: CsvResultSink) -> None:
    points = result.points
    sink.write_frame("points", CollapseAnalyzer.points_frame(points))
    if not points:
        logger.warning("Sweep produced no valid points")
        return
    sink.write_frame(
        "summary", CollapseAnalyzer.collapse_statistics(points)
    )
    envelopes = []
    fits = []
    for n in sorted(result.config.n_qubits_list):
        subset = [p for p in points if p.n_qubits == n]
        if not subset:
            continue
        env = CollapseAnalyzer.envelope_frame(
            CollapseAnalyzer.lower_envelope(subset)
        )
        env.insert(0, "N", n)
        envelopes.append(env)
        try:
            fit = CollapseAnalyzer.fit_tau_vs_inverse_gamma(
                subset, n_qubits=n
            )
        except DickeError as e:
            logger.warning(f"No tau* fit for N={n}: {e}")
            continue
        fits.append({"N": n, **asdict(fit)})
    sink.write_frame("envelope", pd.concat(envelopes, ignore_index=True))
    sink.write_frame("fit", pd.DataFrame(fits))
    sink.write_frame(
        "diagnostics",
        pd.DataFrame([asdict(d) for d in result.diagnostics]),
    )


def cmd_sweep(args: argparse.Namespace) -> int:
    config = _sweep_config(args)
    result = SweepEngine(config, workers=args.workers).run()
    sink = CsvResultSink(args.out_dir)
    _write_sweep(result, sink)
    sink.write_config_snapshot(config.to_mapping())
    RunManifest(
        command="sweep",
        config=config.to_mapping(),
        outputs=sink.outputs,
        truncation=_truncation_rows(result),
        failures=[
            f"N={f.n_qubits} lambda={f.coupling:g} n_bar={f.n_bar:g}: "
            f"{f.cause}"
            for f in result.failures
        ],
    ).write(sink)
    return 0


def cmd_curves(args: argparse.Namespace) -> int:
    curves = charging_curves(
        _grid(args),
        n_qubits=args.n_qubits,
        n_fock=_n_fock(args),
        auto_fock=not args.no_auto_fock,
    )
    sink = CsvResultSink(args.out_dir)
    sink.write_frame("curves", curves_frame(curves))
    sink.write_frame("curve_markers", curve_markers(curves))
    ratio = speed_ratio(curves)
    logger.info(f"Gamma_N ratio fastest/slowest: {ratio:.2f}")
    RunManifest(
        command="curves",
        config={
            "n_qubits": args.n_qubits,
            "t_max": _grid(args).t_max,
            "n_points": _grid(args).n_points,
            "gamma_ratio": ratio,
        },
        outputs=sink.outputs,
    ).write(sink)
    return 0


def cmd_design_rule(args: argparse.Namespace) -> int:
    lam = min_coupling(args.eps, args.tau, args.n_bar, args.n_qubits)
    print(
        f"lambda_min={lam:.12g} "
        f"lambda_tau={lam * args.tau:.12g} "
        f"gamma_n={gamma_n(lam, args.n_bar, args.n_qubits):.12g} "
        f"tau_qsl={tau_qsl(args.eps, lam, args.n_bar, args.n_qubits):.12g}"
    )
    return 0


def cmd_check(args: argparse.Namespace) -> int:
    config = _sweep_config(args)
    criteria = AcceptanceSuite(config, workers=args.workers).run()
    table = criteria_frame(criteria)
    print(table.to_string(index=False))
    sink = CsvResultSink(args.out_dir)
    sink.write_frame("acceptance", table)
    failed = [c.name for c in criteria if not c.passed]
    RunManifest(
        command="check",
        config=config.to_mapping(),
        outputs=sink.outputs,
        failures=failed,
    ).write(sink)
    if failed:
        print(f"failed={','.join(failed)}", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--out-dir",
        type=Path,
        default=Path(os.getenv("DICKE_OUT_DIR", DEFAULT_OUT_DIR)),
    )
    common.add_argument("--n-fock", type=int, default=None)
    common.add_argument("--t-max", type=float, default=None)
    common.add_argument("--n-points", type=int, default=None)
    common.add_argument(
        "--no-auto-fock",
        action="store_true",
        help="fail instead of growing n_fock for large n_bar",
    )
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="dicke-qsl",
        description="Dicke quantum-battery charging speed limits.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "trajectory", parents=[common], help="one charging curve"
    )
    p.add_argument("--n-qubits", type=int, required=True)
    p.add_argument("--lambda", dest="coupling", type=float, required=True)
    p.add_argument("--n-bar", type=float, required=True)
    p.set_defaults(func=cmd_trajectory)

    p = sub.add_parser(
        "table1", parents=[common], help="short-time coefficient table"
    )
    p.add_argument(
        "--n-qubits", type=int, nargs="+", default=list(SHORT_TIME_QUBITS)
    )
    p.add_argument("--t-probe", type=float, default=0.1)
    p.set_defaults(func=cmd_table1)

    for name, func, help_text in (
        ("sweep", cmd_sweep, "full parameter scan"),
        ("check", cmd_check, "run every acceptance criterion"),
    ):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("--config", type=Path, default=None)
        p.add_argument("--workers", type=int, default=None)
        p.set_defaults(func=func)

    p = sub.add_parser(
        "curves", parents=[common], help="representative curves"
    )
    p.add_argument("--n-qubits", type=int, default=CURVE_QUBITS)
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser(
        "design-rule",
        parents=[common],
        help="smallest coupling reaching eps by a target time",
    )
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--n-bar", type=float, required=True)
    p.add_argument("--n-qubits", type=int, required=True)
    p.set_defaults(func=cmd_design_rule)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)
    try:
        if getattr(args, "workers", 0) is None:
            args.workers = _env_workers()
        return int(args.func(args))
    except DickeError as e:
        print(f"error={e.slug} {e}", file=sys.stderr)
        return e.exit_code
    except (ArithmeticError, np.linalg.LinAlgError) as e:
        print(f"error={NumericalError.slug} {e}", file=sys.stderr)
        return NumericalError.exit_code
    except Exception as e:
        logger.exception("Unexpected failure")
        print(f"error=unexpected {e}", file=sys.stderr)
        return NumericalError.exit_code


if __name__ == "__main__":
    sys.exit(main())
