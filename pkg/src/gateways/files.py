import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import (
    Any,
    Dict,
    Iterator,
    List,
    Mapping,
    Optional,
    Tuple,
    Union,
)

import pandas as pd
import yaml

from src.core.exceptions import ConfigError
from src.core.types import CollapsePoint
from src.gateways.base import ConfigSource, ResultSink
from src.sweep.analytics import POINT_COLUMNS

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

FLOAT_FORMAT = "%.12g"
MANIFEST_NAME = "manifest.txt"
SNAPSHOT_NAME = "config_snapshot.yaml"
PACKAGE_NAME = "dicke_qsl"
OPTIONAL_POINT_FIELDS = ("tau_star_exact",)


def package_version() -> str:
    try:
        return metadata.version(PACKAGE_NAME)
    except metadata.PackageNotFoundError:
        return "0+unknown"


def _format_value(value: Any) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return FLOAT_FORMAT % value
    if isinstance(value, (list, tuple)):
        return ",".join(_format_value(v) for v in value)
    return str(value)


def _flatten(prefix: str, value: Any) -> Iterator[Tuple[str, str]]:
    if isinstance(value, Mapping):
        for k, v in value.items():
            yield from _flatten(f"{prefix}.{k}" if prefix else str(k), v)
    else:
        yield prefix, _format_value(value)


class YamlConfigSource(ConfigSource):
    def __init__(self, path: PathLike) -> None:
        self.path = Path(path)

    def load(self) -> Dict[str, Any]:
        try:
            with self.path.open() as f:
                data = yaml.safe_load(f)
        except FileNotFoundError as e:
            raise ConfigError(f"config file not found: {self.path}") from e
        except yaml.YAMLError as e:
            raise ConfigError(f"cannot parse {self.path}: {e}") from e
        if data is None:
            return {}
        if not isinstance(data, dict):
            raise ConfigError(f"{self.path} must hold a mapping at top level")
        return data


class CsvResultSink(ResultSink):
    """
    Writes tables as CSV (header row, '.' decimals, 12 significant digits)
    into one output directory and remembers every file it produced.
    """

    def __init__(self, out_dir: PathLike) -> None:
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.outputs: Dict[str, Path] = {}

    def _register(self, name: str, path: Path) -> Path:
        if name in self.outputs:
            raise ConfigError(f"output '{name}' written twice")
        self.outputs[name] = path
        logger.info(f"Wrote {name} -> {path}")
        return path

    def write_frame(self, name: str, frame: pd.DataFrame) -> Path:
        path = self.out_dir / f"{name}.csv"
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
        return self._register(name, path)

    def write_config_snapshot(self, config: Mapping[str, Any]) -> Path:
        path = self.out_dir / SNAPSHOT_NAME
        with path.open("w") as f:
            yaml.safe_dump(dict(config), f, sort_keys=True)
        return self._register("config_snapshot", path)

    def write_manifest(self, entries: Mapping[str, Any]) -> Path:
        path = self.out_dir / MANIFEST_NAME
        lines = [f"{k}={v}" for k, v in _flatten("", entries)]
        path.write_text("\n".join(lines) + "\n")
        logger.info(f"Wrote manifest -> {path}")
        return path


@dataclass
class RunManifest:
    command: str
    config: Dict[str, Any]
    outputs: Dict[str, Path] = field(default_factory=dict)
    truncation: List[Dict[str, Any]] = field(default_factory=list)
    failures: List[str] = field(default_factory=list)
    version: str = field(default_factory=package_version)
    timestamp: str = field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat()
    )

    def to_entries(self) -> Dict[str, Any]:
        entries: Dict[str, Any] = {
            "command": self.command,
            "version": self.version,
            "timestamp": self.timestamp,
            "config": self.config,
            "output": {k: str(v) for k, v in self.outputs.items()},
            "failures": {"count": len(self.failures)},
        }
        for i, cause in enumerate(self.failures):
            entries["failures"][str(i)] = cause
        if self.truncation:
            entries["truncation"] = {
                str(i): row for i, row in enumerate(self.truncation)
            }
        return entries

    def write(self, sink: ResultSink) -> Path:
        return sink.write_manifest(self.to_entries())


def read_manifest(path: PathLike) -> Dict[str, str]:
    entries: Dict[str, str] = {}
    for line in Path(path).read_text().splitlines():
        if line:
            key, _, value = line.partition("=")
            entries[key] = value
    return entries


def read_points_csv(path: PathLike) -> List[CollapsePoint]:
    df = pd.read_csv(path)
    missing = set(POINT_COLUMNS.values()) - set(df.columns)
    if missing:
        raise ConfigError(f"{path} lacks columns {sorted(missing)}")
    df = df.rename(columns={v: k for k, v in POINT_COLUMNS.items()})
    floats = [k for k in POINT_COLUMNS if k not in OPTIONAL_POINT_FIELDS]
    points = []
    for row in df.to_dict("records"):
        exact = row["tau_star_exact"]
        points.append(
            CollapsePoint(
                n_qubits=int(row["n_qubits"]),
                **{k: float(row[k]) for k in floats if k != "n_qubits"},
                tau_star_exact=None if pd.isna(exact) else float(exact),
            )
        )
    return points


def load_config_mapping(path: Optional[PathLike]) -> Dict[str, Any]:
    return YamlConfigSource(path).load() if path is not None else {}
