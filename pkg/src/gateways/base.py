from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Dict, Mapping

import pandas as pd


class ConfigSource(ABC):
    @abstractmethod
    def load(self) -> Dict[str, Any]:
        """Raw sweep settings as a flat mapping."""
        pass


class ResultSink(ABC):
    @abstractmethod
    def write_frame(self, name: str, frame: pd.DataFrame) -> Path:
        """Persists one table and returns where it went."""
        pass

    @abstractmethod
    def write_manifest(self, entries: Mapping[str, Any]) -> Path:
        pass
