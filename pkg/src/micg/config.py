"""System configuration: one JSON file covering every pipeline stage.

The config path comes from a CLI flag or the MICG_CONFIG environment
variable; every field has a default so an empty config is valid.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .ga import GAConfig
from .hierarchy import HierarchyConfig, default_config, load_config
from .phenotyping import CertaintyConfig

CONFIG_ENV_VAR = "MICG_CONFIG"


@dataclass
class SystemConfig:
    data_dir: str = "micg-data"
    host: str = "127.0.0.1"
    port: int = 8000
    auth_token: str | None = None
    hierarchy_path: str | None = None  # None: packaged default
    alpha_prior: float = 1.0
    alpha_certainty: float = 1.0
    t_cap: float = 120.0
    t_floor: float = 0.0
    tau_sq: float = 1.0
    training_samples: int = 128
    hidden_layers: tuple[int, ...] = (16, 16)
    seed: int = 0
    ga: GAConfig = field(default_factory=GAConfig)

    def hierarchy(self) -> HierarchyConfig:
        if self.hierarchy_path:
            return load_config(self.hierarchy_path)
        return default_config()

    def certainty(self) -> CertaintyConfig:
        return CertaintyConfig(
            alpha_certainty=self.alpha_certainty, t_cap=self.t_cap, t_floor=self.t_floor
        )

    @classmethod
    def from_dict(cls, raw: dict) -> "SystemConfig":
        known = {
            k: raw[k]
            for k in (
                "data_dir",
                "host",
                "port",
                "auth_token",
                "hierarchy_path",
                "alpha_prior",
                "alpha_certainty",
                "t_cap",
                "t_floor",
                "tau_sq",
                "training_samples",
                "seed",
            )
            if k in raw
        }
        if "hidden_layers" in raw:
            known["hidden_layers"] = tuple(raw["hidden_layers"])
        ga_raw = dict(raw.get("ga", {}))
        if "crossover_alpha" in ga_raw and ga_raw["crossover_alpha"] is not None:
            ga_raw["crossover_alpha"] = float(ga_raw["crossover_alpha"])
        known["ga"] = GAConfig(**ga_raw)
        return cls(**known)


def load_system_config(path: str | os.PathLike | None = None) -> SystemConfig:
    """Load from ``path``, falling back to $MICG_CONFIG, then to defaults."""
    if path is None:
        path = os.environ.get(CONFIG_ENV_VAR) or None
    if path is None:
        return SystemConfig()
    return SystemConfig.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
