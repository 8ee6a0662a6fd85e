"""Service configuration: JSON file with environment-variable overrides.

Environment variables win over the file, the file over defaults:

    MODELMATCH_DATA_DIR, MODELMATCH_EMBEDDING_DIM, MODELMATCH_GAMMA,
    MODELMATCH_ENCODER (``mock`` or a remote base URL), MODELMATCH_HOST,
    MODELMATCH_PORT
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

from .errors import InvalidConfig
from .kernels import DEFAULT_GAMMA


@dataclass(frozen=True)
class ServiceConfig:
    data_dir: str | None = None
    embedding_dim: int | None = None
    gamma: float = DEFAULT_GAMMA
    encoder: str = "mock"
    host: str = "127.0.0.1"
    port: int = 8080

    def __post_init__(self):
        if self.embedding_dim is not None and self.embedding_dim < 1:
            raise InvalidConfig("embedding_dim must be >= 1")
        if not self.gamma > 0:
            raise InvalidConfig("gamma must be positive")
        if not 0 < self.port < 65536:
            raise InvalidConfig(f"port out of range: {self.port}")


_FIELDS = {
    "data_dir": str,
    "embedding_dim": int,
    "gamma": float,
    "encoder": str,
    "host": str,
    "port": int,
}

_ENV_PREFIX = "MODELMATCH_"


def load_service_config(path: str | os.PathLike | None = None, env=None) -> ServiceConfig:
    env = os.environ if env is None else env
    values: dict = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text("utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidConfig(f"cannot read config file: {exc}") from exc
        if not isinstance(raw, dict):
            raise InvalidConfig("config file must contain a JSON object")
        unknown = set(raw) - set(_FIELDS)
        if unknown:
            raise InvalidConfig(f"unknown config keys: {sorted(unknown)}")
        values.update(raw)
    for name, cast in _FIELDS.items():
        key = _ENV_PREFIX + name.upper()
        if key in env:
            try:
                values[name] = cast(env[key])
            except (TypeError, ValueError) as exc:
                raise InvalidConfig(f"bad value for {key}: {env[key]!r}") from exc
    try:
        return ServiceConfig(**{k: v for k, v in values.items()})
    except TypeError as exc:
        raise InvalidConfig(str(exc)) from exc
