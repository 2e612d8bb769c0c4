"""Service configuration: one JSON file plus environment overrides.

Environment variables win over the file, the file over defaults:

    KRS_LISTEN            host:port to bind
    KRS_STATE_DIR         state directory
    KRS_TZ                IANA timezone name
    KRS_REQUIRE_PASS      1/0, whether prerequisites must be passed or just taken
    KRS_SESSION_TTL_MIN   session lifetime in minutes
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional

_TRUTHY = {"1", "true", "yes", "on"}
_FALSY = {"0", "false", "no", "off"}


@dataclass(frozen=True)
class ServiceConfig:
    listen: str = "127.0.0.1:8000"
    state_dir: str = "./krs-state"
    timezone: str = "Asia/Jakarta"
    require_pass: bool = True
    session_ttl_min: int = 120

    @property
    def host(self) -> str:
        return self.listen.rsplit(":", 1)[0]

    @property
    def port(self) -> int:
        return int(self.listen.rsplit(":", 1)[1])


def _parse_bool(raw: str, name: str) -> bool:
    value = raw.strip().lower()
    if value in _TRUTHY:
        return True
    if value in _FALSY:
        return False
    raise ValueError(f"{name} must be a boolean flag, got {raw!r}")


def load_config(path: Optional[str | Path] = None,
                env: Optional[Mapping[str, str]] = None) -> ServiceConfig:
    env = os.environ if env is None else env
    values = {}
    if path is not None:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        unknown = set(raw) - {"listen", "state_dir", "timezone", "require_pass", "session_ttl_min"}
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        values.update(raw)

    if "KRS_LISTEN" in env:
        values["listen"] = env["KRS_LISTEN"]
    if "KRS_STATE_DIR" in env:
        values["state_dir"] = env["KRS_STATE_DIR"]
    if "KRS_TZ" in env:
        values["timezone"] = env["KRS_TZ"]
    if "KRS_REQUIRE_PASS" in env:
        values["require_pass"] = _parse_bool(env["KRS_REQUIRE_PASS"], "KRS_REQUIRE_PASS")
    if "KRS_SESSION_TTL_MIN" in env:
        values["session_ttl_min"] = int(env["KRS_SESSION_TTL_MIN"])

    if "require_pass" in values and isinstance(values["require_pass"], str):
        values["require_pass"] = _parse_bool(values["require_pass"], "require_pass")
    if "session_ttl_min" in values:
        values["session_ttl_min"] = int(values["session_ttl_min"])
    return ServiceConfig(**values)
