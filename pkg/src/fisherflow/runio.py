"""Shared helpers for reproducible run artifacts.

Every file a command produces starts with a header line naming the producing
command, the format version, and a hash of the fully resolved configuration,
so an artifact can always be traced back to the exact settings that made it.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

FORMAT_VERSION = 1


def canonical_config_text(config: dict) -> str:
    """Flat, sorted key=value rendering of a configuration mapping."""
    lines = []
    for key in sorted(config):
        value = config[key]
        if isinstance(value, float):
            value = repr(value)
        lines.append(f"{key}={value}")
    return "\n".join(lines)


def config_hash(config: dict) -> str:
    """Short stable digest of a resolved configuration."""
    text = canonical_config_text(config)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:12]


def header_line(command: str, cfg_hash: str) -> str:
    return f"# fisherflow {command} format={FORMAT_VERSION} config_hash={cfg_hash}"


def write_json_line(path: Path, record: dict) -> None:
    with open(path, "a", encoding="utf-8") as handle:
        handle.write(json.dumps(record, sort_keys=True) + "\n")
