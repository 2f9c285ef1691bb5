"""Run manifests: content hashes that make batch runs auditable.

Every CLI command that writes a data file drops a sidecar manifest
recording the command line, seed, and sha256 of each input and output.
Reruns with the same flags produce byte-identical data files, so the only
field allowed to differ between manifests is the timestamp.
"""

from __future__ import annotations

import hashlib
import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence


def file_sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def build_manifest(
    command: Sequence[str],
    seed: int | None,
    inputs: Iterable[str | Path],
    outputs: Iterable[str | Path],
    version: str,
) -> dict:
    return {
        "tool": "turnback",
        "version": version,
        "command": list(command),
        "seed": seed,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "inputs": {str(p): file_sha256(p) for p in inputs},
        "outputs": {str(p): file_sha256(p) for p in outputs},
    }


def manifest_path_for(data_path: str | Path) -> Path:
    return Path(f"{data_path}.manifest.json")


def write_manifest(manifest: dict, data_path: str | Path) -> Path:
    """Write the manifest next to the data file it describes."""
    path = manifest_path_for(data_path)
    path.write_text(json.dumps(manifest, indent=1) + "\n", encoding="utf-8")
    return path
