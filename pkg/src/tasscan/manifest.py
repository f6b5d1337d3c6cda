"""Run manifests: digests and parameters that make runs reproducible.

Every command writes a manifest next to its outputs recording what went in
(paths plus content digests), what parameters applied, and what came out.
Two runs over identical inputs and parameters produce manifests that differ
only in their creation timestamp.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import IO, Callable

from ._version import __version__
from .errors import ManifestError

TOOL_NAME = "tasscan"

_CHUNK = 1 << 20


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        while True:
            chunk = fh.read(_CHUNK)
            if not chunk:
                break
            digest.update(chunk)
    return digest.hexdigest()


def atomic_write_text(path: str | Path, render: Callable[[IO[str]], None]) -> None:
    """Write a text file via a temp name and rename, so readers never see
    a partial file. newline='' keeps line endings exactly as written."""
    target = Path(path)
    tmp = target.with_name(target.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        render(fh)
    os.replace(tmp, target)


@dataclass(frozen=True, slots=True)
class FileStamp:
    """A file reference pinned to its content."""

    path: str
    sha256: str


def stamp(path: str | Path) -> FileStamp:
    return FileStamp(path=str(path), sha256=sha256_file(path))


def _utc_now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to reproduce or audit one command run."""

    command: str
    parameters: dict[str, str]
    inputs: dict[str, FileStamp]
    outputs: dict[str, FileStamp]
    tool: str = TOOL_NAME
    version: str = __version__
    created_at: str = field(default_factory=_utc_now)

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "created_at": self.created_at,
            "inputs": {name: asdict(s) for name, s in sorted(self.inputs.items())},
            "outputs": {name: asdict(s) for name, s in sorted(self.outputs.items())},
            "parameters": dict(sorted(self.parameters.items())),
            "tool": self.tool,
            "version": self.version,
        }


def manifest_path_for(output_path: str | Path) -> Path:
    """Manifest location for a command's primary output file."""
    target = Path(output_path)
    return target.with_name(target.name + ".manifest.json")


def write_manifest(manifest: RunManifest, path: str | Path) -> None:
    text = json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n"
    atomic_write_text(path, lambda fh: fh.write(text))


def read_manifest(path: str | Path) -> RunManifest:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest {path} is not valid JSON: {exc}") from exc
    try:
        return RunManifest(
            command=raw["command"],
            parameters=dict(raw["parameters"]),
            inputs={name: FileStamp(**entry) for name, entry in raw["inputs"].items()},
            outputs={name: FileStamp(**entry) for name, entry in raw["outputs"].items()},
            tool=raw["tool"],
            version=raw["version"],
            created_at=raw["created_at"],
        )
    except (KeyError, TypeError) as exc:
        raise ManifestError(f"manifest {path} is missing fields: {exc}") from exc


def resolve_stamp(entry: FileStamp, base_dir: Path, role: str) -> Path:
    """Locate a stamped file and verify its content digest.

    Paths are tried as given first, then relative to the manifest's own
    directory, so a run tree can be moved as a whole. A digest mismatch is
    an error: evaluating against silently changed inputs would produce
    numbers that look valid and are not.
    """
    candidates = [Path(entry.path)]
    if not candidates[0].is_absolute():
        candidates.append(base_dir / entry.path)
    for candidate in candidates:
        if candidate.is_file():
            actual = sha256_file(candidate)
            if actual != entry.sha256:
                raise ManifestError(
                    f"{role} file {candidate} changed since the manifest was written"
                )
            return candidate
    raise ManifestError(f"missing {role} file {entry.path}")
