"""Run manifests: resolved configuration, outputs with content hashes, timings"""
from __future__ import annotations

import hashlib
import platform
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from .. import __version__
from .tables import write_json

MANIFEST_NAME = "manifest.json"


def sha256_file(path, chunk_bytes: int = 1 << 20) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(chunk_bytes), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class Manifest:
    command: str
    config: dict
    mesh: dict = field(default_factory=dict)
    convergence: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    files: dict = field(default_factory=dict)

    def add_file(self, path) -> None:
        path = Path(path)
        self.files[path.name] = {"sha256": sha256_file(path), "bytes": path.stat().st_size}

    def as_dict(self) -> dict:
        return {
            "command": self.command,
            "version": __version__,
            "environment": {
                "python": platform.python_version(),
                "numpy": np.__version__,
                "scipy": scipy.__version__,
            },
            "config": self.config,
            "mesh": self.mesh,
            "convergence": self.convergence,
            "timings": self.timings,
            "files": dict(sorted(self.files.items())),
        }

    def write(self, out_dir) -> Path:
        return write_json(self.as_dict(), Path(out_dir) / MANIFEST_NAME)
