"""Run manifests: enough recorded state to re-derive any output."""

from __future__ import annotations

import hashlib
import json
import time
from pathlib import Path


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def sha256_doc(doc) -> str:
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()


class RunManifest:
    """Collects inputs/outputs/spec for one command invocation."""

    def __init__(self, command: str, seed: int | None = None):
        from . import __version__

        self.doc: dict = {
            "tool": "ctaug",
            "version": __version__,
            "command": command,
            "seed": seed,
            "inputs": [],
            "outputs": [],
            "effective_spec": None,
            "spec_sha256": None,
            "started_unix": time.time(),
            "elapsed_s": None,
        }
        self._t0 = time.monotonic()

    def add_input(self, path: str | Path) -> None:
        self.doc["inputs"].append({"path": str(path), "sha256": sha256_file(path)})

    def add_output(self, path: str | Path) -> None:
        self.doc["outputs"].append(str(path))

    def set_spec(self, spec_doc) -> None:
        self.doc["effective_spec"] = spec_doc
        self.doc["spec_sha256"] = sha256_doc(spec_doc)

    def write(self, path: str | Path) -> Path:
        self.doc["elapsed_s"] = time.monotonic() - self._t0
        path = Path(path)
        path.write_text(json.dumps(self.doc, indent=2) + "\n")
        return path
