"""Fit reports and their JSON serialization.

Reports are byte-reproducible functions of (seed, config, data): floats are
serialized with shortest-roundtrip repr and keys are sorted.  Wall-clock
runtime is therefore not part of the artifact; the CLI prints it to stderr
instead.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from .gof import GofReport
from .model import WvagParams


def data_hash(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            h.update(block)
    return h.hexdigest()


@dataclass(frozen=True)
class FitReport:
    model: str
    method: str
    params: WvagParams
    seed: int
    n_obs: int
    c: float
    invertibility_value: float
    invertibility_ok: bool
    gof: GofReport = None
    bootstrap_se: dict = None
    config: dict = field(default_factory=dict)
    data_sha256: str = None
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "method": self.method,
            "estimates": self.params.to_dict(),
            "seed": self.seed,
            "n_obs": self.n_obs,
            "c": self.c,
            "invertibility": {"value": self.invertibility_value,
                              "ok": self.invertibility_ok},
            "gof": self.gof.to_dict() if self.gof is not None else None,
            "bootstrap_se": self.bootstrap_se,
            "config": self.config,
            "data_sha256": self.data_sha256,
            "diagnostics": self.diagnostics,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def write_atomic(path, text: str):
    """Write-then-rename so partially written artifacts never appear."""
    import os
    import tempfile

    d = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
