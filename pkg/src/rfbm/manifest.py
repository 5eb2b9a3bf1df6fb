"""JSON payloads and run manifests.

A manifest records the command, its resolved parameters, the seed and a
SHA-256 digest of every output file. Payloads never contain timestamps, so
replaying a manifest must reproduce them byte for byte.
"""

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np


def plain(obj):
    """Recursively convert numpy scalars/arrays and dataclasses to JSON types; NaN -> None."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return plain(obj.as_dict() if hasattr(obj, "as_dict") else dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return None if math.isnan(x) else x
    return obj


def dumps(obj):
    # repr of a float is the shortest string that round-trips exactly
    return json.dumps(plain(obj), indent=2, sort_keys=True, allow_nan=True) + "\n"


def write_json(path, obj):
    Path(path).write_text(dumps(obj))


def sha256_file(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def utc_now():
    return datetime.now(timezone.utc).isoformat(timespec="seconds").replace("+00:00", "Z")


@dataclass
class RunManifest:
    command: str
    parameters: dict
    seed: int
    tool_version: str
    backend: str
    started_at: str = field(default_factory=utc_now)
    outputs: list = field(default_factory=list)

    def add_output(self, path, stem):
        path = Path(path)
        self.outputs.append({
            "path": str(path),
            "suffix": path.name[len(Path(stem).name):],
            "sha256": sha256_file(path),
        })

    def to_json(self):
        return {
            "command": self.command,
            "parameters": self.parameters,
            "seed": self.seed,
            "toolVersion": self.tool_version,
            "backend": self.backend,
            "startedAt": self.started_at,
            "outputs": self.outputs,
        }

    def write(self, stem):
        path = manifest_path(stem)
        write_json(path, self.to_json())
        return path

    @classmethod
    def load(cls, path):
        d = json.loads(Path(path).read_text())
        return cls(d["command"], d["parameters"], int(d["seed"]), d["toolVersion"],
                   d.get("backend", ""), d["startedAt"], d["outputs"])


def manifest_path(stem):
    return Path(f"{stem}.manifest.json")


def compare_outputs(original, replayed):
    """Digest mismatches between two manifests, matched by output suffix."""
    old = {o["suffix"]: o["sha256"] for o in original.outputs}
    new = {o["suffix"]: o["sha256"] for o in replayed.outputs}
    problems = []
    for suffix in sorted(set(old) | set(new)):
        if old.get(suffix) != new.get(suffix):
            problems.append(suffix)
    return problems
