"""Shared plumbing: digests, run manifests, deterministic RNG gate."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

# Flipped by the CLI --seedless flag: when True, asking for an unseeded
# generator is an error instead of a silent source of nondeterminism.
_SEEDLESS = False


def set_seedless(flag: bool) -> None:
    global _SEEDLESS
    _SEEDLESS = bool(flag)


def rng(seed=None) -> np.random.Generator:
    """Central RNG constructor. Every caller in this package passes a seed."""
    if seed is None and _SEEDLESS:
        raise RuntimeError("unseeded RNG requested while --seedless is active")
    return np.random.default_rng(seed)


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def write_text(path, text: str) -> Path:
    """Write text with LF endings and UTF-8, byte-stable across runs."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)
    return path


def append_manifest(out_dir, subcommand: str, config: dict, outputs, *,
                    inputs=None, wall_time_s: float | None = None,
                    version: str | None = None) -> Path:
    """Append one JSON line describing a finished run to <out_dir>/manifest.jsonl."""
    from . import __version__

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entry = {
        "subcommand": subcommand,
        "config": config,
        "version": version or __version__,
        "inputs": {str(k): sha256_file(v) if Path(str(v)).is_file() else str(v)
                   for k, v in (inputs or {}).items()},
        "outputs": {str(Path(p).name): sha256_file(p) for p in outputs},
        "wall_time_s": wall_time_s,
    }
    path = out_dir / "manifest.jsonl"
    with open(path, "a", encoding="utf-8", newline="\n") as f:
        f.write(json.dumps(entry, sort_keys=True) + "\n")
    return path


def fmt(x) -> str:
    """Shortest round-trip decimal form for a float (stable across runs)."""
    return repr(float(x))
