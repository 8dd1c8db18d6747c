"""Atomic file writes and JSON helpers shared by the generators and the CLI."""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path


def atomic_write_text(path, text: str) -> None:
    """Write via a temp file in the same directory, then rename into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_json(path, obj) -> None:
    # json emits shortest round-trip decimals for floats, so dumps are lossless
    atomic_write_text(path, json.dumps(obj, indent=2) + "\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)
