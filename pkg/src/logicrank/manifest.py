"""Run manifest, run-directory lock, and append-only stage outputs."""

from __future__ import annotations

import hashlib
import json
import os
import time
from contextlib import contextmanager
from pathlib import Path

from .errors import RunLocked, StageOutputMismatch

MANIFEST_NAME = "manifest.json"
LOCK_NAME = ".lock"


def file_digest(path: str | Path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def load_manifest(out_dir: str | Path) -> dict:
    path = Path(out_dir) / MANIFEST_NAME
    if path.exists():
        return json.loads(path.read_text(encoding="utf-8"))
    return {"stages": {}}


def update_manifest(out_dir: str | Path, stage: str, entry: dict) -> dict:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = load_manifest(out_dir)
    entry = dict(entry)
    entry["completed_at"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    manifest.setdefault("stages", {})[stage] = entry
    path = out_dir / MANIFEST_NAME
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(manifest, sort_keys=True, indent=1), encoding="utf-8")
    os.replace(tmp, path)
    return manifest


@contextmanager
def run_lock(out_dir: str | Path):
    """One stage process at a time per run directory."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    lock_path = out_dir / LOCK_NAME
    try:
        fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise RunLocked(f"run directory {out_dir} is locked by another stage ({lock_path})")
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield
    finally:
        lock_path.unlink(missing_ok=True)


def write_stage_output(path: str | Path, data: str) -> tuple[str, bool]:
    """Append-only write: existing outputs must match byte-for-byte.

    Returns (digest, already_existed). A mismatch against an existing file
    fails loudly instead of mutating prior artifacts.
    """
    path = Path(path)
    raw = data.encode("utf-8")
    digest = hashlib.sha256(raw).hexdigest()
    if path.exists():
        if file_digest(path) != digest:
            raise StageOutputMismatch(
                f"{path} already exists with different content; "
                "remove the run directory to regenerate"
            )
        return digest, True
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(raw)
    os.replace(tmp, path)
    return digest, False
