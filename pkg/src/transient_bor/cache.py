"""On-disk frequency-response cache.

Two layers share one directory:

* families: per-frequency values for one (body, mesh, incidence,
  observation, formulation) family, so any grid that lands on already
  solved frequencies reuses them;
* records: whole FrequencyResponse objects keyed by arbitrary fields
  (``get_or_compute``).

Every file is written to a temporary name and renamed into place, and
carries a SHA-256 of its payload; a mismatch on read is logged and the
entry treated as missing.
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Callable

import numpy as np

from .excitation import CONVENTION
from .fd_solver import FrequencyResponse

log = logging.getLogger(__name__)

ENV_VAR = "TRANSIENT_BOR_CACHE"


def default_root() -> Path:
    env = os.environ.get(ENV_VAR)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "transient_bor"


def key_of(fields: dict) -> str:
    blob = json.dumps({**fields, "convention": CONVENTION}, sort_keys=True, default=_jsonable)
    return hashlib.sha256(blob.encode()).hexdigest()[:32]


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    raise TypeError(f"cannot hash {type(x).__name__}")


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=path.suffix)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _seal(payload: str) -> str:
    return f"# sha256: {hashlib.sha256(payload.encode()).hexdigest()}\n{payload}"


def _unseal(path: Path) -> str | None:
    try:
        text = path.read_text()
    except OSError:
        return None
    head, _, payload = text.partition("\n")
    want = head.removeprefix("# sha256: ").strip()
    if hashlib.sha256(payload.encode()).hexdigest() != want:
        log.warning("cache entry %s is corrupted; recomputing", path.name)
        return None
    return payload


class ResponseCache:
    def __init__(self, root: str | os.PathLike | None = None):
        self.root = Path(root) if root is not None else default_root()
        self.root.mkdir(parents=True, exist_ok=True)
        self.hits = 0
        self.misses = 0

    # -- whole records -------------------------------------------------
    def _record_path(self, key: str) -> Path:
        return self.root / "records" / f"{key}.resp"

    def get(self, fields: dict) -> FrequencyResponse | None:
        payload = _unseal(self._record_path(key_of(fields)))
        if payload is None:
            return None
        return FrequencyResponse.from_text(payload)

    def put(self, fields: dict, resp: FrequencyResponse) -> None:
        _atomic_write(self._record_path(key_of(fields)), _seal(resp.to_text()))

    def get_or_compute(self, fields: dict, thunk: Callable[[], FrequencyResponse]) -> FrequencyResponse:
        hit = self.get(fields)
        if hit is not None:
            self.hits += 1
            return hit
        self.misses += 1
        resp = thunk()
        self.put(fields, resp)
        return resp

    # -- per-frequency families ---------------------------------------
    def family(self, fields: dict) -> Family:
        return Family(self.root / "families" / f"{key_of(fields)}.tsv")

    # -- maintenance ---------------------------------------------------
    def stats(self) -> dict:
        fams = list((self.root / "families").glob("*.tsv"))
        recs = list((self.root / "records").glob("*.resp"))
        points = 0
        for f in fams:
            payload = _unseal(f)
            if payload:
                points += sum(1 for ln in payload.splitlines() if ln and not ln.startswith("#"))
        size = sum(p.stat().st_size for p in fams + recs)
        return {"root": str(self.root), "families": len(fams), "points": points,
                "records": len(recs), "bytes": size}

    def clear(self) -> int:
        n = 0
        for sub in ("families", "records"):
            for p in (self.root / sub).glob("*"):
                p.unlink()
                n += 1
        return n


class Family:
    """Frequency -> complex value table for one observation family."""

    def __init__(self, path: Path):
        self.path = path
        self.values: dict[float, complex] = {}
        payload = _unseal(path) if path.exists() else None
        if payload:
            for ln in payload.splitlines():
                if not ln or ln.startswith("#"):
                    continue
                f, re, im = (float(x) for x in ln.split("\t"))
                self.values[f] = complex(re, im)
        self._dirty = False

    def get(self, f: float) -> complex | None:
        return self.values.get(f)

    def put(self, f: float, v: complex) -> None:
        self.values[f] = complex(v)
        self._dirty = True

    def flush(self) -> None:
        if not self._dirty:
            return
        lines = ["# f_hz\tre\tim"]
        for f in sorted(self.values):
            v = self.values[f]
            lines.append(f"{f!r}\t{v.real!r}\t{v.imag!r}")
        _atomic_write(self.path, _seal("\n".join(lines) + "\n"))
        self._dirty = False
