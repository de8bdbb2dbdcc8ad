"""Canonical hashing and the on-disk response cache.

Velocity-averaged response curves are expensive, so they are cached keyed by
a canonical hash of everything that determines them: the physical parameters
(except the optical depth, which only scales the result linearly and is
re-applied on load), the frequency grid, the quadrature settings, and the
kernel backend/version.  Entries are ``.npz`` files written atomically;
corrupted or mismatched entries are treated as misses and rebuilt.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path

import numpy as np


def canonical_json(obj) -> str:
    """Serialize nested dicts/lists/scalars deterministically.

    Floats are rendered via ``float.hex`` so equal values hash equally and
    nothing depends on repr rounding.
    """

    def normalize(x):
        if isinstance(x, dict):
            return {str(k): normalize(v) for k, v in sorted(x.items())}
        if isinstance(x, (list, tuple)):
            return [normalize(v) for v in x]
        if isinstance(x, bool) or x is None or isinstance(x, (int, str)):
            return x
        if isinstance(x, float):
            return float(x).hex()
        if isinstance(x, np.integer):
            return int(x)
        if isinstance(x, np.floating):
            return float(x).hex()
        raise TypeError(f"cannot canonicalize {type(x).__name__}")

    return json.dumps(normalize(obj), sort_keys=True, separators=(",", ":"))


def canonical_hash(obj) -> str:
    """SHA-256 hex digest of the canonical serialization."""
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()


def default_cache_dir() -> Path:
    env = os.environ.get("SFWM_CACHE_DIR")
    if env:
        return Path(env)
    return Path.home() / ".cache" / "sfwm"


class ResponseCache:
    """File-backed store of velocity-averaged response curves.

    ``root=None`` disables persistence (every lookup misses).
    """

    def __init__(self, root: Path | str | None):
        self.root = Path(root) if root is not None else None
        if self.root is not None:
            self.root.mkdir(parents=True, exist_ok=True)
        self.rebuilt_keys: list[str] = []

    def _path(self, key: str) -> Path:
        return self.root / f"response-{key[:32]}.npz"

    def get(self, key: str) -> dict | None:
        """Return ``{delta_s, kappa, zeta, xi, meta}`` or ``None`` on miss."""
        if self.root is None:
            return None
        path = self._path(key)
        if not path.exists():
            return None
        try:
            with np.load(path, allow_pickle=False) as payload:
                meta = json.loads(str(payload["meta"][()]))
                entry = {
                    "delta_s": np.array(payload["delta_s"]),
                    "kappa": np.array(payload["kappa"]),
                    "zeta": np.array(payload["zeta"]),
                    "xi": np.array(payload["xi"]),
                    "meta": meta,
                }
        except Exception:  # noqa: BLE001 - any corruption counts as a miss
            self.rebuilt_keys.append(key)
            return None
        if meta.get("cache_key") != key:
            self.rebuilt_keys.append(key)
            return None
        for name in ("delta_s", "kappa", "zeta", "xi"):
            if not np.all(np.isfinite(entry[name].view(float))):
                self.rebuilt_keys.append(key)
                return None
        return entry

    def put(self, key: str, delta_s, kappa, zeta, xi, meta: dict) -> None:
        if self.root is None:
            return
        meta = dict(meta)
        meta["cache_key"] = key
        path = self._path(key)
        fd, tmp = tempfile.mkstemp(dir=self.root, suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                np.savez(
                    fh,
                    meta=np.array(json.dumps(meta, sort_keys=True)),
                    delta_s=np.asarray(delta_s),
                    kappa=np.asarray(kappa),
                    zeta=np.asarray(zeta),
                    xi=np.asarray(xi),
                )
            os.replace(tmp, path)
        except BaseException:
            try:
                os.unlink(tmp)
            except OSError:
                pass
            raise
