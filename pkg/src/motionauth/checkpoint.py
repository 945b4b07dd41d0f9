"""Versioned model checkpoints.

A checkpoint is an ``.npz`` archive: one array per parameter/buffer (names
as produced by ``Module.state_dict``) plus ``__meta__``, a JSON document
with the format version, model kind, model config and a free-form
training manifest. Arrays are stored raw, so values round-trip bit-exactly.
"""

import json
from pathlib import Path

import numpy as np

from .errors import DataError

FORMAT = "motionauth-checkpoint"
FORMAT_VERSION = 1
_META = "__meta__"


def save_checkpoint(path, kind, config, state, manifest=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = {
        "format": FORMAT,
        "version": FORMAT_VERSION,
        "kind": kind,
        "config": config,
        "manifest": manifest or {},
        "arrays": {k: {"shape": list(v.shape), "dtype": str(v.dtype)} for k, v in state.items()},
    }
    arrays = dict(state)
    arrays[_META] = np.frombuffer(json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)
    return path


def load_checkpoint(path):
    """Returns ``(kind, config, state, manifest)``."""
    try:
        with np.load(path, allow_pickle=False) as z:
            meta = json.loads(bytes(z[_META]).decode())
            state = {k: z[k] for k in z.files if k != _META}
    except (OSError, KeyError, ValueError) as exc:
        raise DataError(f"{path}: not a readable checkpoint ({exc})") from exc
    if meta.get("format") != FORMAT or meta.get("version") != FORMAT_VERSION:
        raise DataError(f"{path}: unsupported checkpoint format {meta.get('format')} v{meta.get('version')}")
    return meta["kind"], meta["config"], state, meta["manifest"]
