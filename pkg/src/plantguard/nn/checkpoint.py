"""Parameter checkpoints: one .npz per model.

Layout (format "pg-ckpt-1"): every parameter array is stored under
``param/<registry name>``; a JSON metadata blob (shapes, seed, anything the
caller passes) is stored under ``meta``. Loading restores float64 arrays and
the metadata dict. The format string is checked so future layouts can evolve
without silently misreading old files.
"""

from __future__ import annotations

import io
import json
import os

import numpy as np

from plantguard.errors import SchemaError

FORMAT = "pg-ckpt-1"


def save_params(path: str | os.PathLike, params: dict, meta: dict | None = None) -> None:
    meta = dict(meta or {})
    meta["format"] = FORMAT
    meta["shapes"] = {name: list(arr.shape) for name, arr in params.items()}
    arrays = {f"param/{name}": np.asarray(arr, dtype=np.float64) for name, arr in params.items()}
    arrays["meta"] = np.frombuffer(json.dumps(meta).encode("utf-8"), dtype=np.uint8)
    buf = io.BytesIO()
    np.savez(buf, **arrays)
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def load_params(path: str | os.PathLike) -> tuple[dict, dict]:
    """Returns (params, meta); raises SchemaError on unknown format."""
    with np.load(path) as npz:
        meta = json.loads(bytes(npz["meta"]).decode("utf-8"))
        if meta.get("format") != FORMAT:
            raise SchemaError(f"unknown checkpoint format {meta.get('format')!r}")
        params = {
            key[len("param/"):]: npz[key].astype(np.float64)
            for key in npz.files
            if key.startswith("param/")
        }
    return params, meta


def assign_params(target: dict, source: dict) -> None:
    """Copies ``source`` arrays into the registry ``target``, shape-checked."""
    missing = set(target) - set(source)
    extra = set(source) - set(target)
    if missing or extra:
        raise SchemaError(f"parameter registry mismatch: missing={sorted(missing)} extra={sorted(extra)}")
    for name, arr in target.items():
        if source[name].shape != arr.shape:
            raise SchemaError(
                f"shape mismatch for {name!r}: checkpoint {source[name].shape}, model {arr.shape}"
            )
        arr[...] = source[name]
