"""JSON helpers: complex arrays as ``[re, im]`` pairs, canonical dumps, hashes."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .errors import ParseError


def complex_to_pairs(a) -> list:
    """Nested lists with a trailing ``[re, im]`` axis."""
    a = np.asarray(a, dtype=complex)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def pairs_to_complex(data, shape=None) -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"expected numeric [re, im] pairs: {exc}") from exc
    if arr.ndim == 0 or arr.shape[-1] != 2:
        raise ParseError("complex numbers must be [re, im] pairs")
    out = arr[..., 0] + 1j * arr[..., 1]
    if shape is not None:
        if out.size != int(np.prod(shape)):
            raise ParseError(f"expected {int(np.prod(shape))} complex entries, got {out.size}")
        out = out.reshape(shape)
    return out


def matrix_to_pairs(m) -> list:
    """Row-major flat list of ``[re, im]`` pairs."""
    return complex_to_pairs(np.asarray(m, dtype=complex).reshape(-1))


def dumps(payload) -> str:
    """Canonical serialization: sorted keys, fixed separators, trailing newline."""
    return json.dumps(payload, sort_keys=True, indent=1) + "\n"


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path) -> str:
    return sha256_bytes(Path(path).read_bytes())


def read_json(path):
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc
