"""Geometry files.

A geometry file is one JSON document::

    {"f": 3, "p": 1, "q": 0, "agg_tol": 1e-08,
     "atoms": [{"weight": 0.785..., "matrix": [[re, im], ...]}, ...],
     "provenance": {...}?}

``matrix`` is the row-major flattening of the ``f x f`` atom. Python floats
serialize with shortest round-trip repr, so a geometry read back from its
own file is bit-identical.
"""

from __future__ import annotations

import numpy as np

from .correlation import CorrelationGeometry, CorrelationMeasure
from .errors import ParseError
from .jsonio import matrix_to_pairs, pairs_to_complex
from .operator_space import SignatureBound


def geometry_to_dict(geom: CorrelationGeometry, provenance: dict | None = None) -> dict:
    out = {
        "f": geom.f,
        "p": geom.bound.p,
        "q": geom.bound.q,
        "agg_tol": geom.agg_tol,
        "atoms": [
            {"weight": float(w), "matrix": matrix_to_pairs(m)} for m, w in zip(geom.atoms, geom.weights)
        ],
    }
    if provenance is not None:
        out["provenance"] = provenance
    return out


def geometry_from_dict(data: dict) -> CorrelationGeometry:
    if not isinstance(data, dict):
        raise ParseError("geometry document must be a JSON object")
    try:
        f = int(data["f"])
        atoms = data["atoms"]
        mats = np.zeros((len(atoms), f, f), dtype=complex)
        weights = np.zeros(len(atoms))
        for i, atom in enumerate(atoms):
            mats[i] = pairs_to_complex(atom["matrix"], (f, f))
            weights[i] = float(atom["weight"])
        measure = CorrelationMeasure(mats, weights, float(data.get("agg_tol", 0.0)))
        return CorrelationGeometry(f, SignatureBound(int(data["p"]), int(data["q"])), measure)
    except ParseError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ParseError(f"malformed geometry document: {exc}") from exc
