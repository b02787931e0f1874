"""Model files.

A model file is one JSON document::

    {
      "manifold": {"points": [[x...], ...], "weights": [w, ...],
                   "metric": [[[...]]...]?, "neighbors": [[[j, dist], ...], ...]?},
      "fields": [{"label": "...", "fiber_dim": 1, "kind": "scalar"?,
                  "values": [[[re, im], ...], ...],      # point, component
                  "jet": [[[[re, im], ...], ...], ...]?}],  # point, chart dir, component
      "descriptors": {"A": [[...], ...]?, "chi": [...]?, "mass": 0.0, "charge": 0.0},
      "kernels": {"name": [...]}?,
      "scalar_product": "L2" | {"type": ...},
      "local_form": "PointwiseSesquilinear" | {"type": ...}
    }
"""

from __future__ import annotations

import numpy as np

from ..errors import ParseError
from ..jsonio import complex_to_pairs, pairs_to_complex
from ..specs import spec_from_dict, spec_to_dict
from .types import DiscreteManifold, EffectiveModel, ReferenceField, ReferenceSystem


def model_from_dict(data: dict) -> EffectiveModel:
    if not isinstance(data, dict):
        raise ParseError("model document must be a JSON object")
    try:
        man = data["manifold"]
        coords = np.asarray(man["points"], dtype=float)
        neighbors = None
        if man.get("neighbors") is not None:
            neighbors = []
            for row in man["neighbors"]:
                row = np.asarray(row, dtype=float).reshape(-1, 2)
                neighbors.append((row[:, 0].astype(int), row[:, 1]))
        manifold = DiscreteManifold(
            coords=coords,
            weights=np.asarray(man["weights"], dtype=float),
            metric=None if man.get("metric") is None else np.asarray(man["metric"], dtype=float),
            neighbors=None if neighbors is None else tuple(neighbors),
        )
        n = manifold.n_points
        fields = []
        for fd in data["fields"]:
            dfib = int(fd["fiber_dim"])
            values = pairs_to_complex(fd["values"], (n, dfib))
            jet = None
            if fd.get("jet") is not None:
                jet = pairs_to_complex(fd["jet"], (n, manifold.dim, dfib))
            fields.append(ReferenceField(str(fd["label"]), values, jet, fd.get("kind", "scalar")))
        desc = data.get("descriptors", {}) or {}
        return EffectiveModel(
            manifold=manifold,
            system=ReferenceSystem(tuple(fields)),
            scalar_product=spec_from_dict(data.get("scalar_product", "L2")),
            local_form=spec_from_dict(data.get("local_form", "PointwiseSesquilinear")),
            potential_A=None if desc.get("A") is None else np.asarray(desc["A"], dtype=float),
            scalar_chi=None if desc.get("chi") is None else np.asarray(desc["chi"], dtype=float),
            mass=float(desc.get("mass", 0.0)),
            charge=float(desc.get("charge", 0.0)),
            kernels={k: np.asarray(v, dtype=float) for k, v in (data.get("kernels") or {}).items()},
        )
    except ParseError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ParseError(f"malformed model document: {exc!r}") from exc


def model_to_dict(model: EffectiveModel) -> dict:
    man = model.manifold
    out = {
        "manifold": {
            "points": man.coords.tolist(),
            "weights": man.weights.tolist(),
        },
        "fields": [],
        "descriptors": {"mass": model.mass, "charge": model.charge},
        "scalar_product": spec_to_dict(model.scalar_product),
        "local_form": spec_to_dict(model.local_form),
    }
    if man.metric is not None:
        out["manifold"]["metric"] = man.metric.tolist()
    if man.neighbors is not None:
        out["manifold"]["neighbors"] = [
            [[int(j), float(dj)] for j, dj in zip(idx, dist)] for idx, dist in man.neighbors
        ]
    for f in model.system.fields:
        fd = {"label": f.label, "fiber_dim": f.fiber_dim, "kind": f.kind, "values": complex_to_pairs(f.values)}
        if f.jet is not None:
            fd["jet"] = complex_to_pairs(f.jet)
        out["fields"].append(fd)
    if model.potential_A is not None:
        out["descriptors"]["A"] = model.potential_A.tolist()
    if model.scalar_chi is not None:
        out["descriptors"]["chi"] = model.scalar_chi.tolist()
    if model.kernels:
        out["kernels"] = {k: v.tolist() for k, v in model.kernels.items()}
    return out
