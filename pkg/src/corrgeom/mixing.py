"""Convex combinations of correlation measures and descriptive diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .correlation import CorrelationGeometry, CorrelationMeasure, aggregate, nearest_distances, regularity_report
from .equivalence import embed
from .errors import InvalidArgs
from .operator_space import check_unitary, sandwich


@dataclass(frozen=True, eq=False)
class MixSpec:
    """Mixing parameter ``tau`` and the unitary applied to the first geometry.

    ``aligner=None`` means the identity on the common space.
    """

    tau: float
    aligner: np.ndarray | None = None

    def __post_init__(self):
        if not (0.0 <= self.tau <= 1.0) or math.isnan(self.tau):
            raise InvalidArgs(f"tau must lie in [0, 1], got {self.tau}")
        if self.aligner is not None:
            object.__setattr__(self, "aligner", check_unitary(self.aligner))


def mix(g1: CorrelationGeometry, g2: CorrelationGeometry, spec: MixSpec, agg_tol: float = 1e-8) -> CorrelationGeometry:
    """``tau * rho_2 + (1 - tau) * U rho_1 U^*`` on the larger Hilbert space.

    Atoms of ``g2`` come first, then the conjugated atoms of ``g1``; the
    union is re-aggregated at ``agg_tol``. Atoms whose weight becomes zero
    are dropped, so ``tau = 1`` returns ``g2``'s atoms and ``tau = 0`` the
    conjugated atoms of ``g1`` without any re-aggregation.
    """
    f = max(g1.f, g2.f)
    g1, g2 = embed(g1, f), embed(g2, f)
    a1 = g1.atoms
    if spec.aligner is not None:
        u = check_unitary(spec.aligner, f)
        a1 = sandwich(u, a1)
    parts = []
    if spec.tau > 0 and len(g2):
        parts.append((g2.atoms, spec.tau * g2.weights))
    if spec.tau < 1 and len(g1):
        parts.append((a1, (1.0 - spec.tau) * g1.weights))
    bound = g1.bound.join(g2.bound)
    if not parts:
        mats, w = np.zeros((0, f, f), dtype=complex), np.zeros(0)
    elif len(parts) == 1:
        mats, w = parts[0]
    else:
        mats, w = aggregate(np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts]), agg_tol)
    return CorrelationGeometry(f, bound, CorrelationMeasure(mats, w, agg_tol))


def mixture_diagnostics(geom: CorrelationGeometry) -> dict:
    """Descriptive statistics of an atom cloud.

    ``spectral_spread`` is the weighted root-mean-square distance of the
    sorted atom spectra from their weighted mean spectrum. Nearest-atom
    statistics are ``None`` for fewer than two atoms.
    """
    n = len(geom)
    out = {
        "atom_count": n,
        "total_mass": geom.total_mass,
        "regular_mass_fraction": regularity_report(geom)["regular_mass_fraction"],
        "spectral_spread": 0.0,
        "nearest_atom_min": None,
        "nearest_atom_mean": None,
        "nearest_atom_max": None,
    }
    if n == 0:
        return out
    spec = geom.measure.spectra()
    w = geom.weights / geom.total_mass
    mean = w @ spec
    out["spectral_spread"] = float(np.sqrt(max(w @ np.sum((spec - mean) ** 2, axis=1), 0.0)))
    if n > 1:
        d = nearest_distances(geom.atoms)
        out.update(nearest_atom_min=float(d.min()), nearest_atom_mean=float(d.mean()), nearest_atom_max=float(d.max()))
    return out
