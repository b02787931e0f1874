"""Discrete effective models: sampled manifold, reference fields, descriptors."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from ..errors import EmptyBall, InvalidArgs, MissingJet
from ..specs import (
    EpsilonAveraged,
    GradientForm,
    L2,
    LocalFormSpec,
    MetricOnFiber,
    PointwiseSesquilinear,
    ScalarProductSpec,
    SobolevH1,
    SobolevHk,
    WeightedCustom,
)

FIBER_KINDS = ("scalar", "vector", "spinor")


def _frozen(a, dtype) -> np.ndarray:
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DiscreteManifold:
    """Sample points with positive volume weights.

    ``metric`` is an optional ``(n, d, d)`` stack of Riemannian metrics in the
    chart; where it is absent the chart is treated as flat. ``neighbors`` is
    an optional per-point tuple ``(indices, distances)`` listing points at
    geodesic-estimate distance, used for epsilon-ball averaging.
    """

    coords: np.ndarray
    weights: np.ndarray
    metric: np.ndarray | None = None
    neighbors: tuple[tuple[np.ndarray, np.ndarray], ...] | None = None

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=float)
        if coords.ndim == 1:
            coords = coords[:, None]
        object.__setattr__(self, "coords", _frozen(coords, float))
        w = _frozen(self.weights, float)
        object.__setattr__(self, "weights", w)
        n, d = self.coords.shape
        if w.shape != (n,):
            raise InvalidArgs(f"expected {n} weights, got shape {w.shape}")
        if n == 0:
            raise InvalidArgs("manifold has no points")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise InvalidArgs("volume weights must be positive and finite")
        if self.metric is not None:
            g = _frozen(self.metric, float)
            if g.shape != (n, d, d):
                raise InvalidArgs(f"metric must have shape {(n, d, d)}, got {g.shape}")
            if not np.allclose(g, np.swapaxes(g, 1, 2), rtol=0, atol=1e-12 * max(1.0, np.abs(g).max())):
                raise InvalidArgs("metric must be symmetric")
            if np.any(np.linalg.eigvalsh(g)[:, 0] <= 0):
                raise InvalidArgs("metric must be positive definite at every point")
            object.__setattr__(self, "metric", g)
        if self.neighbors is not None:
            object.__setattr__(self, "neighbors", _check_neighbors(self.neighbors, n))

    @property
    def n_points(self) -> int:
        return self.coords.shape[0]

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    @property
    def total_volume(self) -> float:
        # fsum is exactly rounded, hence independent of point order
        return math.fsum(self.weights.tolist())

    def metric_or_identity(self) -> np.ndarray:
        if self.metric is not None:
            return self.metric
        return np.broadcast_to(np.eye(self.dim), (self.n_points, self.dim, self.dim))

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        for a in (self.coords, self.weights):
            h.update(np.ascontiguousarray(a).tobytes())
        return h.hexdigest()


def _check_neighbors(neighbors, n):
    out = []
    if len(neighbors) != n:
        raise InvalidArgs("need one neighbor list per point")
    for idx, dist in neighbors:
        idx = _frozen(idx, int)
        dist = _frozen(dist, float)
        if idx.shape != dist.shape or idx.ndim != 1:
            raise InvalidArgs("neighbor indices and distances must be 1-D of equal length")
        if idx.size and (idx.min() < 0 or idx.max() >= n):
            raise InvalidArgs("neighbor index out of range")
        if np.any(dist < 0):
            raise InvalidArgs("neighbor distances must be nonnegative")
        out.append((idx, dist))
    lookup = [dict(zip(i.tolist(), d.tolist())) for i, d in out]
    for a, table in enumerate(lookup):
        for b, dab in table.items():
            dba = lookup[b].get(a)
            if dba is not None and abs(dab - dba) > 1e-9:
                raise InvalidArgs(f"neighbor distance not symmetric between {a} and {b}")
    return tuple(out)


@dataclass(frozen=True, eq=False)
class ReferenceField:
    """One section of the fiber bundle, sampled at every point.

    ``values`` has shape ``(n, d_fib)``. ``jet`` is the optional first
    derivative along chart directions, shape ``(n, d_man, d_fib)``.
    ``kind`` tells transforms how the fiber transforms under a change of
    chart: ``"vector"`` fibers are tangent vectors, the rest are inert.
    """

    label: str
    values: np.ndarray
    jet: np.ndarray | None = None
    kind: str = "scalar"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim == 1:
            v = v[:, None]
        object.__setattr__(self, "values", _frozen(v, complex))
        if self.kind not in FIBER_KINDS:
            raise InvalidArgs(f"unknown fiber kind {self.kind!r}")
        if not np.all(np.isfinite(v)):
            raise InvalidArgs(f"field {self.label!r} has non-finite values")
        if self.jet is not None:
            j = np.asarray(self.jet, dtype=complex)
            if j.ndim == 2:
                j = j[:, :, None]
            if j.shape[0] != v.shape[0] or j.shape[2] != v.shape[1]:
                raise InvalidArgs(f"jet of {self.label!r} has shape {j.shape}, values {v.shape}")
            object.__setattr__(self, "jet", _frozen(j, complex))

    @property
    def fiber_dim(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True, eq=False)
class ReferenceSystem:
    fields: tuple[ReferenceField, ...]

    def __post_init__(self):
        fields = tuple(self.fields)
        object.__setattr__(self, "fields", fields)
        if not fields:
            raise InvalidArgs("a reference system needs at least one field")
        shape = fields[0].values.shape
        if any(f.values.shape != shape for f in fields):
            raise InvalidArgs("all reference fields must share the point set and fiber dimension")
        if len({f.kind for f in fields}) != 1:
            raise InvalidArgs("all reference fields must share the fiber kind")

    def __len__(self) -> int:
        return len(self.fields)

    @property
    def fiber_dim(self) -> int:
        return self.fields[0].fiber_dim

    @property
    def kind(self) -> str:
        return self.fields[0].kind

    @property
    def has_jets(self) -> bool:
        return all(f.jet is not None for f in self.fields)

    def values(self) -> np.ndarray:
        """Stacked values, shape ``(m, n, d_fib)``."""
        return np.stack([f.values for f in self.fields])

    def jets(self) -> np.ndarray:
        """Stacked jets, shape ``(m, n, d_man, d_fib)``."""
        if not self.has_jets:
            raise MissingJet("reference system lacks first-order jets")
        return np.stack([f.jet for f in self.fields])


@dataclass(frozen=True, eq=False)
class EffectiveModel:
    """A sampled manifold, reference system and descriptors.

    ``extras`` carries generator provenance and descriptors added by
    transforms (for example the diffeomorphism data). ``kernels`` holds
    per-point weights referenced by :class:`WeightedCustom`.
    """

    manifold: DiscreteManifold
    system: ReferenceSystem
    scalar_product: ScalarProductSpec = field(default_factory=L2)
    local_form: LocalFormSpec = field(default_factory=PointwiseSesquilinear)
    potential_A: np.ndarray | None = None
    scalar_chi: np.ndarray | None = None
    mass: float = 0.0
    charge: float = 0.0
    kernels: dict[str, np.ndarray] = field(default_factory=dict)
    extras: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        n, d = self.manifold.n_points, self.manifold.dim
        if self.system.fields[0].values.shape[0] != n:
            raise InvalidArgs("reference fields are not sampled on the manifold points")
        for f in self.system.fields:
            if f.jet is not None and f.jet.shape[1] != d:
                raise InvalidArgs(f"jet of {f.label!r} has {f.jet.shape[1]} chart directions, manifold has {d}")
        if self.potential_A is not None:
            a = np.asarray(self.potential_A, dtype=float)
            if a.ndim == 1:
                a = a[:, None]
            if a.shape != (n, d):
                raise InvalidArgs(f"potential A must have shape {(n, d)}")
            object.__setattr__(self, "potential_A", _frozen(a, float))
        if self.scalar_chi is not None:
            chi = _frozen(self.scalar_chi, float)
            if chi.shape != (n,):
                raise InvalidArgs("chi must have one value per point")
            object.__setattr__(self, "scalar_chi", chi)
        kernels = {}
        for key, k in self.kernels.items():
            k = _frozen(k, float)
            if k.shape != (n,) or np.any(k <= 0):
                raise InvalidArgs(f"kernel {key!r} must be positive with one value per point")
            kernels[key] = k
        object.__setattr__(self, "kernels", kernels)
        self._check_requirements()

    def _check_requirements(self) -> None:
        sp = self.scalar_product
        if isinstance(sp, SobolevH1) and not self.system.has_jets:
            raise MissingJet("H1 scalar product requires jets")
        if isinstance(sp, SobolevHk) and sp.k >= 1 and any(sp.weights[1:]) and not self.system.has_jets:
            raise MissingJet("Sobolev scalar product requires jets")
        if isinstance(sp, WeightedCustom) and sp.kernel not in self.kernels:
            raise InvalidArgs(f"kernel {sp.kernel!r} is not defined on the model")
        form = self.local_form
        inner = form.inner if isinstance(form, EpsilonAveraged) else form
        if isinstance(form, EpsilonAveraged) and self.manifold.neighbors is None:
            raise EmptyBall("epsilon averaging requires neighbor lists")
        if isinstance(inner, GradientForm) and not self.system.has_jets:
            raise MissingJet("gradient form requires jets")
        if isinstance(inner, MetricOnFiber) and (
            self.system.kind != "vector" or self.system.fiber_dim != self.manifold.dim
        ):
            raise InvalidArgs("metric-on-fiber form needs tangent-vector fields")

    @property
    def n_points(self) -> int:
        return self.manifold.n_points

    @property
    def n_fields(self) -> int:
        return len(self.system)

    def with_(self, **changes) -> "EffectiveModel":
        return replace(self, **changes)

    @property
    def generator(self) -> dict[str, Any] | None:
        return self.extras.get("generator")


@dataclass(frozen=True)
class LatticeDiracModel:
    """Parameters of the 1-D lattice Dirac operator (2-spinors, ``sites`` sites)."""

    sites: int
    spacing: float = 1.0
    mass: float = 1.0
    charge: float = 1.0
    potential: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.sites < 4 or self.sites % 2:
            raise InvalidArgs("lattice needs an even number of sites >= 4")
        if not self.spacing > 0:
            raise InvalidArgs("lattice spacing must be positive")
        if self.potential is not None:
            pot = tuple(float(a) for a in self.potential)
            if len(pot) != self.sites:
                raise InvalidArgs("need one potential value per site")
            object.__setattr__(self, "potential", pot)

    def potential_array(self) -> np.ndarray:
        if self.potential is None:
            return np.zeros(self.sites)
        return np.array(self.potential, dtype=float)
