"""The local correlation map and the pushforward measure.

Given a model with reference fields ``psi_1..psi_m``:

* :func:`gram` integrates the chosen scalar product into an ``m x m`` Gram
  matrix ``G`` and a whitening map ``W`` with ``W G W^* = I``;
* :func:`local_form_matrices` evaluates the local Hermitian form
  ``B_x[i, j] = b_x(psi_i, psi_j)`` at every point;
* :func:`local_correlations` returns ``F(x) = W B_x W^*``, the operator on the
  whitened Hilbert space representing ``b_x``;
* :func:`pushforward` aggregates the weighted cloud ``{(F(x_k), w_k)}`` into
  a discrete measure, the correlation geometry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .errors import DegenerateSystem, EmptyBall, InvalidArgs, MissingJet, NumericalFailure
from .model.types import EffectiveModel
from .operator_space import HermitianOperator, Signature, SignatureBound, classify_spectrum, sandwich, symmetrize
from .specs import (
    EpsilonAveraged,
    GradientForm,
    L2,
    MetricOnFiber,
    PointwiseSesquilinear,
    SobolevH1,
    SobolevHk,
    WeightedCustom,
)

RANK_CUT = 1e-10
SIGNATURE_TOL = 1e-9


def canonical_phases(vecs: np.ndarray) -> np.ndarray:
    """Rotate each column so that its largest-magnitude entry is real positive."""
    vecs = np.array(vecs, dtype=complex)
    if vecs.size == 0:
        return vecs
    idx = np.argmax(np.abs(vecs), axis=0)
    pivot = vecs[idx, np.arange(vecs.shape[1])]
    phase = np.where(np.abs(pivot) > 0, np.conj(pivot) / np.maximum(np.abs(pivot), 1e-300), 1.0)
    return vecs * phase[None, :]


@dataclass(frozen=True, eq=False)
class GramMatrix:
    matrix: np.ndarray
    eigenvalues: np.ndarray
    whitening: np.ndarray

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def rank(self) -> int:
        return self.whitening.shape[0]

    def whitening_defect(self) -> float:
        w = self.whitening
        return float(np.max(np.abs(w @ self.matrix @ w.conj().T - np.eye(self.rank))))


def whiten(g: np.ndarray, rank_cut: float = RANK_CUT) -> GramMatrix:
    """Spectral whitening of a Hermitian PSD Gram matrix.

    At full rank ``W = G^{-1/2}``, which does not depend on how eigenvectors
    are chosen inside degenerate eigenspaces. Otherwise the eigenvectors with
    eigenvalue above ``rank_cut * lambda_max`` are kept, phase-canonicalized,
    and ``W = diag(lambda^{-1/2}) V^*`` maps onto the quotient by null vectors.
    """
    g = symmetrize(g)
    lam, vecs = np.linalg.eigh(g)
    top = lam[-1] if lam.size else 0.0
    if not top > 0:
        raise DegenerateSystem("Gram matrix has rank 0")
    if lam[0] < -1e-10 * top:
        raise NumericalFailure(f"Gram matrix is not positive semidefinite (min eigenvalue {lam[0]:.3g})")
    keep = lam > rank_cut * top
    if keep.all():
        w = (vecs * lam**-0.5) @ vecs.conj().T
    else:
        lam_k = lam[keep][::-1]
        v_k = canonical_phases(vecs[:, keep][:, ::-1])
        w = (lam_k**-0.5)[:, None] * v_k.conj().T
    return GramMatrix(g, lam, w)


def _fiber_metric(model: EffectiveModel) -> np.ndarray:
    d = model.system.fiber_dim
    if model.system.kind == "vector":
        return np.asarray(model.manifold.metric_or_identity())
    return np.broadcast_to(np.eye(d), (model.n_points, d, d))


def _value_form(model: EffectiveModel, fiber_metric: np.ndarray | None = None) -> np.ndarray:
    """``(n, m, m)`` stack of ``<psi_i(x), psi_j(x)>`` in the given fiber metric."""
    vals = model.system.values()
    if fiber_metric is None:
        return np.einsum("inA,jnA->nij", vals.conj(), vals)
    return np.einsum("inA,nAB,jnB->nij", vals.conj(), fiber_metric, vals)


def _jet_form(model: EffectiveModel) -> np.ndarray:
    """``(n, m, m)`` stack of ``g^{-1}(grad psi_i, grad psi_j)`` summed over fiber components."""
    jets = model.system.jets()
    ginv = np.linalg.inv(model.manifold.metric_or_identity())
    return np.einsum("inuA,nuv,jnvA->nij", jets.conj(), ginv, jets)


def gram(model: EffectiveModel) -> GramMatrix:
    """Gram matrix of the reference system under the model's scalar product."""
    sp = model.scalar_product
    w = model.manifold.weights
    metric = _fiber_metric(model) if model.system.kind == "vector" else None
    if isinstance(sp, L2):
        density = _value_form(model, metric)
    elif isinstance(sp, SobolevH1):
        density = _value_form(model, metric) + _jet_form(model)
    elif isinstance(sp, SobolevHk):
        weights = sp.weights
        if any(weights[2:]):
            raise MissingJet("only first-order jets are available; Sobolev orders above 1 need higher jets")
        density = weights[0] * _value_form(model, metric)
        if len(weights) > 1 and weights[1]:
            density = density + weights[1] * _jet_form(model)
    elif isinstance(sp, WeightedCustom):
        density = model.kernels[sp.kernel][:, None, None] * _value_form(model, metric)
    else:
        raise InvalidArgs(f"unknown scalar product {sp!r}")
    return whiten(np.einsum("n,nij->ij", w, density))


def _base_form(model: EffectiveModel, spec) -> np.ndarray:
    if isinstance(spec, PointwiseSesquilinear):
        return _value_form(model)
    if isinstance(spec, MetricOnFiber):
        if model.system.kind != "vector":
            raise InvalidArgs("metric-on-fiber form needs tangent-vector fields")
        return _value_form(model, _fiber_metric(model))
    if isinstance(spec, GradientForm):
        return _jet_form(model)
    raise InvalidArgs(f"unknown local form {spec!r}")


def epsilon_balls(model: EffectiveModel, epsilon: float) -> list[np.ndarray]:
    """Point indices in ``B_eps(x)``: ``x`` itself plus neighbors closer than ``epsilon``."""
    nbrs = model.manifold.neighbors
    if nbrs is None:
        raise EmptyBall("epsilon averaging requires neighbor lists")
    balls = []
    for i, (idx, dist) in enumerate(nbrs):
        inside = idx[(dist < epsilon) & (idx != i)]
        balls.append(np.concatenate([[i], np.sort(inside)]).astype(int))
    return balls


def local_form_matrices(model: EffectiveModel, spec=None) -> np.ndarray:
    """``B_x`` at every point, shape ``(n, m, m)``."""
    spec = model.local_form if spec is None else spec
    if not isinstance(spec, EpsilonAveraged):
        return symmetrize(_base_form(model, spec))
    inner = symmetrize(_base_form(model, spec.inner))
    w = model.manifold.weights
    out = np.empty_like(inner)
    for i, ball in enumerate(epsilon_balls(model, spec.epsilon)):
        wb = w[ball]
        out[i] = np.einsum("k,kij->ij", wb, inner[ball]) / math.fsum(wb.tolist())
    return out


def local_form_matrix(model: EffectiveModel, point_index: int, spec=None) -> np.ndarray:
    if not 0 <= point_index < model.n_points:
        raise InvalidArgs(f"point index {point_index} out of range")
    return local_form_matrices(model, spec)[point_index]


def local_correlations(model: EffectiveModel, g: GramMatrix | None = None) -> np.ndarray:
    """``F(x) = W B_x W^*`` at every point, shape ``(n, f, f)``."""
    g = gram(model) if g is None else g
    w = g.whitening
    return sandwich(w, local_form_matrices(model))


def local_correlation(model: EffectiveModel, point_index: int) -> HermitianOperator:
    if not 0 <= point_index < model.n_points:
        raise InvalidArgs(f"point index {point_index} out of range")
    return HermitianOperator(local_correlations(model)[point_index])


@dataclass(frozen=True, eq=False)
class CorrelationMeasure:
    """Weighted atoms ``(F_i, w_i)``; ``matrices`` has shape ``(k, f, f)``."""

    matrices: np.ndarray
    weights: np.ndarray
    agg_tol: float = 0.0

    def __post_init__(self):
        mats = np.array(self.matrices, dtype=complex)
        if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
            raise InvalidArgs(f"atoms must have shape (k, f, f), got {mats.shape}")
        w = np.array(self.weights, dtype=float)
        if w.shape != (mats.shape[0],):
            raise InvalidArgs("need one weight per atom")
        if not np.all(np.isfinite(mats)) or not np.all(np.isfinite(w)):
            raise InvalidArgs("atoms and weights must be finite")
        if np.any(w <= 0):
            raise InvalidArgs("atom weights must be positive")
        if not np.array_equal(mats, symmetrize(mats)):
            mats = symmetrize(mats)
        mats.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "matrices", mats)
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return self.matrices.shape[0]

    @property
    def f(self) -> int:
        return self.matrices.shape[1]

    @property
    def total_mass(self) -> float:
        return math.fsum(self.weights.tolist())

    def spectra(self) -> np.ndarray:
        """Eigenvalues of every atom, descending, shape ``(k, f)``."""
        cached = self.__dict__.get("_spectra")
        if cached is None:
            if len(self) == 0:
                cached = np.zeros((0, self.f))
            else:
                cached = np.ascontiguousarray(np.linalg.eigvalsh(self.matrices)[:, ::-1])
            cached.setflags(write=False)
            object.__setattr__(self, "_spectra", cached)
        return cached

    def operator(self, i: int) -> HermitianOperator:
        return HermitianOperator(self.matrices[i])


@dataclass(frozen=True, eq=False)
class CorrelationGeometry:
    """Hilbert dimension, signature bound and the measure on F^{p,q}."""

    f: int
    bound: SignatureBound
    measure: CorrelationMeasure

    def __post_init__(self):
        if self.measure.f != self.f:
            raise InvalidArgs(f"atoms have dim {self.measure.f}, geometry declares f={self.f}")
        sig = atom_signatures(self.measure)
        if len(self.measure) and (np.any(sig.n_pos > self.bound.p) or np.any(sig.n_neg > self.bound.q)):
            raise InvalidArgs(f"some atoms are not in F^({self.bound.p},{self.bound.q})")

    @property
    def atoms(self) -> np.ndarray:
        return self.measure.matrices

    @property
    def weights(self) -> np.ndarray:
        return self.measure.weights

    @property
    def total_mass(self) -> float:
        return self.measure.total_mass

    @property
    def agg_tol(self) -> float:
        return self.measure.agg_tol

    def __len__(self) -> int:
        return len(self.measure)


def atom_signatures(measure: CorrelationMeasure, tol: float = SIGNATURE_TOL) -> Signature:
    return classify_spectrum(measure.spectra(), tol)


def max_signature(measure: CorrelationMeasure, tol: float = SIGNATURE_TOL) -> SignatureBound:
    if len(measure) == 0:
        return SignatureBound(0, 0)
    sig = atom_signatures(measure, tol)
    return SignatureBound(int(sig.n_pos.max()), int(sig.n_neg.max()))


def make_geometry(matrices, weights, agg_tol: float = 0.0, bound: SignatureBound | None = None) -> CorrelationGeometry:
    """Build a geometry from atoms; ``bound`` defaults to the componentwise max signature."""
    measure = CorrelationMeasure(matrices, weights, agg_tol)
    found = max_signature(measure)
    return CorrelationGeometry(measure.f, found if bound is None else bound, measure)


def with_bound(geom: CorrelationGeometry, bound: SignatureBound) -> CorrelationGeometry:
    """Same measure, regarded inside a (larger) F^{p,q}."""
    return CorrelationGeometry(geom.f, bound, geom.measure)


def flatten_real(mats: np.ndarray) -> np.ndarray:
    """Real vectors whose Euclidean norm is the Hilbert-Schmidt norm."""
    mats = np.asarray(mats)
    k = mats.shape[0]
    flat = mats.reshape(k, -1)
    return np.concatenate([flat.real, flat.imag], axis=1)


def aggregate(matrices, weights, agg_tol: float):
    """Greedy clustering of a weighted operator cloud in index order.

    Operator ``k`` joins the earliest cluster whose seed lies within
    ``agg_tol * max(1, ||F_k||)`` in Hilbert-Schmidt distance, otherwise it
    seeds a new cluster. Cluster weights are exactly rounded sums; the
    representative of a multi-member cluster is the weighted mean,
    re-symmetrized, and a singleton keeps its operator bit for bit.
    """
    mats = np.asarray(matrices, dtype=complex)
    w = np.asarray(weights, dtype=float)
    n = mats.shape[0]
    if agg_tol < 0 or math.isnan(agg_tol):
        raise InvalidArgs("agg_tol must be nonnegative")
    if n == 0:
        return mats, w
    if math.isinf(agg_tol):
        labels = np.zeros(n, dtype=int)
    else:
        norms = np.max(np.abs(np.linalg.eigvalsh(mats)), axis=1)
        radii = agg_tol * np.maximum(1.0, norms)
        labels = _greedy_labels(flatten_real(mats), radii)
    out_m, out_w = [], []
    for c in range(labels.max() + 1):
        members = np.flatnonzero(labels == c)
        wc = w[members]
        total = math.fsum(wc.tolist())
        if members.size == 1:
            out_m.append(mats[members[0]])
        else:
            out_m.append(symmetrize(np.einsum("k,kij->ij", wc, mats[members]) / total))
        out_w.append(total)
    return np.array(out_m), np.array(out_w)


def _greedy_labels(points: np.ndarray, radii: np.ndarray, block: int = 256) -> np.ndarray:
    """Cluster label per point: the earliest seed within ``radii[k]``, else a new seed.

    Distances to existing seeds are screened blockwise through the Gram
    expansion with a generous rounding margin, then confirmed exactly.
    """
    n = points.shape[0]
    labels = np.full(n, -1, dtype=int)
    sq = np.einsum("ij,ij->i", points, points)
    seeds = np.zeros(0, dtype=int)
    for start in range(0, n, block):
        stop = min(start + block, n)
        if seeds.size:
            d2 = sq[start:stop, None] + sq[None, seeds] - 2.0 * points[start:stop] @ points[seeds].T
            slack = 1e-9 * (sq[start:stop, None] + sq[None, seeds]) + 1e-300
            screen = d2 <= (radii[start:stop, None] ** 2 + slack)
        xb = points[start:stop]
        d2_in = sq[start:stop, None] + sq[None, start:stop] - 2.0 * xb @ xb.T
        slack_in = 1e-9 * (sq[start:stop, None] + sq[None, start:stop]) + 1e-300
        screen_in = d2_in <= (radii[start:stop, None] ** 2 + slack_in)
        new_seeds: list[int] = []
        for k in range(start, stop):
            if seeds.size:
                for s in np.flatnonzero(screen[k - start]):
                    if np.linalg.norm(points[seeds[s]] - points[k]) <= radii[k]:
                        labels[k] = s
                        break
                if labels[k] >= 0:
                    continue
            for pos, s in enumerate(new_seeds):
                if screen_in[k - start, s - start] and np.linalg.norm(points[s] - points[k]) <= radii[k]:
                    labels[k] = seeds.size + pos
                    break
            if labels[k] >= 0:
                continue
            labels[k] = seeds.size + len(new_seeds)
            new_seeds.append(k)
        seeds = np.concatenate([seeds, np.array(new_seeds, dtype=int)])
    return labels


def pushforward(model: EffectiveModel, agg_tol: float = 1e-8) -> CorrelationGeometry:
    """Correlation geometry of a model: the volume measure pushed through ``x -> F(x)``."""
    mats, w = aggregate(local_correlations(model), model.manifold.weights, agg_tol)
    return make_geometry(mats, w, agg_tol)


def nearest_distances(mats: np.ndarray) -> np.ndarray:
    """Hilbert-Schmidt distance from each atom to its nearest other atom."""
    k = mats.shape[0]
    if k < 2:
        return np.full(k, np.inf)
    x = flatten_real(mats)
    sq = np.einsum("ij,ij->i", x, x)
    nearest = np.empty(k, dtype=int)
    chunk = 512
    for start in range(0, k, chunk):
        block = x[start : start + chunk]
        d2 = sq[start : start + chunk, None] + sq[None, :] - 2 * block @ x.T
        d2[np.arange(block.shape[0]), np.arange(start, start + block.shape[0])] = np.inf
        nearest[start : start + chunk] = np.argmin(d2, axis=1)
    return np.linalg.norm(x - x[nearest], axis=1)


def regularity_report(geom: CorrelationGeometry, tol: float = SIGNATURE_TOL) -> dict:
    """Share of measure on the regular stratum and a histogram of atom signatures."""
    sig = atom_signatures(geom.measure, tol)
    mass = geom.total_mass
    hist: dict[str, dict] = {}
    regular_mass = []
    for i in range(len(geom)):
        key = f"{sig.n_pos[i]},{sig.n_neg[i]},{sig.n_zero[i]}"
        entry = hist.setdefault(key, {"atoms": 0, "mass": 0.0})
        entry["atoms"] += 1
        entry["mass"] += float(geom.weights[i])
        if sig.n_pos[i] == geom.bound.p and sig.n_neg[i] == geom.bound.q:
            regular_mass.append(float(geom.weights[i]))
    return {
        "regular_mass_fraction": math.fsum(regular_mass) / mass if mass > 0 else 0.0,
        "atom_count": len(geom),
        "signature_histogram": dict(sorted(hist.items())),
    }


def resolution_study(
    family: Callable[[int], EffectiveModel],
    ns: Iterable[int],
    agg_tol: float = 1e-8,
) -> list[dict]:
    """Atom count and minimal atom separation of ``family(n)`` for each ``n``."""
    rows = []
    for n in ns:
        geom = pushforward(family(n), agg_tol)
        sep = nearest_distances(geom.atoms)
        rows.append(
            {
                "N": int(n),
                "atom_count": len(geom),
                "min_separation": float(sep.min()) if len(geom) > 1 else None,
            }
        )
    return rows
