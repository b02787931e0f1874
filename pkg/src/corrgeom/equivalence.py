"""Unitary equivalence, gauge and diffeomorphism checks, symmetries.

Two geometries are equivalent when some unitary ``U`` carries one measure
onto the other. The test here is sound but incomplete:

* conjugation-invariant quantities (total mass, weighted trace power sums,
  support size, the weighted multiset of atom spectra) that disagree prove
  inequivalence, and the differing quantity is returned as a certificate;
* an explicit ``U`` together with an atom pairing that matches every atom
  within tolerance proves equivalence;
* anything else is reported as inconclusive.

Witness search
--------------
Atoms are first paired only where weights and spectra agree. A depth-first
search then fixes "anchor" pairs one at a time, pruning with the pairwise
invariants ``tr(F_i F_a)`` and the triple traces ``tr(F_i F_a F_b)`` against
anchors already fixed. After each anchor, a candidate ``U`` is computed
from the anchors: eigenvectors of a random combination ``sum_a c_a F_a``
are aligned with those of the matching combination on the other side, the
leftover diagonal phases are solved along a maximum spanning tree of the
off-diagonal entries, and, when the combination has repeated eigenvalues
and ``f`` is small, ``U`` is taken as the polar factor of a random
solution of the linear intertwining equations ``F'_a X = X F_a``. The
candidate is accepted once all atoms can be matched under it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .correlation import (
    CorrelationGeometry,
    aggregate,
    atom_signatures,
    canonical_phases,
    flatten_real,
    gram,
    local_form_matrices,
    make_geometry,
    pushforward,
    regularity_report,
)
from .errors import DimMismatch, FormNotCovariant, InvalidEmbedding, Unsupported
from .jsonio import matrix_to_pairs, pairs_to_complex
from .model.generators import lattice_dirac_hamiltonian, lattice_dirac_sea
from .model.transforms import apply_diffeo, apply_gauge_phase
from .model.types import EffectiveModel, LatticeDiracModel
from .operator_space import check_unitary, sandwich, symmetrize
from .specs import EpsilonAveraged, MetricOnFiber, PointwiseSesquilinear

PROFILE_TOL = 1e-9
MAX_RETRIES = 8
INTERTWINER_MAX_DIM = 24


# ---------------------------------------------------------------- invariants


@dataclass(frozen=True, eq=False)
class InvariantProfile:
    total_mass: float
    weights: np.ndarray
    spectra: np.ndarray
    power_sums: tuple[float, ...]
    scale: float

    @property
    def atom_count(self) -> int:
        return self.weights.shape[0]

    def sorted_atoms(self) -> list[tuple[float, tuple[float, ...]]]:
        """``(weight, spectrum)`` per atom, lexicographically sorted."""
        return sorted((float(w), tuple(s.tolist())) for w, s in zip(self.weights, self.spectra))


def invariant_profile(geom: CorrelationGeometry, tol: float = PROFILE_TOL) -> InvariantProfile:
    """Conjugation-invariant summary of a geometry.

    Eigenvalues with ``|lambda| <= tol * ||F||`` are set to zero; power sums
    are ``M_r = sum_i w_i tr(F_i^r)`` for ``r = 1..4``.
    """
    spec = geom.measure.spectra()
    if spec.size:
        norms = np.max(np.abs(spec), axis=1, keepdims=True)
        spec = np.where(np.abs(spec) <= tol * norms, 0.0, spec)
    w = geom.weights
    sums = tuple(math.fsum((w * np.sum(spec**r, axis=1)).tolist()) for r in range(1, 5))
    scale = float(np.max(np.abs(spec))) if spec.size else 0.0
    return InvariantProfile(geom.total_mass, w.copy(), spec, sums, scale)


def _spectral_candidates(p1: InvariantProfile, p2: InvariantProfile, tol: float) -> list[np.ndarray]:
    """For each atom of ``p1``, the atoms of ``p2`` with matching weight and spectrum."""
    scale = max(p1.scale, p2.scale, 1e-300)
    wthr = tol * max(float(np.max(p1.weights, initial=0)), float(np.max(p2.weights, initial=0)))
    sthr = tol * scale
    if p2.atom_count == 0:
        return [np.zeros(0, dtype=int) for _ in range(p1.atom_count)]
    order = np.argsort(p2.spectra[:, 0], kind="stable")
    key = p2.spectra[order, 0]
    lo = np.searchsorted(key, p1.spectra[:, 0] - sthr, side="left")
    hi = np.searchsorted(key, p1.spectra[:, 0] + sthr, side="right")
    out = []
    for i in range(p1.atom_count):
        js = order[lo[i] : hi[i]]
        ok = (np.max(np.abs(p2.spectra[js] - p1.spectra[i]), axis=1) <= sthr) & (
            np.abs(p2.weights[js] - p1.weights[i]) <= wthr
        )
        out.append(np.sort(js[ok]))
    return out


def _perfect_matching(cand: list[np.ndarray], n2: int) -> np.ndarray | None:
    n1 = len(cand)
    if n1 != n2:
        return None
    if n1 == 0:
        return np.zeros(0, dtype=int)
    rows = np.concatenate([np.full(len(c), i) for i, c in enumerate(cand)]).astype(int)
    cols = np.concatenate(cand).astype(int) if rows.size else np.zeros(0, dtype=int)
    graph = csr_matrix((np.ones(rows.size), (rows, cols)), shape=(n1, n2))
    match = maximum_bipartite_matching(graph, perm_type="column")
    return None if np.any(match < 0) else match


def compare_profiles(p1: InvariantProfile, p2: InvariantProfile, tol: float) -> list[dict]:
    """All invariants on which the two profiles differ by more than tolerance.

    Each entry is a checkable certificate ``{invariant, value_1, value_2,
    difference, threshold}``.
    """
    certs = []
    mass_scale = max(abs(p1.total_mass), abs(p2.total_mass))
    scale = max(p1.scale, p2.scale)

    def note(name, a, b, thr):
        if abs(a - b) > thr:
            certs.append({"invariant": name, "value_1": a, "value_2": b, "difference": abs(a - b), "threshold": thr})

    note("total_mass", p1.total_mass, p2.total_mass, tol * mass_scale)
    for r, (a, b) in enumerate(zip(p1.power_sums, p2.power_sums), start=1):
        note(f"power_sum_{r}", a, b, tol * mass_scale * scale**r)
    if p1.atom_count != p2.atom_count:
        certs.append(
            {
                "invariant": "atom_count",
                "value_1": p1.atom_count,
                "value_2": p2.atom_count,
                "difference": abs(p1.atom_count - p2.atom_count),
                "threshold": 0,
            }
        )
    else:
        match = _perfect_matching(_spectral_candidates(p1, p2, tol), p2.atom_count)
        if match is None:
            matched = _matched_count(_spectral_candidates(p1, p2, tol), p2.atom_count)
            certs.append(
                {
                    "invariant": "spectra",
                    "value_1": p1.atom_count,
                    "value_2": matched,
                    "difference": p1.atom_count - matched,
                    "threshold": 0,
                    "note": "value_2 is the largest number of atoms pairable by weight and spectrum",
                }
            )
    return certs


def _matched_count(cand, n2) -> int:
    n1 = len(cand)
    if n1 == 0 or n2 == 0:
        return 0
    rows = np.concatenate([np.full(len(c), i) for i, c in enumerate(cand)]).astype(int)
    cols = np.concatenate(cand).astype(int)
    graph = csr_matrix((np.ones(rows.size), (rows, cols)), shape=(n1, n2))
    return int(np.sum(maximum_bipartite_matching(graph, perm_type="column") >= 0))


# ------------------------------------------------------------------ verdicts


@dataclass(frozen=True, eq=False)
class Equivalent:
    witness: np.ndarray
    pairing: np.ndarray
    residual: float
    weight_mismatch: float
    scale: float
    diagnostics: dict = field(default_factory=dict)
    verdict: str = "equivalent"

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "residual": self.residual,
            "scale": self.scale,
            "weight_mismatch": self.weight_mismatch,
            "witness": matrix_to_pairs(self.witness),
            "pairing": [int(j) for j in self.pairing],
            "diagnostics": self.diagnostics,
        }


@dataclass(frozen=True, eq=False)
class Inequivalent:
    certificate: dict
    certificates: tuple[dict, ...] = ()
    diagnostics: dict = field(default_factory=dict)
    verdict: str = "inequivalent"

    @property
    def residual(self) -> None:
        return None

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "residual": None,
            "certificate": self.certificate,
            "certificates": list(self.certificates),
            "diagnostics": self.diagnostics,
        }


@dataclass(frozen=True, eq=False)
class Inconclusive:
    reason: str
    diagnostics: dict = field(default_factory=dict)
    verdict: str = "inconclusive"

    @property
    def residual(self) -> None:
        return None

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "residual": None, "reason": self.reason, "diagnostics": self.diagnostics}


EquivalenceVerdict = Union[Equivalent, Inequivalent, Inconclusive]


def verdict_witness(data: dict) -> np.ndarray:
    """Witness unitary stored in a serialized verdict."""
    if data.get("verdict") != "equivalent" or "witness" not in data:
        raise Unsupported("verdict carries no witness")
    pairs = data["witness"]
    f = math.isqrt(len(pairs))
    return pairs_to_complex(pairs, (f, f))


# ----------------------------------------------------------------- embedding


def embed(geom: CorrelationGeometry, f_target: int) -> CorrelationGeometry:
    """Zero-pad every atom to ``f_target x f_target``."""
    if f_target < geom.f:
        raise InvalidEmbedding(f"cannot embed dimension {geom.f} into {f_target}")
    if f_target == geom.f:
        return geom
    k = len(geom)
    mats = np.zeros((k, f_target, f_target), dtype=complex)
    mats[:, : geom.f, : geom.f] = geom.atoms
    return CorrelationGeometry(f_target, geom.bound, type(geom.measure)(mats, geom.weights, geom.agg_tol))


# ----------------------------------------------------------- witness search


def _conj(u: np.ndarray, mats: np.ndarray) -> np.ndarray:
    return sandwich(u, mats)


class _NearIndex:
    """Random low-dimensional projection of a stack, used to shortlist neighbours."""

    DIM = 48
    SHORTLIST = 8

    def __init__(self, mats: np.ndarray):
        x = flatten_real(mats)
        rng = np.random.default_rng(0)
        self.proj = rng.normal(size=(x.shape[1], self.DIM)) / np.sqrt(self.DIM)
        self.y = x @ self.proj
        self.ysq = np.einsum("ij,ij->i", self.y, self.y)

    def shortlist(self, mats: np.ndarray, block: int = 1024) -> np.ndarray:
        z = flatten_real(mats) @ self.proj
        zsq = np.einsum("ij,ij->i", z, z)
        k = min(self.SHORTLIST, self.y.shape[0])
        out = np.empty((z.shape[0], k), dtype=int)
        for start in range(0, z.shape[0], block):
            d2 = zsq[start : start + block, None] + self.ysq[None, :] - 2.0 * z[start : start + block] @ self.y.T
            part = np.argpartition(d2, k - 1, axis=1)[:, :k] if k < d2.shape[1] else np.tile(np.arange(k), (d2.shape[0], 1))
            out[start : start + block] = np.sort(part, axis=1)
        return out


# candidate lists longer than this are screened through the projection index
_DIRECT_LIMIT = 32


def _match_under(u, f1, f2, cand, thr, index: _NearIndex | None = None):
    """Pair ``u F1_i u^*`` with atoms of ``F2`` among ``cand[i]`` within ``thr``.

    Returns ``(pairing, residual)`` or ``None`` when no perfect pairing exists.
    """
    g = _conj(u, f1) if u is not None else f1
    n = len(cand)
    if n == 0:
        return np.zeros(0, dtype=int), 0.0
    short = None
    if index is not None and max(len(c) for c in cand) > _DIRECT_LIMIT:
        short = index.shortlist(g)
    ok_lists = []
    nearest = np.empty(n, dtype=int)
    for i in range(n):
        js = cand[i]
        if js.size == 0:
            return None
        if short is not None and js.size > _DIRECT_LIMIT:
            listed = short[i][np.isin(short[i], js)]
            js = listed if listed.size else js
        d = np.linalg.norm((f2[js] - g[i]).reshape(js.size, -1), axis=1)
        if d.min() > thr:
            return None
        nearest[i] = js[np.argmin(d)]
        ok_lists.append(js[d <= thr])
    if np.unique(nearest).size == n:
        pairing = nearest
    else:
        pairing = _perfect_matching(ok_lists, f2.shape[0])
        if pairing is None:
            return None
    residual = float(np.max(np.linalg.norm((f2[pairing] - g).reshape(n, -1), axis=1)))
    return pairing, residual


def _spanning_phases(m1: np.ndarray, m2: np.ndarray) -> np.ndarray:
    """Diagonal phases ``phi`` with ``exp(i(phi_r - phi_s)) m1[:, r, s] = m2[:, r, s]``.

    Solved on a maximum spanning tree of ``max_a |m1[a, r, s]|``; components
    with no connecting entry keep phase zero.
    """
    f = m1.shape[1]
    mag = np.max(np.abs(m1), axis=0)
    best = np.argmax(np.abs(m1), axis=0)
    top = mag.max() if mag.size else 0.0
    if f == 1 or top == 0:
        return np.zeros(f)
    mag = np.where(mag > 1e-9 * top, mag, 0.0)
    np.fill_diagonal(mag, 0.0)
    phi = np.zeros(f)
    done = np.zeros(f, dtype=bool)
    for root in range(f):
        if done[root]:
            continue
        done[root] = True
        frontier = mag[root].copy()
        parent = np.full(f, root)
        while True:
            cand = np.where(done, 0.0, frontier)
            s = int(np.argmax(cand))
            if cand[s] <= 0:
                break
            r = parent[s]
            a = best[r, s]
            phi[s] = phi[r] - (np.angle(m2[a, r, s]) - np.angle(m1[a, r, s]))
            done[s] = True
            better = mag[s] > frontier
            frontier = np.where(better, mag[s], frontier)
            parent = np.where(better, s, parent)
    return phi


def _intertwiner_unitary(f1: np.ndarray, f2: np.ndarray, rng) -> np.ndarray | None:
    """Polar factor of a random solution of ``F2_a X = X F1_a`` for all ``a``."""
    f = f1.shape[1]
    eye = np.eye(f)
    q = np.zeros((f * f, f * f), dtype=complex)
    for a, b in zip(f1, f2):
        # column-major vec: vec(B X - X A) = (I kron B - A^T kron I) vec(X)
        k = np.kron(eye, b) - np.kron(a.T, eye)
        q += k.conj().T @ k
    lam, vecs = np.linalg.eigh(symmetrize(q))
    null = vecs[:, lam <= 1e-12 * max(lam[-1], 1e-300)]
    if null.shape[1] == 0:
        return None
    coef = rng.normal(size=null.shape[1]) + 1j * rng.normal(size=null.shape[1])
    x = (null @ coef).reshape(f, f, order="F")
    u, s, vh = np.linalg.svd(x)
    if s[-1] <= 1e-8 * s[0]:
        return None
    return u @ vh


def witness_from_pairs(f1: np.ndarray, f2: np.ndarray, rng, tol: float = 1e-8) -> np.ndarray | None:
    """Unitary ``U`` with ``U f1[a] U^* ~ f2[a]``, or ``None`` if none is found.

    ``f1`` and ``f2`` are paired stacks of atoms of shape ``(k, f, f)``.
    """
    k, f = f1.shape[0], f1.shape[1]
    c = rng.normal(size=k)
    a1 = symmetrize(np.einsum("a,aij->ij", c, f1))
    a2 = symmetrize(np.einsum("a,aij->ij", c, f2))
    lam1, v1 = np.linalg.eigh(a1)
    lam2, v2 = np.linalg.eigh(a2)
    norm = max(np.abs(lam1).max(), np.abs(lam2).max())
    ref = np.sum(np.abs(c)) * max(np.max(np.abs(f1)), np.max(np.abs(f2)), 1e-300)
    if np.max(np.abs(lam1 - lam2)) > 10 * tol * ref:
        return None
    simple = f == 1 or (norm > 0 and np.min(np.diff(lam1)) > 1e-6 * norm)
    if simple:
        v1, v2 = canonical_phases(v1), canonical_phases(v2)
        m1 = sandwich(v1.conj().T, f1)
        m2 = sandwich(v2.conj().T, f2)
        phi = _spanning_phases(m1, m2)
        return (v2 * np.exp(1j * phi)) @ v1.conj().T
    if f <= INTERTWINER_MAX_DIM:
        if k > 4 * f:
            pick = np.sort(rng.choice(k, size=4 * f, replace=False))
            f1, f2 = f1[pick], f2[pick]
        return _intertwiner_unitary(f1, f2, rng)
    return None


class _Budget(Exception):
    pass


class _AnchorSearch:
    # unpaired atoms examined per anchor choice
    POOL = 64

    def __init__(self, f1, f2, cand, tol, scale, rng, max_nodes, index=None):
        self.f1, self.f2, self.cand, self.index = f1, f2, cand, index
        self.tol, self.scale, self.rng = tol, scale, rng
        self.thr = tol * scale
        self.thr_tr = 2.0 * tol * scale**2 + 1e-300
        self.thr_tr3 = 3.0 * tol * scale**3 + 1e-300
        self.x1, self.x2 = flatten_real(f1), flatten_real(f2)
        self.sq1 = np.einsum("ij,ij->i", self.x1, self.x1)
        self.n, self.f = f1.shape[0], f1.shape[1]
        self.ranks = np.sum(np.abs(np.linalg.eigvalsh(f1)) > 1e-9 * max(scale, 1e-300), axis=1)
        self.order = rng.permutation(self.n)
        self.max_nodes = max_nodes
        self.nodes = 0
        self.pairs: list[tuple[int, int]] = []
        self.cols1: list[np.ndarray] = []
        self.cols2: list[np.ndarray] = []

    def consistent(self, i: int, js: np.ndarray) -> np.ndarray:
        ok = np.ones(js.size, dtype=bool)
        for c1, c2 in zip(self.cols1, self.cols2):
            ok &= np.abs(c2[js] - c1[i]) <= self.thr_tr
        return js[ok]

    def triple_ok(self, i: int, j: int) -> bool:
        if len(self.pairs) < 2:
            return True
        (a, b), (c, d) = self.pairs[0], self.pairs[-1]
        t1 = np.trace(self.f1[i] @ self.f1[a] @ self.f1[c])
        t2 = np.trace(self.f2[j] @ self.f2[b] @ self.f2[d])
        return abs(t1 - t2) <= self.thr_tr3

    def next_anchor(self):
        used = {a for a, _ in self.pairs}
        used2 = {b for _, b in self.pairs}
        best = None
        seen = 0
        for i in self.order:
            i = int(i)
            if i in used:
                continue
            if seen == self.POOL:
                break
            seen += 1
            opts = self.consistent(i, self.cand[i])
            opts = opts[~np.isin(opts, list(used2))] if used2 else opts
            if opts.size == 0:
                return i, opts
            key = (opts.size, -self._novelty(i))
            if best is None or key < best[0]:
                best = (key, i, opts)
        if best is None:
            return None, None
        return best[1], best[2]

    def _novelty(self, i: int) -> float:
        # squared distance of x1[i] from the span of the anchors' vectors
        if not self.pairs:
            return float(self.sq1[i])
        idx = [a for a, _ in self.pairs]
        kmat = np.array([c[idx] for c in self.cols1])
        kvec = np.array([c[i] for c in self.cols1])
        coef = np.linalg.lstsq(kmat, kvec, rcond=1e-12)[0]
        return float(self.sq1[i] - kvec @ coef)

    def try_witness(self):
        if self.f > INTERTWINER_MAX_DIM and int(np.sum(self.ranks[[a for a, _ in self.pairs]])) < self.f:
            return None
        a_idx = [a for a, _ in self.pairs]
        b_idx = [b for _, b in self.pairs]
        u = witness_from_pairs(self.f1[a_idx], self.f2[b_idx], self.rng, self.tol)
        if u is None:
            return None
        hit = _match_under(u, self.f1, self.f2, self.cand, self.thr, self.index)
        return None if hit is None else (u, hit[0], hit[1])

    def run(self):
        self.nodes += 1
        if self.nodes > self.max_nodes:
            raise _Budget
        if self.pairs:
            hit = self.try_witness()
            if hit is not None:
                return hit
        if len(self.pairs) >= self.n:
            return None
        i, opts = self.next_anchor()
        if i is None or opts.size == 0:
            return None
        for j in opts:
            if not self.triple_ok(i, int(j)):
                continue
            self.pairs.append((i, int(j)))
            self.cols1.append(self.x1 @ self.x1[i])
            self.cols2.append(self.x2 @ self.x2[j])
            hit = self.run()
            if hit is not None:
                return hit
            self.pairs.pop()
            self.cols1.pop()
            self.cols2.pop()
        return None


def find_witness(
    g1: CorrelationGeometry,
    g2: CorrelationGeometry,
    tol: float = 1e-8,
    seed: int = 0,
    max_nodes: int = 2000,
) -> EquivalenceVerdict:
    """Search for a unitary carrying the measure of ``g1`` onto that of ``g2``.

    Both geometries must have the same Hilbert dimension. Residuals are
    absolute Hilbert-Schmidt distances; acceptance needs ``residual <= tol *
    scale`` with ``scale`` the largest atom norm. Random coefficients come
    from ``numpy.random.default_rng([seed, attempt])`` for up to eight
    attempts.
    """
    if g1.f != g2.f:
        raise DimMismatch(f"geometries live in dimensions {g1.f} and {g2.f}; embed first")
    p1, p2 = invariant_profile(g1), invariant_profile(g2)
    certs = compare_profiles(p1, p2, tol)
    if certs:
        return Inequivalent(certs[0], tuple(certs))
    scale = max(p1.scale, p2.scale) or 1.0
    f1, f2 = g1.atoms, g2.atoms
    wthr = tol * max(float(np.max(g1.weights, initial=0)), 1.0)
    cand = _spectral_candidates(p1, p2, tol)
    eye = np.eye(g1.f, dtype=complex)
    index = _NearIndex(f2) if len(f2) and max(len(c) for c in cand) > _DIRECT_LIMIT else None

    def accept(u, pairing, residual, how):
        wmis = float(np.max(np.abs(g1.weights - g2.weights[pairing]), initial=0.0))
        if residual > tol * scale or wmis > wthr:
            return None
        return Equivalent(u, pairing, residual, wmis, scale, {"method": how})

    hit = _match_under(None, f1, f2, cand, tol * scale, index)
    if hit is not None:
        verdict = accept(eye, hit[0], hit[1], "identity")
        if verdict is not None:
            return verdict

    exhausted = False
    for attempt in range(MAX_RETRIES):
        rng = np.random.default_rng([seed, attempt])
        search = _AnchorSearch(f1, f2, cand, tol, scale, rng, max_nodes, index)
        try:
            hit = search.run()
        except _Budget:
            exhausted = True
            continue
        if hit is None:
            continue
        u, pairing, residual = hit
        # refine with every paired atom; keep whichever witness fits better
        u_all = witness_from_pairs(f1, f2[pairing], rng, tol)
        if u_all is not None:
            res_all = float(np.max(np.linalg.norm((_conj(u_all, f1) - f2[pairing]).reshape(len(f1), -1), axis=1)))
            if res_all < residual:
                u, residual = u_all, res_all
        verdict = accept(u, pairing, residual, "anchor-search")
        if verdict is not None:
            verdict.diagnostics.update({"attempt": attempt, "anchors": len(search.pairs), "nodes": search.nodes})
            return verdict
    reason = "search budget exhausted" if exhausted else "no verified witness"
    return Inconclusive(f"invariants agree but {reason}", {"attempts": MAX_RETRIES})


def check_equivalence(
    g1: CorrelationGeometry,
    g2: CorrelationGeometry,
    tol: float = 1e-8,
    seed: int = 0,
) -> EquivalenceVerdict:
    """Unitary equivalence after embedding the smaller Hilbert space into the larger.

    When the declared signature bounds differ, the geometries can only be
    equivalent if at least one of them puts no mass on its own regular
    stratum; otherwise the verdict is inequivalent.
    """
    notes = {}
    if g1.f != g2.f:
        f = max(g1.f, g2.f)
        notes["embedded_to"] = f
        g1, g2 = embed(g1, f), embed(g2, f)
    if g1.bound != g2.bound:
        r1 = regularity_report(g1)["regular_mass_fraction"]
        r2 = regularity_report(g2)["regular_mass_fraction"]
        if r1 > 0 and r2 > 0:
            cert = {
                "invariant": "regular_support",
                "value_1": [g1.bound.p, g1.bound.q, r1],
                "value_2": [g2.bound.p, g2.bound.q, r2],
                "note": "bounds differ and both measures charge their regular strata",
            }
            return Inequivalent(cert, (cert,), notes)
    verdict = find_witness(g1, g2, tol, seed)
    verdict.diagnostics.update(notes)
    return verdict


# ------------------------------------------------------- gauge / diffeo


@dataclass(frozen=True, eq=False)
class GaugeReport:
    verdict: EquivalenceVerdict
    deviation: float
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"deviation": self.deviation, **self.details, **self.verdict.to_dict()}


def _covariant(form) -> bool:
    inner = form.inner if isinstance(form, EpsilonAveraged) else form
    return isinstance(inner, (PointwiseSesquilinear, MetricOnFiber))


def gauge_check(
    model: EffectiveModel,
    chi,
    q: float,
    tol: float = 1e-8,
    chi_grad=None,
    agg_tol: float = 1e-8,
    seed: int = 0,
    allow_noncovariant: bool = False,
) -> GaugeReport:
    """Compare a model with its U(1) gauge transform ``psi -> exp(-i q chi) psi``.

    ``deviation`` is the largest entrywise change of the local forms ``B_x``
    relative to their largest entry. The local form must be linear over
    functions in each slot (pointwise or metric-on-fiber, possibly
    epsilon-averaged); the gradient form is refused unless
    ``allow_noncovariant`` is set, in which case the deviation is reported
    as is.
    """
    if not _covariant(model.local_form) and not allow_noncovariant:
        raise FormNotCovariant(f"{type(model.local_form).__name__} is not covariant under local phases")
    gauged = apply_gauge_phase(model, chi, q, chi_grad)
    b1 = local_form_matrices(model)
    b2 = local_form_matrices(gauged)
    ref = float(np.max(np.abs(b1))) or 1.0
    deviation = float(np.max(np.abs(b2 - b1))) / ref
    verdict = check_equivalence(pushforward(model, agg_tol), pushforward(gauged, agg_tol), tol, seed)
    return GaugeReport(verdict, deviation)


def lattice_gauge_shift(params: LatticeDiracModel, chi) -> LatticeDiracModel:
    """Lattice model with ``A_j -> A_j + (chi_{j+1} - chi_j) / a`` (periodic difference)."""
    chi = np.asarray(chi, dtype=float)
    shifted = params.potential_array() + (np.roll(chi, -1) - chi) / params.spacing
    return LatticeDiracModel(params.sites, params.spacing, params.mass, params.charge, tuple(shifted))


def dirac_gauge_check(
    params: LatticeDiracModel,
    chi,
    m_fields: int,
    tol: float = 1e-8,
    agg_tol: float = 1e-8,
    seed: int = 0,
) -> GaugeReport:
    """Rebuild the lattice sea after ``A -> A + d chi`` and compare the geometries.

    The two Hamiltonians are conjugate by the diagonal phase
    ``exp(-i q chi)``, so the spectra must agree; the rebuilt sea differs
    from the transported one only by eigenvector phases (or rotations inside
    degenerate eigenspaces), which the witness absorbs.
    """
    shifted = lattice_gauge_shift(params, chi)
    lam1 = np.linalg.eigvalsh(lattice_dirac_hamiltonian(params))
    lam2 = np.linalg.eigvalsh(lattice_dirac_hamiltonian(shifted))
    g1 = pushforward(lattice_dirac_sea(params, m_fields), agg_tol)
    g2 = pushforward(lattice_dirac_sea(shifted, m_fields), agg_tol)
    verdict = check_equivalence(g1, g2, tol, seed)
    details = {"spectrum_deviation": float(np.max(np.abs(lam1 - lam2)))}
    if isinstance(verdict, Equivalent):
        u = verdict.witness
        details["witness_offdiagonal"] = float(np.max(np.abs(u - np.diag(np.diag(u)))))
    return GaugeReport(verdict, details["spectrum_deviation"], details)


def diffeo_check(
    model: EffectiveModel,
    perm,
    jacobians,
    tol: float = 1e-8,
    agg_tol: float = 1e-8,
    seed: int = 0,
) -> EquivalenceVerdict:
    """Equivalence of a model and its transport along a discrete diffeomorphism."""
    moved = apply_diffeo(model, perm, jacobians)
    return check_equivalence(pushforward(model, agg_tol), pushforward(moved, agg_tol), tol, seed)


# ----------------------------------------------------------------- symmetry


@dataclass(frozen=True, eq=False)
class SymmetryReport:
    symmetric: bool
    discrepancy: float
    weight_discrepancy: float
    pairing: np.ndarray | None

    def to_dict(self) -> dict:
        return {
            "symmetric": self.symmetric,
            "discrepancy": self.discrepancy,
            "weight_discrepancy": self.weight_discrepancy,
            "pairing": None if self.pairing is None else [int(j) for j in self.pairing],
        }


def check_symmetry(geom: CorrelationGeometry, u, tol: float = 1e-8) -> SymmetryReport:
    """Whether conjugation by ``u`` leaves the measure invariant.

    Conjugated atoms are re-aggregated at the geometry's tolerance and
    matched to the originals by a minimum-cost assignment on
    Hilbert-Schmidt distance. ``discrepancy`` is the largest paired distance.
    """
    u = check_unitary(u, geom.f)
    mats, w = aggregate(_conj(u, geom.atoms), geom.weights, geom.agg_tol)
    n = len(geom)
    if mats.shape[0] != n:
        return SymmetryReport(False, math.inf, math.inf, None)
    if n == 0:
        return SymmetryReport(True, 0.0, 0.0, np.zeros(0, dtype=int))
    x, y = flatten_real(geom.atoms), flatten_real(mats)
    cost = np.sqrt(np.maximum(np.einsum("ij,ij->i", x, x)[:, None] + np.einsum("ij,ij->i", y, y)[None, :] - 2 * x @ y.T, 0))
    rows, cols = linear_sum_assignment(cost)
    pairing = np.empty(n, dtype=int)
    pairing[rows] = cols
    dist = np.linalg.norm((mats[pairing] - geom.atoms).reshape(n, -1), axis=1)
    disc = float(dist.max())
    wdisc = float(np.max(np.abs(w[pairing] - geom.weights)))
    scale = float(np.max(np.abs(geom.measure.spectra()))) or 1.0
    symmetric = disc <= tol * scale and wdisc <= tol * max(1.0, float(geom.weights.max()))
    return SymmetryReport(symmetric, disc, wdisc, pairing)


def induced_translation_unitary(model: EffectiveModel, shift_sites: int) -> np.ndarray:
    """Whitened-basis unitary of ``theta -> theta + 2 pi shift / N`` on plane waves.

    On the reference system the translation multiplies ``exp(i k theta)`` by
    ``exp(2 pi i k shift / N)``; in the orthonormal basis fixed by the
    whitening ``W`` this is ``W G D W^*``.
    """
    gen = model.generator
    if not gen or gen.get("name") != "circle_plane_waves":
        raise Unsupported("induced translations are defined for circle_plane_waves models only")
    n, k_max = gen["n"], gen["k_max"]
    ks = np.arange(-k_max, k_max + 1)
    d = np.diag(np.exp(2j * np.pi * ks * shift_sites / n))
    g = gram(model)
    w = g.whitening
    return check_unitary(w @ g.matrix @ d @ w.conj().T)


__all__ = [
    "Equivalent",
    "EquivalenceVerdict",
    "GaugeReport",
    "Inconclusive",
    "Inequivalent",
    "InvariantProfile",
    "SymmetryReport",
    "atom_signatures",
    "check_equivalence",
    "check_symmetry",
    "compare_profiles",
    "diffeo_check",
    "dirac_gauge_check",
    "embed",
    "find_witness",
    "gauge_check",
    "induced_translation_unitary",
    "invariant_profile",
    "lattice_gauge_shift",
    "make_geometry",
    "verdict_witness",
    "witness_from_pairs",
]
