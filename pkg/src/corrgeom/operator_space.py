"""Hermitian operators, signatures and the sets F^{p,q}.

An element of F^{p,q} is a self-adjoint operator on a finite-dimensional
Hilbert space with at most ``p`` positive and ``q`` negative eigenvalues.
Everything here works on dense ``f x f`` complex arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .errors import DimMismatch, InvalidArgs, InvalidOperator, NotUnitary, NumericalFailure

EPS = np.finfo(float).eps


def sandwich(w: np.ndarray, mats: np.ndarray) -> np.ndarray:
    """``w @ M @ w^*`` for every ``M`` in a ``(k, m, m)`` stack, re-symmetrized.

    Written as two tensor contractions so the work goes to BLAS matrix
    products instead of ``k`` small batched ones.
    """
    mats = np.asarray(mats)
    w = np.asarray(w)
    if mats.shape[0] == 0:
        return np.zeros((0, w.shape[0], w.shape[0]), dtype=np.result_type(w, mats, complex))
    right = np.tensordot(mats, w.conj().T, axes=([2], [0]))  # (k, m, f)
    out = np.tensordot(w, right, axes=([1], [1])).transpose(1, 0, 2)
    return symmetrize(np.ascontiguousarray(out))


def symmetrize(a: np.ndarray) -> np.ndarray:
    """Return ``(a + a^*) / 2`` over the last two axes."""
    a = np.asarray(a, dtype=complex)
    return 0.5 * (a + np.conj(np.swapaxes(a, -1, -2)))


class HermitianOperator:
    """Immutable Hermitian matrix with a lazily cached spectrum.

    The input is symmetrized on construction, so ``entries`` is exactly
    Hermitian bit for bit. The spectrum is sorted in descending order.
    """

    def __init__(self, entries):
        a = np.asarray(entries, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise InvalidOperator(f"expected a non-empty square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise InvalidOperator("operator has non-finite entries")
        a = symmetrize(a)
        a.setflags(write=False)
        self._entries = a

    @property
    def entries(self) -> np.ndarray:
        return self._entries

    @property
    def dim(self) -> int:
        return self._entries.shape[0]

    @cached_property
    def spectrum(self) -> np.ndarray:
        lam = np.linalg.eigvalsh(self._entries)[::-1].copy()
        lam.setflags(write=False)
        return lam

    @cached_property
    def norm(self) -> float:
        """Spectral norm."""
        return float(np.max(np.abs(self.spectrum)))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self._entries, dtype=dtype)

    def __sub__(self, other: "HermitianOperator") -> "HermitianOperator":
        _check_dims(self, other)
        return HermitianOperator(self._entries - other._entries)

    def __add__(self, other: "HermitianOperator") -> "HermitianOperator":
        _check_dims(self, other)
        return HermitianOperator(self._entries + other._entries)

    def __eq__(self, other):
        if not isinstance(other, HermitianOperator):
            return NotImplemented
        return self.dim == other.dim and np.array_equal(self._entries, other._entries)

    def __hash__(self):
        return hash(self._entries.tobytes())

    def __repr__(self):
        return f"HermitianOperator(dim={self.dim}, spectrum={np.round(self.spectrum, 6).tolist()})"


@dataclass(frozen=True)
class Signature:
    n_pos: int
    n_neg: int
    n_zero: int

    @property
    def dim(self) -> int:
        return self.n_pos + self.n_neg + self.n_zero

    @property
    def rank(self) -> int:
        return self.n_pos + self.n_neg


@dataclass(frozen=True)
class SignatureBound:
    p: int
    q: int

    def __post_init__(self):
        if self.p < 0 or self.q < 0:
            raise InvalidArgs(f"signature bound must be nonnegative, got ({self.p}, {self.q})")

    @property
    def rank(self) -> int:
        return self.p + self.q

    def join(self, other: "SignatureBound") -> "SignatureBound":
        return SignatureBound(max(self.p, other.p), max(self.q, other.q))


class Membership(NamedTuple):
    member: bool
    regular: bool
    signature: Signature


def _check_dims(a: HermitianOperator, b: HermitianOperator) -> None:
    if a.dim != b.dim:
        raise DimMismatch(f"operator dimensions differ: {a.dim} vs {b.dim}")


def _as_operator(op) -> HermitianOperator:
    return op if isinstance(op, HermitianOperator) else HermitianOperator(op)


def classify_spectrum(spectrum: np.ndarray, tol: float) -> Signature:
    """Count positive/negative/zero eigenvalues relative to the spectral norm.

    ``spectrum`` may be a stack of shape ``(..., f)``; in that case the three
    counts are returned as integer arrays inside the :class:`Signature`.
    """
    if tol < 0:
        raise InvalidArgs("tol must be nonnegative")
    lam = np.asarray(spectrum, dtype=float)
    norm = np.max(np.abs(lam), axis=-1, keepdims=True)
    thr = np.where(norm > 0, tol * norm, tol)
    n_pos = np.sum(lam > thr, axis=-1)
    n_neg = np.sum(lam < -thr, axis=-1)
    n_zero = lam.shape[-1] - n_pos - n_neg
    if lam.ndim == 1:
        return Signature(int(n_pos), int(n_neg), int(n_zero))
    return Signature(n_pos, n_neg, n_zero)


def signature(op, tol: float = 1e-9) -> Signature:
    """Signature of ``op``: eigenvalues beyond ``±tol*||op||`` are nonzero."""
    op = _as_operator(op)
    return classify_spectrum(op.spectrum, tol)


def in_fpq(op, bound: SignatureBound, tol: float = 1e-9) -> Membership:
    sig = signature(op, tol)
    member = sig.n_pos <= bound.p and sig.n_neg <= bound.q
    regular = sig.n_pos == bound.p and sig.n_neg == bound.q
    return Membership(member, regular, sig)


def hs_inner(a, b) -> float:
    """Hilbert-Schmidt inner product ``trace(a b)`` of two Hermitian operators."""
    a, b = _as_operator(a), _as_operator(b)
    _check_dims(a, b)
    # trace(a b) = sum_ij a_ij b_ji = sum_ij a_ij conj(b_ij) for Hermitian b
    return float(np.real(np.vdot(b.entries, a.entries)))


def hs_dist(a, b) -> float:
    a, b = _as_operator(a), _as_operator(b)
    _check_dims(a, b)
    return float(np.linalg.norm(a.entries - b.entries))


def unitarity_defect(u: np.ndarray) -> float:
    u = np.asarray(u, dtype=complex)
    return float(np.linalg.norm(u @ u.conj().T - np.eye(u.shape[0])))


def check_unitary(u, dim: int | None = None) -> np.ndarray:
    """Validate ``u`` as a unitary matrix (defect at most ``1e-10 * f``)."""
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise NotUnitary(f"expected a square matrix, got shape {u.shape}")
    if dim is not None and u.shape[0] != dim:
        raise DimMismatch(f"unitary has dim {u.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(u)) or unitarity_defect(u) > 1e-10 * u.shape[0]:
        raise NotUnitary("matrix is not unitary within 1e-10*f")
    return u


def conjugate(u, op) -> HermitianOperator:
    """Return ``u op u^*``."""
    op = _as_operator(op)
    u = check_unitary(u, op.dim)
    return HermitianOperator(u @ op.entries @ u.conj().T)


def fpq_dimension(f: int, bound: SignatureBound) -> int:
    """Real dimension ``2f(p+q) - (p+q)^2`` of the regular stratum."""
    r = bound.rank
    if r < 1 or f < r:
        raise InvalidArgs(f"need f >= p+q >= 1, got f={f}, p+q={r}")
    return 2 * f * r - r * r


def _hermitian_coords(x: np.ndarray) -> np.ndarray:
    """Real coordinates of a Hermitian matrix: diagonal, Re and Im of the upper triangle."""
    iu = np.triu_indices(x.shape[0], k=1)
    return np.concatenate([np.real(np.diag(x)), np.real(x[iu]), np.imag(x[iu])])


def _polar(y: np.ndarray) -> np.ndarray:
    u, _, vh = np.linalg.svd(y, full_matrices=False)
    return u @ vh


def fpq_rank_check(
    f: int,
    bound: SignatureBound,
    trials: int = 8,
    seed: int = 0,
    step: float = 1e-6,
) -> int:
    """Numerically measure the dimension of the regular stratum of F^{p,q}.

    A regular point is written as ``x = V D V^*`` with ``V`` an ``f x (p+q)``
    isometry and ``D`` a real diagonal of signature ``(p, q)``. The
    parametrization is differentiated by central differences along every
    real direction of ``V`` (retracted onto the isometries by the polar
    factor) and of ``D``; the returned value is the number of singular values
    of that Jacobian above ``1e-6`` of the largest.

    Random draws use ``numpy.random.default_rng(seed)`` (PCG64). A draw whose
    diagonal entries nearly coincide is rejected and redrawn, at most
    ``trials`` times.
    """
    r = bound.rank
    fpq_dimension(f, bound)
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        z = rng.normal(size=(f, r)) + 1j * rng.normal(size=(f, r))
        v, _ = np.linalg.qr(z)
        d = np.concatenate([rng.uniform(0.5, 2.0, bound.p), -rng.uniform(0.5, 2.0, bound.q)])
        gaps = np.abs(d[:, None] - d[None, :]) + np.eye(r) * 10.0
        if gaps.min() < 0.05:
            continue

        def point(vv, dd):
            w = _polar(vv)
            return _hermitian_coords((w * dd) @ w.conj().T)

        cols = []
        for i in range(f):
            for j in range(r):
                for direction in (1.0, 1j):
                    e = np.zeros((f, r), dtype=complex)
                    e[i, j] = direction
                    cols.append((point(v + step * e, d) - point(v - step * e, d)) / (2 * step))
        for j in range(r):
            e = np.zeros(r)
            e[j] = 1.0
            cols.append((point(v, d + step * e) - point(v, d - step * e)) / (2 * step))
        s = np.linalg.svd(np.array(cols).T, compute_uv=False)
        return int(np.sum(s > 1e-6 * s[0]))
    raise NumericalFailure(f"no non-degenerate random draw in {trials} trials")
