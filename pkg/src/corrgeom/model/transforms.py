"""Gauge phases and diffeomorphisms acting on effective models."""

from __future__ import annotations

import numpy as np

from ..errors import InvalidArgs, InvalidDiffeo, MissingJet
from .types import DiscreteManifold, EffectiveModel, ReferenceField, ReferenceSystem


def apply_gauge_phase(
    model: EffectiveModel,
    chi,
    q: float,
    chi_grad=None,
) -> EffectiveModel:
    """Multiply every reference field by ``exp(-i q chi)``.

    Jets follow the product rule, ``grad psi -> exp(-i q chi) (grad psi - i q
    grad(chi) psi)``, which needs ``chi_grad`` (shape ``(n, d_man)``). The
    potential shifts by the differential of ``chi``: on lattice models by the
    forward difference over the lattice spacing, otherwise by ``chi_grad``.
    ``chi`` is accumulated into the model's ``scalar_chi`` descriptor.
    """
    n, d = model.n_points, model.manifold.dim
    chi = np.asarray(chi, dtype=float)
    if chi.shape != (n,):
        raise InvalidArgs(f"chi must have shape {(n,)}")
    if chi_grad is not None:
        chi_grad = np.asarray(chi_grad, dtype=float).reshape(n, d)
    phase = np.exp(-1j * q * chi)

    fields = []
    for f in model.system.fields:
        jet = None
        if f.jet is not None:
            if chi_grad is None:
                raise MissingJet(f"field {f.label!r} carries jets; the gradient of chi is required")
            jet = phase[:, None, None] * (f.jet - 1j * q * chi_grad[:, :, None] * f.values[:, None, :])
        fields.append(ReferenceField(f.label, phase[:, None] * f.values, jet, f.kind))

    lattice = model.extras.get("lattice_spacing")
    if lattice:
        dchi = ((np.roll(chi, -1) - chi) / lattice)[:, None]
    else:
        dchi = chi_grad
    if dchi is None:
        if model.potential_A is not None:
            raise MissingJet("the gradient of chi is required to shift the potential")
        potential = None
    else:
        base = model.potential_A if model.potential_A is not None else np.zeros((n, d))
        potential = base + dchi
    total_chi = chi if model.scalar_chi is None else model.scalar_chi + chi
    extras = dict(model.extras)
    extras["gauge"] = extras.get("gauge", []) + [{"q": float(q)}]
    return model.with_(
        system=ReferenceSystem(tuple(fields)),
        potential_A=potential,
        scalar_chi=total_chi,
        extras=extras,
    )


def apply_diffeo(model: EffectiveModel, perm, jacobians, coords=None) -> EffectiveModel:
    """Transport a model along a point bijection with per-point Jacobians.

    New point ``i`` is old point ``perm[i]`` and ``jacobians[i]`` is the
    derivative of the old chart with respect to the new one there. Weights
    follow the points, the metric is pulled back as ``J^T g J``, tangent
    vector values map by ``J^{-1}``, and jets (covector index) by ``J^T``.
    These are exactly the rules that leave every metric-contracted local
    form unchanged; for vector-valued jets the second derivative of the map
    is neglected. The source manifold and the permutation are recorded
    under ``extras["diffeo"]``.
    """
    n, d = model.n_points, model.manifold.dim
    perm = np.asarray(perm)
    if perm.shape != (n,) or not np.issubdtype(perm.dtype, np.integer):
        raise InvalidDiffeo(f"perm must be {n} integers")
    if not np.array_equal(np.sort(perm), np.arange(n)):
        raise InvalidDiffeo("perm is not a bijection of the point indices")
    jac = np.asarray(jacobians, dtype=float)
    if jac.shape == (d, d):
        jac = np.broadcast_to(jac, (n, d, d))
    elif jac.shape == (n,) and d == 1:
        jac = jac.reshape(n, 1, 1)
    if jac.shape != (n, d, d):
        raise InvalidDiffeo(f"jacobians must have shape {(n, d, d)}, got {jac.shape}")
    if not np.all(np.isfinite(jac)):
        raise InvalidDiffeo("non-finite Jacobian")
    s = np.linalg.svd(jac, compute_uv=False)
    if np.any(s[:, -1] <= 1e-12 * np.maximum(s[:, 0], 1e-300)):
        raise InvalidDiffeo("Jacobian is singular at some point")
    jac_inv = np.linalg.inv(jac)
    jac_t = np.swapaxes(jac, 1, 2)

    inverse = np.empty(n, dtype=int)
    inverse[perm] = np.arange(n)
    src = model.manifold
    metric = None if src.metric is None else jac_t @ src.metric[perm] @ jac
    neighbors = None
    if src.neighbors is not None:
        neighbors = tuple((inverse[src.neighbors[p][0]], src.neighbors[p][1]) for p in perm)
    manifold = DiscreteManifold(
        coords=src.coords[perm] if coords is None else coords,
        weights=src.weights[perm],
        metric=metric,
        neighbors=neighbors,
    )

    fields = []
    for f in model.system.fields:
        values = f.values[perm]
        jet = None if f.jet is None else np.einsum("pnm,pna->pma", jac, f.jet[perm])
        if f.kind == "vector":
            values = np.einsum("pab,pb->pa", jac_inv, values)
            if jet is not None:
                jet = np.einsum("pab,pmb->pma", jac_inv, jet)
        fields.append(ReferenceField(f.label, values, jet, f.kind))

    potential = None if model.potential_A is None else np.einsum("pnm,pn->pm", jac, model.potential_A[perm])
    extras = {k: v for k, v in model.extras.items() if k != "generator"}
    if model.generator is not None:
        extras["source_generator"] = model.generator
    extras["diffeo"] = {"perm": perm.tolist(), "source_manifold": src.fingerprint()}
    return model.with_(
        manifold=manifold,
        system=ReferenceSystem(tuple(fields)),
        potential_A=potential,
        scalar_chi=None if model.scalar_chi is None else model.scalar_chi[perm],
        kernels={k: v[perm] for k, v in model.kernels.items()},
        extras=extras,
    )


def circle_rotation(n: int, shift: int):
    """Point bijection and Jacobians for ``theta -> theta + 2 pi shift / n``."""
    return (np.arange(n) + shift) % n, np.ones((n, 1, 1))


def circle_reflection(n: int):
    """Point bijection and Jacobians for ``theta -> -theta``."""
    return (-np.arange(n)) % n, -np.ones((n, 1, 1))
