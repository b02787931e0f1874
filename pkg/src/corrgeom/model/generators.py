"""Built-in effective models.

All generators are pure functions of their parameters (and ``seed`` where
randomness enters, always through ``numpy.random.default_rng``).
"""

from __future__ import annotations

import numpy as np

from ..errors import AmbiguousSeaCut, InvalidArgs, Undersampled
from ..specs import GradientForm, L2, MetricOnFiber, PointwiseSesquilinear, SobolevH1
from .types import DiscreteManifold, EffectiveModel, LatticeDiracModel, ReferenceField, ReferenceSystem

SIGMA_1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_3 = np.array([[1, 0], [0, -1]], dtype=complex)


def circle_neighbors(n: int, radius: float, max_dist: float):
    """Neighbor lists on an evenly sampled circle, by arc length below ``max_dist``."""
    step = 2 * np.pi * radius / n
    reach = min(int(np.floor(max_dist / step)), n // 2)
    out = []
    for i in range(n):
        offsets = [s for s in range(-reach, reach + 1) if s != 0]
        idx = sorted({(i + s) % n for s in offsets} - {i})
        dist = [step * min((j - i) % n, (i - j) % n) for j in idx]
        out.append((np.array(idx, dtype=int), np.array(dist, dtype=float)))
    return tuple(out)


def _circle_manifold(n: int, radius: float, neighbor_radius: float | None) -> DiscreteManifold:
    theta = 2 * np.pi * np.arange(n) / n
    neighbors = None if neighbor_radius is None else circle_neighbors(n, radius, neighbor_radius)
    return DiscreteManifold(
        coords=theta[:, None],
        weights=np.full(n, 2 * np.pi * radius / n),
        metric=np.full((n, 1, 1), radius**2),
        neighbors=neighbors,
    )


def circle_plane_waves(
    n: int,
    k_max: int,
    radius: float = 1.0,
    neighbor_radius: float | None = None,
    local_form=None,
) -> EffectiveModel:
    """Plane waves ``exp(i k theta)``, ``k = -k_max..k_max``, on a circle of given radius.

    Points sit at ``theta_j = 2 pi j / n`` with weight ``2 pi radius / n``.
    Jets are exact derivatives along ``theta``.
    """
    if k_max < 0:
        raise InvalidArgs("k_max must be nonnegative")
    if n <= 2 * k_max + 1:
        raise Undersampled(f"n={n} cannot resolve k_max={k_max}; need n > {2 * k_max + 1}")
    if not radius > 0:
        raise InvalidArgs("radius must be positive")
    manifold = _circle_manifold(n, radius, neighbor_radius)
    theta = manifold.coords[:, 0]
    fields = []
    for k in range(-k_max, k_max + 1):
        wave = np.exp(1j * k * theta)
        fields.append(ReferenceField(f"k={k}", wave[:, None], (1j * k * wave)[:, None, None]))
    return EffectiveModel(
        manifold=manifold,
        system=ReferenceSystem(tuple(fields)),
        scalar_product=L2(),
        local_form=local_form or PointwiseSesquilinear(),
        extras={"generator": {"name": "circle_plane_waves", "n": n, "k_max": k_max, "radius": radius}},
    )


def circle_trig_pair(n: int, radius: float = 1.0, neighbor_radius: float | None = None, local_form=None) -> EffectiveModel:
    """Real fields ``cos theta`` and ``sin theta`` with the gradient form and H1 product."""
    if n < 8:
        raise Undersampled("circle_trig_pair needs n >= 8")
    manifold = _circle_manifold(n, radius, neighbor_radius)
    theta = manifold.coords[:, 0]
    c, s = np.cos(theta), np.sin(theta)
    fields = (
        ReferenceField("cos", c[:, None], (-s)[:, None, None]),
        ReferenceField("sin", s[:, None], c[:, None, None]),
    )
    return EffectiveModel(
        manifold=manifold,
        system=ReferenceSystem(fields),
        scalar_product=SobolevH1(),
        local_form=local_form or GradientForm(),
        extras={"generator": {"name": "circle_trig_pair", "n": n, "radius": radius}},
    )


def torus_tetrads(n_per_dim: int) -> EffectiveModel:
    """The two coordinate frame fields on the flat 2-torus of unit volume."""
    if n_per_dim < 2:
        raise Undersampled("torus_tetrads needs at least 2 points per dimension")
    grid = np.arange(n_per_dim) / n_per_dim
    xx, yy = np.meshgrid(grid, grid, indexing="ij")
    n = n_per_dim**2
    manifold = DiscreteManifold(
        coords=np.column_stack([xx.ravel(), yy.ravel()]),
        weights=np.full(n, 1.0 / n),
        metric=np.broadcast_to(np.eye(2), (n, 2, 2)).copy(),
    )
    zero_jet = np.zeros((n, 2, 2))
    fields = tuple(
        ReferenceField(f"e{a + 1}", np.tile(np.eye(2)[a], (n, 1)), zero_jet, kind="vector") for a in range(2)
    )
    return EffectiveModel(
        manifold=manifold,
        system=ReferenceSystem(fields),
        scalar_product=L2(),
        local_form=MetricOnFiber(),
        extras={"generator": {"name": "torus_tetrads", "n_per_dim": n_per_dim}},
    )


def lattice_dirac_hamiltonian(model: LatticeDiracModel) -> np.ndarray:
    """One-particle Hamiltonian ``sigma_1 (x) D + sigma_3 (x) m`` on ``C^2 (x) C^N``.

    ``D = -i/(2a) (T - T^*)`` is the symmetric difference with link phases:
    ``(T psi)_j = exp(i q a A_j) psi_{j+1}``. The boundary is antiperiodic
    (the hop from site ``N-1`` to ``0`` carries an extra sign), which keeps
    the free sea free of accidental degeneracies at half filling of the
    negative band. Spinor index is the outer index: entry ``s*N + j``.
    """
    n, a = model.sites, model.spacing
    links = np.exp(1j * model.charge * a * model.potential_array())
    t = np.zeros((n, n), dtype=complex)
    t[np.arange(n - 1), np.arange(1, n)] = links[:-1]
    t[n - 1, 0] = -links[-1]
    d = (-1j / (2 * a)) * (t - t.conj().T)
    h = np.kron(SIGMA_1, d) + model.mass * np.kron(SIGMA_3, np.eye(n))
    return 0.5 * (h + h.conj().T)


def lattice_dirac_sea(model: LatticeDiracModel, m_fields: int) -> EffectiveModel:
    """Lowest ``m_fields`` eigenvectors of the lattice Hamiltonian as reference fields.

    Eigenvectors are scaled by ``1/sqrt(a)`` so that they are orthonormal in
    the lattice L2 product with site weight ``a``.
    """
    n, a = model.sites, model.spacing
    if not 1 <= m_fields <= 2 * n:
        raise InvalidArgs(f"m_fields must lie in 1..{2 * n}")
    h = lattice_dirac_hamiltonian(model)
    lam, vecs = np.linalg.eigh(h)
    if m_fields < 2 * n and lam[m_fields] - lam[m_fields - 1] <= 1e-10 * max(1.0, np.abs(lam).max()):
        raise AmbiguousSeaCut(
            f"eigenvalues {m_fields} and {m_fields + 1} coincide ({lam[m_fields - 1]:.12g}); choose another m_fields"
        )
    fields = []
    for i in range(m_fields):
        spinor = vecs[:, i].reshape(2, n).T / np.sqrt(a)
        fields.append(ReferenceField(f"sea{i}", spinor, kind="spinor"))
    manifold = DiscreteManifold(
        coords=(a * np.arange(n))[:, None],
        weights=np.full(n, a),
        metric=np.ones((n, 1, 1)),
    )
    return EffectiveModel(
        manifold=manifold,
        system=ReferenceSystem(tuple(fields)),
        scalar_product=L2(),
        local_form=PointwiseSesquilinear(),
        potential_A=model.potential_array()[:, None],
        mass=model.mass,
        charge=model.charge,
        extras={
            "generator": {
                "name": "lattice_dirac_sea",
                "sites": n,
                "spacing": a,
                "mass": model.mass,
                "charge": model.charge,
                "m_fields": m_fields,
            },
            "lattice_spacing": a,
            "sea_energies": lam[:m_fields].tolist(),
        },
    )


def smooth_periodic(n: int, seed: int = 0, modes: int = 3, amplitude: float = 1.0):
    """Random trigonometric polynomial on ``theta_j = 2 pi j / n`` and its theta-derivative."""
    rng = np.random.default_rng(seed)
    theta = 2 * np.pi * np.arange(n) / n
    value = np.zeros(n)
    deriv = np.zeros(n)
    for m in range(1, modes + 1):
        a, b = rng.normal(scale=amplitude / m, size=2)
        value += a * np.cos(m * theta) + b * np.sin(m * theta)
        deriv += m * (-a * np.sin(m * theta) + b * np.cos(m * theta))
    return value, deriv


def gauge_function(model: EffectiveModel, kind: str, const: float = 0.7, seed: int = 0):
    """A named gauge function ``chi`` on a built-in model, with its chart gradient.

    ``kind`` is one of ``zero``, ``const``, ``sin`` or ``random`` (a seeded
    trigonometric polynomial). Circle models use the angle as argument; the
    lattice uses ``2 pi j / N``. Returns ``(chi, grad)`` with ``grad`` of
    shape ``(n, 1)``.
    """
    n = model.n_points
    if model.manifold.dim != 1:
        raise InvalidArgs("named gauge functions are defined on one-dimensional models only")
    theta = 2 * np.pi * np.arange(n) / n
    # d theta / d coordinate
    lattice = model.extras.get("lattice_spacing")
    scale = 2 * np.pi / (n * lattice) if lattice else 1.0
    if kind == "zero":
        chi, dchi = np.zeros(n), np.zeros(n)
    elif kind == "const":
        chi, dchi = np.full(n, float(const)), np.zeros(n)
    elif kind == "sin":
        chi, dchi = np.sin(theta), np.cos(theta)
    elif kind == "random":
        chi, dchi = smooth_periodic(n, seed=seed)
    else:
        raise InvalidArgs(f"unknown gauge function {kind!r}")
    return chi, (dchi * scale)[:, None]
