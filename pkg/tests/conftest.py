import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def random_unitary(f, rng):
    z = rng.normal(size=(f, f)) + 1j * rng.normal(size=(f, f))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_hermitian(f, rng, rank=None):
    rank = f if rank is None else rank
    v = rng.normal(size=(f, rank)) + 1j * rng.normal(size=(f, rank))
    d = rng.uniform(-2, 2, size=rank)
    return (v * d) @ v.conj().T


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_geometry(rng, f, n_atoms, max_rank=None):
    """Weighted cloud of random Hermitian atoms with weights in [0.5, 1.5]."""
    from corrgeom.correlation import make_geometry

    max_rank = f if max_rank is None else min(max_rank, f)
    mats = np.array([random_hermitian(f, rng, rank=int(rng.integers(1, max_rank + 1))) for _ in range(n_atoms)])
    return make_geometry(mats, rng.uniform(0.5, 1.5, size=n_atoms))


def conjugated(geom, u):
    from corrgeom.correlation import make_geometry

    return make_geometry(u @ geom.atoms @ u.conj().T, geom.weights, bound=geom.bound)


def certificate_holds(cert, g1, g2, tol):
    """Recompute the invariant named by a certificate and confirm it differs."""
    from corrgeom.equivalence import _perfect_matching, _spectral_candidates, invariant_profile

    p1, p2 = invariant_profile(g1), invariant_profile(g2)
    name = cert["invariant"]
    if name == "total_mass":
        return abs(p1.total_mass - p2.total_mass) > tol * max(p1.total_mass, p2.total_mass)
    if name.startswith("power_sum_"):
        r = int(name.rsplit("_", 1)[1])
        thr = tol * max(p1.total_mass, p2.total_mass) * max(p1.scale, p2.scale) ** r
        return abs(p1.power_sums[r - 1] - p2.power_sums[r - 1]) > thr
    if name == "atom_count":
        return p1.atom_count != p2.atom_count
    if name == "regular_support":
        from corrgeom.correlation import regularity_report

        return (
            g1.bound != g2.bound
            and regularity_report(g1)["regular_mass_fraction"] > 0
            and regularity_report(g2)["regular_mass_fraction"] > 0
        )
    if name == "spectra":
        return _perfect_matching(_spectral_candidates(p1, p2, tol), p2.atom_count) is None
    return False
