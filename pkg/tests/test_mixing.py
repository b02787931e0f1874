import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from corrgeom.correlation import make_geometry, pushforward
from corrgeom.equivalence import Equivalent, check_equivalence, check_symmetry, induced_translation_unitary
from corrgeom.errors import InvalidArgs, NotUnitary
from corrgeom.mixing import MixSpec, mix, mixture_diagnostics
from corrgeom.model import circle_plane_waves, torus_tetrads

from conftest import conjugated, random_geometry, random_unitary


def test_mixspec_validation():
    with pytest.raises(InvalidArgs):
        MixSpec(1.5)
    with pytest.raises(NotUnitary):
        MixSpec(0.5, 2 * np.eye(2))


@pytest.mark.parametrize("tau", [0.0, 0.25, 0.5, 0.75, 1.0])
def test_mass_linearity(tau, rng):
    g1, g2 = random_geometry(rng, 3, 7), random_geometry(rng, 4, 5)
    m = mix(g1, g2, MixSpec(tau))
    expected = tau * g2.total_mass + (1 - tau) * g1.total_mass
    assert m.total_mass == pytest.approx(expected, rel=1e-10)
    assert m.f == 4


def test_endpoints_return_inputs_exactly(rng):
    g1, g2 = random_geometry(rng, 3, 7), random_geometry(rng, 3, 5)
    one = mix(g1, g2, MixSpec(1.0))
    np.testing.assert_array_equal(one.atoms, g2.atoms)
    np.testing.assert_array_equal(one.weights, g2.weights)
    zero = mix(g1, g2, MixSpec(0.0))
    np.testing.assert_array_equal(zero.atoms, g1.atoms)
    np.testing.assert_array_equal(zero.weights, g1.weights)


def test_circle_radii_mix_counts():
    g1 = pushforward(circle_plane_waves(16, 1, radius=1.0))
    g2 = pushforward(circle_plane_waves(16, 1, radius=2.0))
    m = mix(g1, g2, MixSpec(0.5))
    assert len(m) == len(g1) + len(g2)
    assert m.total_mass == pytest.approx((g1.total_mass + g2.total_mass) / 2, rel=1e-12)
    assert len(m) > max(len(g1), len(g2))


def test_tagged_union_without_aggregation(rng):
    g = random_geometry(rng, 2, 4)
    m = mix(g, g, MixSpec(0.5), agg_tol=0.0)
    # identical atoms coincide bit for bit and merge even at zero tolerance
    assert len(m) == 4
    np.testing.assert_allclose(m.weights, g.weights)


def test_aligned_mix_matches_unmixed(rng):
    g1 = random_geometry(rng, 4, 9)
    g2 = conjugated(g1, random_unitary(4, rng))
    v = check_equivalence(g1, g2)
    assert isinstance(v, Equivalent)
    m = mix(g1, g2, MixSpec(0.5, v.witness))
    d_mix, d_ref = mixture_diagnostics(m), mixture_diagnostics(g2)
    for key, value in d_ref.items():
        if isinstance(value, float):
            assert d_mix[key] == pytest.approx(value, abs=1e-9), key
        else:
            assert d_mix[key] == value, key


def test_torus_diagnostics():
    d = mixture_diagnostics(pushforward(torus_tetrads(4)))
    assert d["atom_count"] == 1 and d["spectral_spread"] == 0.0
    assert d["nearest_atom_min"] is None


def test_translation_symmetry_survives_mixing():
    m1, m2 = circle_plane_waves(16, 2, radius=1.0), circle_plane_waves(16, 2, radius=2.0)
    g = mix(pushforward(m1), pushforward(m2), MixSpec(0.5))
    u = induced_translation_unitary(m1, 3)
    np.testing.assert_allclose(u, induced_translation_unitary(m2, 3), atol=1e-14)
    rep = check_symmetry(g, u)
    assert rep.symmetric and rep.discrepancy <= 1e-10


@given(st.integers(0, 10_000), st.sampled_from([0.0, 0.25, 0.5, 0.75, 1.0]), st.sampled_from([0.0, 1e-8, 1e-2]))
def test_mass_linearity_property(seed, tau, agg_tol):
    rng = np.random.default_rng(seed)
    g1, g2 = random_geometry(rng, 3, int(rng.integers(1, 10))), random_geometry(rng, 2, int(rng.integers(1, 10)))
    m = mix(g1, g2, MixSpec(tau), agg_tol)
    assert m.total_mass == pytest.approx(tau * g2.total_mass + (1 - tau) * g1.total_mass, rel=1e-10)
    assert m.bound == g1.bound.join(g2.bound)


def test_make_geometry_in_mix_bound():
    g1 = make_geometry(np.array([np.diag([1.0, -1.0])]), [1.0])
    g2 = make_geometry(np.array([np.diag([1.0, 1.0])]), [1.0])
    assert mix(g1, g2, MixSpec(0.5)).bound.p == 2
