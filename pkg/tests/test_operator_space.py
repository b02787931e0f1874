import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from corrgeom.errors import InvalidArgs, InvalidOperator, NotUnitary
from corrgeom.operator_space import (
    HermitianOperator,
    Signature,
    SignatureBound,
    check_unitary,
    conjugate,
    fpq_dimension,
    fpq_rank_check,
    hs_dist,
    hs_inner,
    in_fpq,
    signature,
)

from conftest import random_hermitian, random_unitary


def test_operator_is_symmetrized_and_readonly():
    op = HermitianOperator(np.array([[1.0, 2.0], [0.0, 3.0]]))
    np.testing.assert_allclose(op.entries, [[1, 1], [1, 3]])
    with pytest.raises(ValueError):
        op.entries[0, 0] = 5


def test_nonfinite_rejected():
    with pytest.raises(InvalidOperator):
        HermitianOperator(np.array([[np.nan]]))


@pytest.mark.parametrize(
    "diag, expected",
    [
        ([1.0, -2.0, 0.0], Signature(1, 1, 1)),
        ([0.0, 0.0], Signature(0, 0, 2)),
        ([1.0, 1e-12], Signature(1, 0, 1)),
        ([3.0, 2.0, 1.0], Signature(3, 0, 0)),
    ],
)
def test_signature_examples(diag, expected):
    assert signature(np.diag(diag)) == expected


def test_fpq_membership():
    op = np.diag([1.0, -2.0, 0.0])
    assert in_fpq(op, SignatureBound(1, 1)).regular
    assert not in_fpq(op, SignatureBound(1, 0)).member
    m = in_fpq(op, SignatureBound(2, 1))
    assert m.member and not m.regular


@pytest.mark.parametrize("f, p, q, dim", [(1, 1, 0, 1), (2, 1, 0, 3), (4, 1, 1, 12), (4, 2, 2, 16), (3, 2, 1, 9)])
def test_fpq_dimension_formula(f, p, q, dim):
    assert fpq_dimension(f, SignatureBound(p, q)) == dim


def test_fpq_dimension_rejects_bad_bound():
    with pytest.raises(InvalidArgs):
        fpq_dimension(2, SignatureBound(2, 1))
    with pytest.raises(InvalidArgs):
        fpq_dimension(2, SignatureBound(0, 0))


@pytest.mark.parametrize("f, p, q", [(2, 1, 0), (3, 1, 1), (4, 0, 2), (5, 2, 1)])
def test_rank_check_matches_formula(f, p, q):
    assert fpq_rank_check(f, SignatureBound(p, q)) == fpq_dimension(f, SignatureBound(p, q))


def test_check_unitary():
    with pytest.raises(NotUnitary):
        check_unitary(np.diag([1.0, 2.0]))
    u = check_unitary(np.eye(3) * np.exp(0.3j), 3)
    assert u.shape == (3, 3)


@given(st.integers(0, 10_000), st.integers(1, 6))
def test_signature_conjugation_invariant(seed, f):
    rng = np.random.default_rng(seed)
    a = random_hermitian(f, rng, rank=rng.integers(0, f + 1))
    u = random_unitary(f, rng)
    assert signature(a) == signature(conjugate(u, a))


@given(st.integers(0, 10_000), st.integers(1, 5))
def test_hs_metric_properties(seed, f):
    rng = np.random.default_rng(seed)
    a, b, c = (random_hermitian(f, rng) for _ in range(3))
    assert hs_dist(a, a) == 0.0
    assert hs_dist(a, b) == pytest.approx(hs_dist(b, a))
    assert hs_dist(a, c) <= hs_dist(a, b) + hs_dist(b, c) + 1e-12
    assert hs_inner(a, a) == pytest.approx(np.sum(np.linalg.eigvalsh(a) ** 2))
    u = random_unitary(f, rng)
    assert hs_dist(conjugate(u, a), conjugate(u, b)) == pytest.approx(hs_dist(a, b), rel=1e-10)
