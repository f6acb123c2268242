import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from hsliouville.core_ops import (
    DensityMatrix,
    ShapeError,
    StateError,
    TruncatedMatrix,
    adjoint,
    basis_matrix,
    finite_rank_project,
    hs_inner,
    hs_norm,
    operator_norm,
    trace_norm,
)

from conftest import random_matrix

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


@st.composite
def complex_matrices(draw, max_dim=12):
    n = draw(st.integers(1, max_dim))
    re = draw(hnp.arrays(np.float64, (n, n), elements=finite))
    im = draw(hnp.arrays(np.float64, (n, n), elements=finite))
    return TruncatedMatrix(re + 1j * im)


def test_basis_units_are_orthonormal():
    d = 4
    units = [basis_matrix(d, m, n) for m in range(1, d + 1) for n in range(1, d + 1)]
    gram = np.array([[hs_inner(a, b) for b in units] for a in units])
    np.testing.assert_array_equal(gram, np.eye(d * d))


def test_inner_product_is_antilinear_in_first_slot(rng):
    a, b = random_matrix(rng, 5), random_matrix(rng, 5)
    c = 2.0 - 3.0j
    assert hs_inner(TruncatedMatrix(c * a.entries), b) == pytest.approx(np.conj(c) * hs_inner(a, b))
    assert hs_inner(a, TruncatedMatrix(c * b.entries)) == pytest.approx(c * hs_inner(a, b))


def test_inner_product_dimension_mismatch():
    with pytest.raises(ShapeError):
        hs_inner(basis_matrix(2, 1, 1), basis_matrix(3, 1, 1))


@given(complex_matrices())
def test_adjoint_preserves_hs_norm_exactly(a):
    assert hs_norm(adjoint(a)) == hs_norm(a)


@given(complex_matrices())
def test_norm_ordering(a):
    op, hs, tr = operator_norm(a), hs_norm(a), trace_norm(a)
    slack = 1e-12 * max(tr, 1.0)
    assert op <= hs + slack
    assert hs <= tr + slack


def test_norm_ordering_random_16(rng):
    for _ in range(100):
        a = random_matrix(rng, 16)
        assert operator_norm(a) <= hs_norm(a)


def test_unitary_invariance_of_hs_norm(rng):
    for _ in range(20):
        a = random_matrix(rng, 10)
        q, _ = np.linalg.qr(random_matrix(rng, 10).entries)
        b = TruncatedMatrix(q @ a.entries @ q.conj().T)
        assert abs(hs_norm(b) - hs_norm(a)) <= 1e-12 * hs_norm(a)


def test_hs_norm_is_root_of_column_sums(rng):
    a = random_matrix(rng, 7)
    cols = sum(np.linalg.norm(a.entries[:, j]) ** 2 for j in range(7))
    rows = sum(np.linalg.norm(a.entries.conj().T[:, j]) ** 2 for j in range(7))
    assert hs_norm(a) ** 2 == pytest.approx(cols, rel=1e-14)
    assert hs_norm(a) ** 2 == pytest.approx(rows, rel=1e-14)


def test_tail_formula_all_ranks(rng):
    for _ in range(20):
        a = random_matrix(rng, 32)
        rows = np.sum(np.abs(a.entries) ** 2, axis=1)
        for n in range(1, 33):
            proj, tail = finite_rank_project(a, n)
            assert abs(tail**2 - rows[n:].sum()) <= 1e-12
            assert np.all(proj.entries[n:] == 0)
            np.testing.assert_array_equal(proj.entries[:n], a.entries[:n])


def test_projection_rank_bounds(rng):
    a = random_matrix(rng, 4)
    for bad in (0, 5):
        with pytest.raises(ValueError):
            finite_rank_project(a, bad)


def test_entries_are_immutable_copies():
    raw = np.eye(3)
    a = TruncatedMatrix(raw)
    raw[0, 0] = 5
    assert a.entries[0, 0] == 1
    with pytest.raises(ValueError):
        a.entries[0, 0] = 2


@pytest.mark.parametrize("bad", [np.zeros((2, 3)), np.zeros(4), np.zeros((0, 0))])
def test_rejects_non_square(bad):
    with pytest.raises(ShapeError):
        TruncatedMatrix(bad)


def test_rejects_nonfinite():
    with pytest.raises(ValueError):
        TruncatedMatrix(np.array([[np.nan]]))


def test_embed_and_block_round_trip(rng):
    a = random_matrix(rng, 5)
    big = a.embed(9)
    assert big.dim == 9 and hs_norm(big) == hs_norm(a)
    np.testing.assert_array_equal(big.block(5).entries, a.entries)
    np.testing.assert_array_equal(a.embed(3).entries, a.entries[:3, :3])


def test_density_matrix_invariants():
    rho = DensityMatrix(np.diag([0.5, 0.3, 0.2]))
    assert rho.is_hermitian()
    with pytest.raises(StateError):
        DensityMatrix(np.diag([0.5, 0.6]))
    with pytest.raises(StateError):
        DensityMatrix(np.diag([1.2, -0.2]))
    with pytest.raises(StateError):
        DensityMatrix(np.array([[0.5, 0.1], [0.2, 0.5]]))


def test_density_tolerance_admits_truncation_defect():
    w = np.exp(-np.arange(1, 9.0))
    rho = np.diag(w / w.sum() * (1 - 1e-9))
    with pytest.raises(StateError):
        DensityMatrix(rho)
    assert DensityMatrix(rho, trace_tolerance=1e-8).dim == 8


def test_pad_dim_recorded():
    a = TruncatedMatrix(np.eye(2), pad_dim=4)
    assert a.pad_dim == 4 and adjoint(a).pad_dim == 4
    with pytest.raises(ShapeError):
        TruncatedMatrix(np.eye(3), pad_dim=2)
