import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from schmidtkit import linalg
from schmidtkit.exceptions import ConvergenceError, ValidationError
from schmidtkit.linalg import Tolerance
from schmidtkit.sampling import ginibre, rng_for

from conftest import assert_close

X = np.array([[0, 1], [1, 0]], dtype=complex)


def kron_oracle(a, b):
    ra, ca = a.shape
    rb, cb = b.shape
    out = np.zeros((ra * rb, ca * cb), dtype=complex)
    for i in range(ra):
        for j in range(ca):
            for k in range(rb):
                for l in range(cb):
                    out[i * rb + k, j * cb + l] = a[i, j] * b[k, l]
    return out


def test_kron_examples():
    assert_close(linalg.kron(np.eye(2), np.eye(2)), np.eye(4), 0)
    assert_close(linalg.kron(np.diag([1, 0]), np.diag([0, 1])), np.diag([0, 1, 0, 0]), 0)
    vec_i = np.eye(2).reshape(-1) / np.sqrt(2)
    # (X (x) X) vec(I) = vec(X I X^T)
    assert_close(linalg.kron(X, X) @ vec_i, (X @ np.eye(2) @ X.T).reshape(-1) / np.sqrt(2), 1e-15)
    assert_close(linalg.kron(X, X), kron_oracle(X, X), 0)


def test_kron_matches_index_oracle(rng):
    a, b = ginibre(rng, 2, 3), ginibre(rng, 3, 2)
    assert_close(linalg.kron(a, b), kron_oracle(a, b), 1e-14)


def test_kron_associative_and_bilinear(rng):
    a, b, c = (ginibre(rng, 2, 2) for _ in range(3))
    assert_close(linalg.kron(linalg.kron(a, b), c), linalg.kron(a, linalg.kron(b, c)), 1e-13)
    assert_close(linalg.kron(2 * a + c, b), 2 * linalg.kron(a, b) + linalg.kron(c, b), 1e-13)
    assert_close(linalg.kron_all([a, b, c]), linalg.kron(a, linalg.kron(b, c)), 1e-13)


def test_partial_trace_examples():
    phi = np.array([1, 0, 0, 1]) / np.sqrt(2)
    assert_close(linalg.partial_trace(np.outer(phi, phi), (2, 2), "B"), np.eye(2) / 2, 1e-15)
    psi = np.array([np.sqrt(0.7), 0, 0, np.sqrt(0.3)])
    assert_close(linalg.partial_trace(np.outer(psi, psi), (2, 2), "B"), np.diag([0.7, 0.3]), 1e-15)
    ra, rb = np.diag([0.2, 0.8]), np.diag([0.5, 0.25, 0.25])
    assert_close(linalg.partial_trace(np.kron(ra, rb), (2, 3), "B"), ra, 1e-15)
    assert_close(linalg.partial_trace(np.kron(ra, rb), (2, 3), "A"), rb, 1e-15)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 10_000))
def test_partial_trace_of_product(da, db, seed):
    rng = rng_for(seed, "ptrace")
    a, b = ginibre(rng, da, da), ginibre(rng, db, db)
    m = np.kron(a, b)
    assert_close(linalg.partial_trace(m, (da, db), "B"), np.trace(b) * a, 1e-12)
    assert_close(linalg.partial_trace(m, (da, db), "A"), np.trace(a) * b, 1e-12)
    assert abs(np.trace(linalg.partial_trace(m, (da, db), "B")) - np.trace(m)) < 1e-12


def test_partial_trace_keeps_positivity(rng):
    g = ginibre(rng, 6, 6)
    rho = g @ g.conj().T
    for side in "AB":
        assert linalg.min_eigenvalue(linalg.partial_trace(rho, (2, 3), side)) > -1e-12


def test_partial_trace_dimension_mismatch():
    with pytest.raises(ValidationError):
        linalg.partial_trace(np.eye(5), (2, 3))
    with pytest.raises(ValidationError):
        linalg.partial_trace(np.eye(4), (2, 2), "C")


def test_svd_examples(rng):
    assert_close(linalg.svd(np.eye(2))[1], [1, 1], 1e-15)
    assert_close(linalg.svd(np.diag([3.0, 0.0]))[1], [3, 0], 1e-15)
    m = ginibre(rng, 3, 4)
    u, s, v = linalg.svd(m)
    assert np.all(np.diff(s) <= 0) and np.all(s >= 0)
    assert_close(u @ np.diag(s) @ v.conj().T, m, 1e-10 * np.linalg.norm(m))
    assert_close(u.conj().T @ u, np.eye(3), 1e-12)
    assert_close(v.conj().T @ v, np.eye(3), 1e-12)


def test_svd_failure_is_explicit():
    with pytest.raises((ConvergenceError, ValidationError)):
        linalg.svd(np.array([[np.nan, 0], [0, 1]]))


def test_numerical_rank_is_relative():
    assert linalg.numerical_rank([1.0, 1e-8, 1e-12]) == 2
    assert linalg.numerical_rank([1e-20, 1e-30]) == 1
    assert linalg.numerical_rank([0.0, 0.0]) == 0
    assert linalg.matrix_rank(np.diag([0.5, 0.3, 0.2, 0])) == 3


def test_tolerance_must_be_positive():
    with pytest.raises(ValidationError):
        Tolerance(rank_tol=0)
    with pytest.raises(ValidationError):
        Tolerance(psd_tol=-1e-9)


def test_hermitian_part_symmetrizes_small_asymmetry_only():
    h = np.array([[1.0, 2.0], [2.0 + 1e-14, 3.0]])
    out = linalg.hermitian_part(h)
    assert np.allclose(out, out.conj().T, atol=0)
    with pytest.raises(ValidationError):
        linalg.hermitian_part(np.array([[1.0, 2.0], [2.1, 3.0]]))


def test_operator_sign_maps_zero_to_plus_one():
    assert_close(linalg.operator_sign(np.diag([2.0, 0.0, -1.0])), np.diag([1, 1, -1]), 1e-15)


def test_commutant_examples():
    units = [e for _, _, e in linalg.matrix_units(2)]
    basis = linalg.null_space_of_commutator_system(units, 2)
    assert len(basis) == 1
    assert_close(basis[0], np.eye(2) / np.sqrt(2), 1e-12)
    assert len(linalg.null_space_of_commutator_system([np.eye(2)], 2)) == 4
    diag = linalg.null_space_of_commutator_system([np.diag([1.0, 2.0])], 2)
    assert len(diag) == 2
    for x in diag:
        assert abs(x[0, 1]) < 1e-12 and abs(x[1, 0]) < 1e-12


def test_commutant_basis_is_orthonormal(rng):
    gens = [np.kron(g, np.eye(2)) for g in linalg.algebra_generators(3)]
    basis = linalg.null_space_of_commutator_system(gens, 6)
    gram = np.array([[np.vdot(x, y) for y in basis] for x in basis])
    assert_close(gram, np.eye(len(basis)), 1e-10)
    for x in basis:
        for g in gens:
            assert np.max(np.abs(x @ g - g @ x)) < 1e-10


@pytest.mark.parametrize("mults", [(1,), (2,), (1, 1), (2, 1), (1, 3), (2, 2, 1)])
def test_commutant_dimension_is_sum_of_squared_multiplicities(mults):
    # block algebra: M_2 with multiplicity m_1, M_1 with m_2, M_3 with m_3
    sizes = [2, 1, 3][: len(mults)]
    dim = sum(s * m for s, m in zip(sizes, mults))
    gens, offset = [], 0
    for s, m in zip(sizes, mults):
        for g in linalg.algebra_generators(s) + [np.eye(s)]:
            full = np.zeros((dim, dim), dtype=complex)
            full[offset:offset + s * m, offset:offset + s * m] = np.kron(g, np.eye(m))
            gens.append(full)
        offset += s * m
    assert len(linalg.null_space_of_commutator_system(gens, dim)) == sum(m * m for m in mults)


@pytest.mark.parametrize("dim", [1, 2, 3, 5])
def test_algebra_generators_have_trivial_commutant(dim):
    assert len(linalg.null_space_of_commutator_system(linalg.algebra_generators(dim), dim)) == 1


def test_lstsq_and_null_space(rng):
    a = ginibre(rng, 5, 3)
    x = ginibre(rng, 3, 1)
    sol, res = linalg.lstsq(a, a @ x)
    assert res < 1e-12
    assert_close(sol, x, 1e-12)
    k = linalg.null_space(np.array([[1.0, 1.0, 0.0]]))
    assert k.shape == (3, 2)
    assert_close(np.array([[1.0, 1.0, 0.0]]) @ k, np.zeros((1, 2)), 1e-15)


def test_psd_sqrt(rng):
    g = ginibre(rng, 3, 3)
    p = g @ g.conj().T
    r = linalg.psd_sqrt(p)
    assert_close(r @ r, p, 1e-12)
    assert linalg.is_psd(p) and not linalg.is_psd(-p)
