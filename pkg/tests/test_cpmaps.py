import numpy as np
import pytest

from schmidtkit import cpmaps, linalg
from schmidtkit.cpmaps import (CPMap, choi_of, complete_positivity_check, from_kraus, gns_of_state,
                               identity_map, minimal_stinespring, radon_nikodym_backward,
                               radon_nikodym_forward, radon_nikodym_linear, state_map, transpose_map)
from schmidtkit.exceptions import ValidationError
from schmidtkit.sampling import ginibre, random_density, random_effect, random_kraus_unital
from schmidtkit.states import DensityOperator

from conftest import assert_close


def depolarizing(d):
    return choi_of(lambda a: np.trace(a) * np.eye(d) / d, d, d)


def test_choi_examples():
    ident = choi_of(lambda a: a, 2, 2)
    omega = np.eye(2).reshape(-1)
    assert_close(ident.choi, np.outer(omega, omega), 0)
    assert ident.choi_rank() == 1
    assert abs(np.trace(ident.choi) - 2) < 1e-15
    dep = depolarizing(2)
    assert_close(dep.choi, np.eye(4) / 2, 1e-15)
    assert dep.choi_rank() == 4
    t = transpose_map(2)
    assert t.min_choi_eigenvalue() < -0.5
    assert not t.completely_positive


def test_choi_of_rejects_nonlinear_action():
    with pytest.raises(ValidationError):
        choi_of(lambda a: a @ a, 2, 2)
    with pytest.raises(ValidationError):
        choi_of(lambda a: a + np.eye(2), 2, 2)


def test_flags():
    assert identity_map(3).unital and identity_map(3).trace_preserving
    amp_damp = from_kraus([np.array([[1, 0], [0, np.sqrt(0.7)]]), np.array([[0, np.sqrt(0.3)], [0, 0]])])
    assert amp_damp.is_cp()
    # sum K^dagger K = 1 makes the Heisenberg map unital
    assert amp_damp.unital and not amp_damp.trace_preserving


def test_dual_is_adjoint(rng):
    t = from_kraus(random_kraus_unital(rng, 3, 2, 2))
    a, s = ginibre(rng, 3, 3), ginibre(rng, 2, 2)
    assert abs(np.trace(t.dual(s) @ a) - np.trace(s @ t(a))) < 1e-12
    assert t.dual(np.eye(2)).shape == (3, 3)


def test_kraus_reconstruct_and_order(rng):
    t = from_kraus(random_kraus_unital(rng, 2, 3, 3))
    ks = t.kraus()
    assert len(ks) == t.choi_rank() == 3
    norms = [np.linalg.norm(k) for k in ks]
    assert norms == sorted(norms, reverse=True)
    assert_close(from_kraus(ks, 2, 3).choi, t.choi, 1e-12)


def test_compose(rng):
    s = from_kraus(random_kraus_unital(rng, 2, 3, 2))
    t = from_kraus(random_kraus_unital(rng, 3, 2, 2))
    a = ginibre(rng, 2, 2)
    assert_close(t.compose(s)(a), t(s(a)), 1e-12)


def test_stinespring_examples():
    assert minimal_stinespring(identity_map(2)).env_dim == 1
    assert minimal_stinespring(depolarizing(2)).env_dim == 4
    pure = state_map(DensityOperator(np.diag([1.0, 0.0])))
    dil = minimal_stinespring(pure)
    assert dil.space_dim == 2
    assert_close(dil.isometry.reshape(-1), [1, 0], 1e-12)


def test_stinespring_reconstruction(rng):
    for _ in range(20):
        i, o = (int(x) for x in rng.integers(1, 4, size=2))
        t = from_kraus(random_kraus_unital(rng, i, o, int(rng.integers(-(-o // i), 4))))
        dil = minimal_stinespring(t)
        assert dil.env_dim == t.choi_rank()
        assert_close(dil.isometry.conj().T @ dil.isometry, np.eye(o), 1e-9)
        for _, _, e in linalg.matrix_units(i):
            assert_close(dil.apply(e), t(e), 1e-9)


def test_stinespring_rejects_non_cp():
    with pytest.raises(ValidationError):
        minimal_stinespring(transpose_map(2))


def test_gns_examples():
    g = gns_of_state(DensityOperator(np.diag([1.0, 0.0])))
    assert g.space_dim == 2
    assert_close(np.abs(g.cyclic_vector), [1, 0], 1e-12)
    g = gns_of_state(DensityOperator(np.eye(2) / 2))
    assert g.space_dim == 4
    sv = np.linalg.svd(g.cyclic_vector.reshape(2, 2), compute_uv=False)
    assert_close(sv, [2 ** -0.5] * 2, 1e-12)
    g = gns_of_state(DensityOperator(np.diag([0.7, 0.3])))
    assert g.space_dim == 4
    assert abs(g.state(np.diag([1.0, 0.0])) - 0.7) < 1e-12


def test_gns_is_cyclic_representation(rng):
    rho = random_density(rng, 3, 2)
    g = gns_of_state(rho)
    units = [e for _, _, e in linalg.matrix_units(3)]
    for a in units:
        assert abs(g.state(a) - rho.expectation(a)) < 1e-9
        for b in units:
            assert_close(g.rep(a) @ g.rep(b), g.rep(a @ b), 1e-12)
    span = np.column_stack([g.rep(a) @ g.cyclic_vector for a in units])
    assert linalg.matrix_rank(span) == g.space_dim


def test_rn_forward_examples():
    t = state_map(DensityOperator(np.eye(2) / 2))
    dil = minimal_stinespring(t)
    assert_close(radon_nikodym_forward(t, np.eye(4), dil).choi, t.choi, 1e-12)
    assert_close(radon_nikodym_forward(t, np.zeros((4, 4)), dil).choi, np.zeros((2, 2)), 0)
    q = dil.commutant_element(np.diag([1.0, 0.0]))
    s = radon_nikodym_forward(t, q, dil)
    assert s.is_cp()
    assert abs(s(np.eye(2))[0, 0] - 0.5) < 1e-12
    # direct evaluation <Omega, pi(a) Q Omega>
    omega = dil.isometry[:, 0]
    a = np.array([[0.3, 0.1j], [-0.1j, 0.7]])
    assert abs(s(a)[0, 0] - omega.conj() @ dil.rep(a) @ q @ omega) < 1e-12


def test_rn_forward_rejects_bad_q():
    t = state_map(DensityOperator(np.eye(2) / 2))
    dil = minimal_stinespring(t)
    with pytest.raises(ValidationError):
        radon_nikodym_forward(t, 2 * np.eye(4), dil)
    with pytest.raises(ValidationError):
        radon_nikodym_forward(t, np.diag([1.0, 0, 0, 0]), dil)  # not in the commutant
    with pytest.raises(ValidationError):
        radon_nikodym_forward(t * 2, np.eye(4), dil)  # not unital


def test_rn_backward_examples(rng):
    t = from_kraus(random_kraus_unital(rng, 2, 2, 2))
    dil = minimal_stinespring(t)
    assert_close(radon_nikodym_backward(t, t, dil), np.eye(dil.space_dim), 1e-10)
    assert_close(radon_nikodym_backward(t, t * 0.5, dil), np.eye(dil.space_dim) / 2, 1e-10)
    with pytest.raises(ValidationError):
        radon_nikodym_backward(t, t * 1.5, dil)


def test_rn_round_trip_and_order(rng):
    for _ in range(10):
        i, o = (int(x) for x in rng.integers(1, 4, size=2))
        t = from_kraus(random_kraus_unital(rng, i, o, -(-o // i)))
        dil = minimal_stinespring(t)
        q = dil.commutant_element(random_effect(rng, dil.env_dim))
        s = radon_nikodym_forward(t, q, dil)
        assert (t - s).is_cp() and s.is_cp()
        assert_close(radon_nikodym_backward(t, s, dil), q, 1e-8)
        assert_close(radon_nikodym_forward(t, radon_nikodym_backward(t, s, dil), dil).choi, s.choi, 1e-8)


def test_rn_affine(rng):
    t = from_kraus(random_kraus_unital(rng, 3, 2, 2))
    dil = minimal_stinespring(t)
    q1 = dil.commutant_element(random_effect(rng, dil.env_dim))
    q2 = dil.commutant_element(random_effect(rng, dil.env_dim))
    p = 0.3
    lhs = radon_nikodym_forward(t, p * q1 + (1 - p) * q2, dil).choi
    rhs = p * radon_nikodym_forward(t, q1, dil).choi + (1 - p) * radon_nikodym_forward(t, q2, dil).choi
    assert_close(lhs, rhs, 1e-12)


def test_rn_roundtrip_helper(rng):
    t = state_map(random_density(rng, 3))
    assert cpmaps.radon_nikodym_roundtrip(t, 10, rng) < 1e-8


def test_complete_positivity_check_examples(rng):
    ok, cex = complete_positivity_check(lambda a: a, 2, 2, trials=50, rng=rng)
    assert ok and cex is None
    ok, cex = complete_positivity_check(lambda a: a.T, 2, 2, trials=50, rng=rng)
    assert not ok
    assert linalg.min_eigenvalue(cex) >= -1e-12
    t = transpose_map(2)
    blocks = cex.reshape(2, 2, 2, 2)
    image = np.block([[t(blocks[i, :, j, :]) for j in range(2)] for i in range(2)])
    assert linalg.min_eigenvalue(image) < -1e-9


def test_transpose_is_positive_at_level_one(rng):
    assert complete_positivity_check(lambda a: a.T, 1, 2, trials=100, rng=rng)[0]


def test_rn_bijection_is_complete_order_isomorphism(rng):
    t = state_map(DensityOperator(np.eye(2) / 2))
    dil = minimal_stinespring(t)
    forward, backward = radon_nikodym_linear(t, dil)

    # matrices of functionals are ordered through their Choi matrices
    def lam(q_env):
        return forward(dil.commutant_element(q_env)).choi

    def lam_inv(choi):
        q, _ = backward(CPMap(2, 1, choi))
        return q.reshape(2, 2, 2, 2)[0, :, 0, :]

    for level in (1, 2, 3):
        assert complete_positivity_check(lam, level, 2, trials=500, rng=rng)[0]
        assert complete_positivity_check(lam_inv, level, 2, trials=500, rng=rng)[0]


def test_choi_theorem_sampled(rng):
    agree = 0
    for _ in range(500):
        g = ginibre(rng, 4, 4)
        h = (g + g.conj().T) / 2
        shift = -np.linalg.eigvalsh(h)[0] + rng.uniform(-0.5, 0.5)
        t = CPMap(2, 2, h + shift * np.eye(4))
        ok, _ = complete_positivity_check(t, 2, 2, trials=10, rng=rng)
        agree += ok == t.is_cp()
    assert agree == 500


def test_cpmap_shape_validation():
    with pytest.raises(ValidationError):
        CPMap(2, 2, np.eye(3))
    with pytest.raises(ValidationError):
        identity_map(2)(np.eye(3))
