"""Completely positive maps between matrix algebras.

Maps are stored in the Heisenberg picture ``T: M_in -> M_out`` through the
Choi matrix ``sum_ij E_ij (x) T(E_ij)`` (size ``in*out``). With Kraus
operators ``K_k`` of shape ``(in, out)`` the action is
``T(a) = sum_k K_k^dagger a K_k``; the Schrodinger dual is
``T*(rho) = sum_k K_k rho K_k^dagger``.

A linear functional ``phi`` on ``M_d`` is a map into ``M_1``; its Choi
matrix is the ``d x d`` matrix ``F[k, l] = phi(E_kl)``, i.e. the transpose of
its density matrix. Positivity in ``M_n (x) M_d^*`` is positivity of
``sum_ij E_ij (x) F_ij`` in this representation.
"""
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from . import linalg
from .exceptions import ConvergenceError, ValidationError
from .linalg import DEFAULT_TOL, Tolerance
from .sampling import random_effect
from .states import DensityOperator, purify

FLAG_TOL = 1e-9
LINEARITY_TOL = 1e-9
RN_RESIDUAL_TOL = 1e-7
COMMUTANT_TOL = 1e-9


@dataclass(frozen=True)
class CPMap:
    in_dim: int
    out_dim: int
    choi: np.ndarray

    def __post_init__(self):
        n = int(self.in_dim) * int(self.out_dim)
        choi = linalg.as_matrix(self.choi, "choi")
        if choi.shape != (n, n):
            raise ValidationError(
                f"Choi matrix of shape {choi.shape} does not match dims ({self.in_dim}, {self.out_dim})")
        choi = choi.copy()
        choi.setflags(write=False)
        object.__setattr__(self, "in_dim", int(self.in_dim))
        object.__setattr__(self, "out_dim", int(self.out_dim))
        object.__setattr__(self, "choi", choi)

    @property
    def _blocks(self) -> np.ndarray:
        return self.choi.reshape(self.in_dim, self.out_dim, self.in_dim, self.out_dim)

    def __call__(self, a) -> np.ndarray:
        a = linalg.as_matrix(a)
        if a.shape != (self.in_dim, self.in_dim):
            raise ValidationError(f"input of shape {a.shape}, expected {(self.in_dim, self.in_dim)}")
        return np.einsum("ij,ipjq->pq", a, self._blocks)

    def dual(self, sigma) -> np.ndarray:
        """Schrodinger-picture action ``M_out -> M_in``: ``tr(T*(s) a) = tr(s T(a))``."""
        sigma = linalg.as_matrix(sigma)
        return np.einsum("qp,ipjq->ji", sigma, self._blocks)

    def min_choi_eigenvalue(self) -> float:
        return linalg.min_eigenvalue(self.choi, "choi")

    def is_cp(self, tol: Tolerance = DEFAULT_TOL) -> bool:
        return self.min_choi_eigenvalue() >= -tol.psd_tol * max(1.0, float(np.abs(self.choi).max()))

    @property
    def completely_positive(self) -> bool:
        return self.is_cp()

    @property
    def unital(self) -> bool:
        return bool(np.max(np.abs(self(np.eye(self.in_dim)) - np.eye(self.out_dim))) <= FLAG_TOL)

    @property
    def trace_preserving(self) -> bool:
        reduced = np.einsum("ipjp->ij", self._blocks)
        return bool(np.max(np.abs(reduced - np.eye(self.in_dim))) <= FLAG_TOL)

    def choi_rank(self, tol: Tolerance = DEFAULT_TOL) -> int:
        w, _ = linalg.eigh(self.choi, "choi")
        return linalg.numerical_rank(np.clip(w, 0.0, None), tol)

    def kraus(self, tol: Tolerance = DEFAULT_TOL) -> list:
        """Kraus operators ordered by decreasing Choi eigenvalue."""
        if not self.is_cp(tol):
            raise ValidationError("map is not completely positive")
        w, v = linalg.eigh(self.choi, "choi")
        r = linalg.numerical_rank(np.clip(w, 0.0, None), tol)
        return [np.sqrt(w[k]) * v[:, k].conj().reshape(self.in_dim, self.out_dim) for k in range(r)]

    def __add__(self, other: "CPMap") -> "CPMap":
        self._check_same(other)
        return CPMap(self.in_dim, self.out_dim, self.choi + other.choi)

    def __sub__(self, other: "CPMap") -> "CPMap":
        self._check_same(other)
        return CPMap(self.in_dim, self.out_dim, self.choi - other.choi)

    def __mul__(self, scalar) -> "CPMap":
        return CPMap(self.in_dim, self.out_dim, self.choi * scalar)

    __rmul__ = __mul__

    def _check_same(self, other):
        if (self.in_dim, self.out_dim) != (other.in_dim, other.out_dim):
            raise ValidationError("maps have different dimensions")

    def compose(self, inner: "CPMap") -> "CPMap":
        """``self o inner`` (apply ``inner`` first)."""
        if inner.out_dim != self.in_dim:
            raise ValidationError("dimension mismatch in composition")
        return choi_of(lambda a: self(inner(a)), inner.in_dim, self.out_dim, check_linear=False)


def choi_of(action: Callable[[np.ndarray], np.ndarray], in_dim: int, out_dim: int,
            check_linear: bool = True, rng: Optional[np.random.Generator] = None) -> CPMap:
    """Build the Choi matrix ``sum_ij E_ij (x) action(E_ij)``.

    With ``check_linear`` the action is compared against the Choi-matrix
    reconstruction on random inputs; a mismatch raises ``ValidationError``.
    """
    choi = np.zeros((in_dim * out_dim, in_dim * out_dim), dtype=complex)
    blocks = choi.reshape(in_dim, out_dim, in_dim, out_dim)
    for i, j, e in linalg.matrix_units(in_dim):
        img = np.asarray(action(e), dtype=complex)
        if img.shape != (out_dim, out_dim):
            raise ValidationError(f"action returned shape {img.shape}, expected {(out_dim, out_dim)}")
        blocks[i, :, j, :] = img
    t = CPMap(in_dim, out_dim, choi)
    if check_linear:
        rng = np.random.default_rng(0) if rng is None else rng
        for _ in range(2):
            x = rng.standard_normal((in_dim, in_dim)) + 1j * rng.standard_normal((in_dim, in_dim))
            direct = np.asarray(action(x), dtype=complex)
            err = np.max(np.abs(direct - t(x)))
            if err > LINEARITY_TOL * max(1.0, float(np.abs(direct).max())):
                raise ValidationError(f"action is not linear (deviation {err:.3e})")
    return t


def from_kraus(kraus, in_dim: int = None, out_dim: int = None) -> CPMap:
    """Map ``a -> sum_k K_k^dagger a K_k`` with ``K_k`` of shape ``(in, out)``."""
    kraus = [linalg.as_matrix(k, "Kraus operator") for k in kraus]
    if in_dim is None:
        in_dim, out_dim = kraus[0].shape
    n = in_dim * out_dim
    choi = np.zeros((n, n), dtype=complex)
    for k in kraus:
        vec = k.conj().reshape(-1)
        choi += np.outer(vec, vec.conj())
    return CPMap(in_dim, out_dim, choi)


def identity_map(dim: int) -> CPMap:
    return from_kraus([np.eye(dim)])


def state_map(rho) -> CPMap:
    """The state ``a -> tr(rho a)`` as a unital CP map ``M_d -> M_1``."""
    m = rho.matrix if isinstance(rho, DensityOperator) else linalg.check_square(rho)
    return CPMap(m.shape[0], 1, m.T)


def functional_density(phi: CPMap) -> np.ndarray:
    """Density matrix ``D`` with ``phi(a) = tr(D a)`` for a map into ``M_1``."""
    if phi.out_dim != 1:
        raise ValidationError("not a functional")
    return phi.choi.T.copy()


@dataclass(frozen=True)
class StinespringDilation:
    """``T(a) = V^dagger (a (x) 1_env) V`` with ``V: C^out -> C^in (x) C^env``."""

    isometry: np.ndarray
    in_dim: int
    env_dim: int

    representation = "a -> a (x) 1_env"

    def rep(self, a) -> np.ndarray:
        return np.kron(linalg.as_matrix(a), np.eye(self.env_dim))

    @property
    def space_dim(self) -> int:
        return self.in_dim * self.env_dim

    def apply(self, a) -> np.ndarray:
        v = self.isometry
        return v.conj().T @ self.rep(a) @ v

    def commutant_element(self, q_env) -> np.ndarray:
        """Embed ``q_env`` on the environment as ``1 (x) q_env``."""
        return np.kron(np.eye(self.in_dim), linalg.check_square(q_env, "q_env"))


def minimal_stinespring(t: CPMap, tol: Tolerance = DEFAULT_TOL) -> StinespringDilation:
    if not t.is_cp(tol):
        raise ValidationError("map is not completely positive")
    ks = t.kraus(tol)
    r = len(ks)
    v = np.zeros((t.in_dim * r, t.out_dim), dtype=complex)
    for k, op in enumerate(ks):
        # V psi = sum_k (K_k psi) (x) |k>
        v[k::r, :] = op
    return StinespringDilation(v, t.in_dim, r)


@dataclass(frozen=True)
class GNSData:
    """``(pi, H, Omega)`` for a state on ``M_d`` realized on ``C^d (x) C^r``."""

    dim: int
    multiplicity: int
    cyclic_vector: np.ndarray

    @property
    def space_dim(self) -> int:
        return self.dim * self.multiplicity

    def rep(self, a) -> np.ndarray:
        return np.kron(linalg.as_matrix(a), np.eye(self.multiplicity))

    def state(self, a) -> complex:
        o = self.cyclic_vector
        return complex(o.conj() @ self.rep(a) @ o)


def gns_of_state(rho, tol: Tolerance = DEFAULT_TOL) -> GNSData:
    """GNS triple via the canonical purification, which is cyclic for ``a (x) 1``."""
    psi = purify(rho, tol)
    d, r = psi.dims
    return GNSData(d, r, np.array(psi.amplitudes))


def _rn_spanning_vectors(dilation: StinespringDilation) -> np.ndarray:
    """Columns ``pi(E_ij) V e_k`` spanning the dilation space (minimality)."""
    v = dilation.isometry
    cols = []
    for _, _, e in linalg.matrix_units(dilation.in_dim):
        cols.append(dilation.rep(e) @ v)
    return np.hstack(cols)


def radon_nikodym_linear(t: CPMap, dilation: Optional[StinespringDilation] = None,
                         tol: Tolerance = DEFAULT_TOL):
    """Linear extension of ``Q <-> S = V^dagger Q pi(.) V`` in both directions.

    Returns ``(forward, backward)``: ``forward(Q) -> CPMap`` and
    ``backward(S) -> (Q, residual)``. No order checks are made here.
    """
    dil = minimal_stinespring(t, tol) if dilation is None else dilation
    v = dil.isometry
    w = _rn_spanning_vectors(dil)
    w_pinv = np.linalg.pinv(w)
    d_in, d_out = t.in_dim, t.out_dim

    def forward(q) -> CPMap:
        q = linalg.check_square(q, "Q")
        if q.shape[0] != dil.space_dim:
            raise ValidationError(f"Q has size {q.shape[0]}, dilation space has {dil.space_dim}")
        return choi_of(lambda a: v.conj().T @ q @ dil.rep(a) @ v, d_in, d_out, check_linear=False)

    def backward(s: CPMap):
        if (s.in_dim, s.out_dim) != (d_in, d_out):
            raise ValidationError("maps have different dimensions")
        # <pi(E_ij) V e_k, Q pi(E_i'j') V e_k'> = delta_ii' S(E_jj')[k, k']
        blocks = s._blocks  # [j, k, j', k'] = S(E_jj')[k, k']
        gram = np.zeros((d_in, d_in, d_out, d_in, d_in, d_out), dtype=complex)
        for i in range(d_in):
            gram[i, :, :, i, :, :] = blocks
        gram = gram.reshape(d_in * d_in * d_out, d_in * d_in * d_out)
        q = w_pinv.conj().T @ gram @ w_pinv
        residual = float(np.max(np.abs(w.conj().T @ q @ w - gram)))
        return q, residual

    return forward, backward


def _check_commutant(q, dilation: StinespringDilation) -> float:
    worst = 0.0
    for g in linalg.algebra_generators(dilation.in_dim):
        pg = dilation.rep(g)
        worst = max(worst, float(np.max(np.abs(q @ pg - pg @ q))))
    return worst


def radon_nikodym_forward(t: CPMap, q, dilation: Optional[StinespringDilation] = None,
                          tol: Tolerance = DEFAULT_TOL) -> CPMap:
    """``S = V^dagger Q pi(.) V`` for ``Q`` in the unit interval of the commutant."""
    if not t.unital:
        raise ValidationError("t must be unital")
    dil = minimal_stinespring(t, tol) if dilation is None else dilation
    q = linalg.hermitian_part(q, "Q")
    w, _ = linalg.eigh(q, "Q")
    if w[-1] < -tol.psd_tol or w[0] > 1 + tol.psd_tol:
        raise ValidationError(f"Q is outside the unit interval (spectrum [{w[-1]:.3e}, {w[0]:.3e}])")
    if _check_commutant(q, dil) > COMMUTANT_TOL:
        raise ValidationError("Q is not in the commutant of the dilated representation")
    forward, _ = radon_nikodym_linear(t, dil, tol)
    return forward(q)


def radon_nikodym_backward(t: CPMap, s: CPMap, dilation: Optional[StinespringDilation] = None,
                           tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """The unique ``Q`` in the commutant with ``s = V^dagger Q pi(.) V``."""
    if not t.unital:
        raise ValidationError("t must be unital")
    diff = t - s
    if not (diff.is_cp(tol) and s.is_cp(tol)):
        raise ValidationError("s is not cp-dominated by t")
    dil = minimal_stinespring(t, tol) if dilation is None else dilation
    _, backward = radon_nikodym_linear(t, dil, tol)
    q, residual = backward(s)
    if residual > RN_RESIDUAL_TOL:
        raise ConvergenceError(f"Radon-Nikodym least-squares residual {residual:.3e} too large")
    return (q + q.conj().T) / 2


def radon_nikodym_roundtrip(t: CPMap, samples: int, rng: np.random.Generator,
                            tol: Tolerance = DEFAULT_TOL) -> float:
    """Largest ``|backward(forward(Q)) - Q|`` over random ``Q = 1 (x) q``, ``0 <= q <= 1``."""
    dil = minimal_stinespring(t, tol)
    worst = 0.0
    for _ in range(samples):
        q = dil.commutant_element(random_effect(rng, dil.env_dim))
        s = radon_nikodym_forward(t, q, dil, tol)
        back = radon_nikodym_backward(t, s, dil, tol)
        worst = max(worst, float(np.max(np.abs(back - q))))
    return worst


def complete_positivity_check(lambda_map: Callable[[np.ndarray], np.ndarray], level: int,
                              in_dim: int, trials: int = 500,
                              rng: Optional[np.random.Generator] = None,
                              tol: Tolerance = DEFAULT_TOL) -> Tuple[bool, Optional[np.ndarray]]:
    """Sample whether ``id_level (x) lambda_map`` preserves positivity.

    The first probe is the unnormalized maximally entangled projector (which
    decides complete positivity outright once ``level >= in_dim``), followed by
    ``trials`` random positive inputs of rank one and full rank. Returns
    ``(True, None)`` or ``(False, counterexample_input)``.
    """
    if level < 1:
        raise ValidationError("level must be >= 1")
    rng = np.random.default_rng(0) if rng is None else rng
    n, p = level, in_dim

    def amplify(x):
        blocks = x.reshape(n, p, n, p)
        out = None
        for i in range(n):
            for j in range(n):
                img = np.asarray(lambda_map(blocks[i, :, j, :]), dtype=complex)
                if out is None:
                    q = img.shape[0]
                    out = np.zeros((n, q, n, q), dtype=complex)
                out[i, :, j, :] = img
        q = out.shape[1]
        return out.reshape(n * q, n * q)

    def probes():
        m = min(n, p)
        omega = np.zeros(n * p, dtype=complex)
        for k in range(m):
            omega[k * p + k] = 1.0
        yield np.outer(omega, omega.conj())
        for t_idx in range(trials):
            g = rng.standard_normal((n * p, 1 if t_idx % 2 == 0 else n * p))
            g = g + 1j * rng.standard_normal(g.shape)
            x = g @ g.conj().T
            yield x / np.trace(x).real

    for x in probes():
        y = amplify(x)
        scale = max(1.0, float(np.abs(y).max()))
        if np.max(np.abs(y - y.conj().T)) > 1e-9 * scale:
            return False, x
        if np.linalg.eigvalsh((y + y.conj().T) / 2)[0] < -tol.psd_tol * scale:
            return False, x
    return True, None


def transpose_map(dim: int) -> CPMap:
    return choi_of(lambda a: a.T, dim, dim)
