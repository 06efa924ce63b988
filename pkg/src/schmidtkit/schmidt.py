"""Schmidt rank of finite bipartite pure states, six ways.

Besides the vector Schmidt rank this module builds the objects through which
the rank can be read off: minimal compressions ``(C_A, C_B, Psi)``,
factorizations of ``a -> omega(a (x) .)`` through ``M_k``, the one-sided
normal form, and distillation checks.
"""
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from . import linalg
from .cpmaps import CPMap, choi_of, from_kraus, gns_of_state
from .exceptions import ConvergenceError, ValidationError
from .linalg import DEFAULT_TOL, Tolerance
from .states import (BipartiteVector, DensityOperator, order_interval_dim, rank_of_state,
                     schmidt_decompose)

CORRELATION_TOL = 1e-9
FACTOR_TOL = 1e-8


@dataclass(frozen=True)
class FiniteBipartiteState:
    """A state on ``M_dA (x) M_dB``; ``vector`` is set when the state is pure."""

    dims: Tuple[int, int]
    density: DensityOperator
    vector: Optional[BipartiteVector] = None

    @classmethod
    def pure(cls, v: BipartiteVector) -> "FiniteBipartiteState":
        return cls(v.dims, v.density(), v)

    @classmethod
    def mixed(cls, rho, dims, tol: Tolerance = DEFAULT_TOL) -> "FiniteBipartiteState":
        """From a density matrix; detected as pure (and given a vector) when rank one."""
        rho = rho if isinstance(rho, DensityOperator) else DensityOperator(rho, tuple(dims))
        if rank_of_state(rho, tol) == 1:
            w, v = linalg.eigh(rho.matrix)
            return cls(tuple(dims), rho, BipartiteVector.normalized(v[:, 0], dims))
        return cls(tuple(dims), rho, None)

    @classmethod
    def coerce(cls, omega) -> "FiniteBipartiteState":
        if isinstance(omega, FiniteBipartiteState):
            return omega
        if isinstance(omega, BipartiteVector):
            return cls.pure(omega)
        if isinstance(omega, DensityOperator) and len(omega.dims) == 2:
            return cls.mixed(omega, omega.dims)
        raise ValidationError("expected a FiniteBipartiteState, BipartiteVector or bipartite DensityOperator")

    @property
    def is_pure(self) -> bool:
        return self.vector is not None

    def correlation(self, a, b) -> complex:
        """``omega(a (x) b)``."""
        if self.vector is not None:
            m = self.vector.as_matrix()
            return complex(np.sum(m.conj() * (a @ m @ np.asarray(b).T)))
        return self.density.expectation(np.kron(a, b))

    def correlation_tensor(self) -> np.ndarray:
        """``T[i, j, k, l] = omega(E_ij (x) E_kl)``."""
        da, db = self.dims
        t = self.density.matrix.reshape(da, db, da, db)
        # omega(E_ij (x) E_kl) = rho[(j, l), (i, k)]
        return np.transpose(t, (2, 0, 3, 1)).copy()

    def marginal(self, side: str) -> DensityOperator:
        return self.density.marginal(side)

    def tensor(self, other: "FiniteBipartiteState") -> "FiniteBipartiteState":
        if self.is_pure and other.is_pure:
            return FiniteBipartiteState.pure(self.vector.tensor(other.vector))
        raise ValidationError("tensor products are only provided for pure states")


def _require_pure(omega) -> FiniteBipartiteState:
    omega = FiniteBipartiteState.coerce(omega)
    if not omega.is_pure:
        raise ValidationError("operation requires a pure state")
    return omega


@dataclass(frozen=True)
class Compression:
    """``omega(a (x) b) = <psi, C_A(a) (x) C_B(b) psi>`` with ``C_j: M_dj -> M_k``."""

    c_a: CPMap
    c_b: CPMap
    k: int
    psi: BipartiteVector

    def correlation(self, a, b) -> complex:
        m = self.psi.as_matrix()
        return complex(np.sum(m.conj() * (self.c_a(a) @ m @ self.c_b(b).T)))

    def correlation_tensor(self) -> np.ndarray:
        da, db = self.c_a.in_dim, self.c_b.in_dim
        k = self.k
        ca = self.c_a._blocks  # [i, p, j, q] = C_A(E_ij)[p, q]
        cb = self.c_b._blocks
        m = self.psi.as_matrix()
        # <psi, X (x) Y psi> = sum conj(m[p, r]) X[p, q] Y[r, s] m[q, s]
        return np.einsum("pr,ipjq,krls,qs->ijkl", m.conj(), ca, cb, m)

    def cyclic_dimension(self, side: Optional[str] = None, tol: Tolerance = DEFAULT_TOL) -> int:
        """Dimension of ``span{C(x) psi}`` over product (or one-sided) basis elements."""
        psi = self.psi.as_matrix()
        vecs = []
        ea = [e for _, _, e in linalg.matrix_units(self.c_a.in_dim)]
        eb = [e for _, _, e in linalg.matrix_units(self.c_b.in_dim)]
        ims_a = [self.c_a(e) for e in ea] if side in (None, "A") else [np.eye(self.k)]
        ims_b = [self.c_b(e) for e in eb] if side in (None, "B") else [np.eye(self.k)]
        for x in ims_a:
            for y in ims_b:
                vecs.append((x @ psi @ y.T).reshape(-1))
        return linalg.matrix_rank(np.column_stack(vecs), tol)

    def max_deviation(self, omega: FiniteBipartiteState) -> float:
        return float(np.max(np.abs(self.correlation_tensor() - omega.correlation_tensor())))


@dataclass(frozen=True)
class Factorization:
    """``beta(alpha(a))`` is the functional ``b -> omega(a (x) b)``.

    ``beta`` maps ``M_k`` into functionals on ``M_dB``, stored in the Choi
    representation ``F[p, q] = beta(X)(E_pq)`` of each functional.
    """

    alpha: CPMap
    beta: CPMap
    k: int

    def functional(self, a) -> np.ndarray:
        return self.beta(self.alpha(a))

    def max_deviation(self, omega: FiniteBipartiteState) -> float:
        da = self.alpha.in_dim
        target = omega.correlation_tensor()
        worst = 0.0
        for i, j, e in linalg.matrix_units(da):
            worst = max(worst, float(np.max(np.abs(self.functional(e) - target[i, j]))))
        return worst


@dataclass(frozen=True)
class Infeasible:
    """No factorization through ``M_k``: the correlation map has linear rank ``witness_rank > k**2``."""

    k: int
    witness_rank: int


@dataclass(frozen=True)
class SchmidtRankRecord:
    def_a: int
    def_b: int
    def_c: int
    def_d: int
    def_e: int
    def_f: int

    @property
    def values(self) -> Tuple[int, ...]:
        return (self.def_a, self.def_b, self.def_c, self.def_d, self.def_e, self.def_f)

    @property
    def agree(self) -> bool:
        return len(set(self.values)) == 1

    def to_dict(self) -> dict:
        return {"def_a": self.def_a, "def_b": self.def_b, "def_c": self.def_c,
                "def_d": self.def_d, "def_e": self.def_e, "def_f": self.def_f,
                "agree": self.agree}


def correlation_rank(omega, tol: Tolerance = DEFAULT_TOL) -> int:
    """Linear rank of ``a -> omega(a (x) .)`` as a ``dA^2 x dB^2`` matrix."""
    omega = FiniteBipartiteState.coerce(omega)
    da, db = omega.dims
    return linalg.matrix_rank(omega.correlation_tensor().reshape(da * da, db * db), tol)


def _isometry_map(u: np.ndarray) -> CPMap:
    """``a -> u^dagger a u`` for ``u`` with orthonormal columns."""
    return from_kraus([u])


def minimal_compression(omega, tol: Tolerance = DEFAULT_TOL) -> Compression:
    """Compress each side onto the local Schmidt support: ``C_j(x) = U_j^dagger x U_j``."""
    omega = _require_pure(omega)
    sd = schmidt_decompose(omega.vector, tol)
    k = sd.rank
    psi = BipartiteVector.normalized(np.diag(sd.coefficients).reshape(-1), (k, k))
    return Compression(_isometry_map(sd.left_basis), _isometry_map(sd.right_basis), k, psi)


def _beta_from_compression(comp: Compression) -> CPMap:
    # beta(X)(b) = <psi, X (x) C_B(b) psi>, so F[p, q] = <psi, X (x) C_B(E_pq) psi>
    m = comp.psi.as_matrix()
    cb = comp.c_b._blocks  # [p, r, q, s] = C_B(E_pq)[r, s]

    def action(x):
        return np.einsum("ar,ab,prqs,bs->pq", m.conj(), x, cb, m)

    return choi_of(action, comp.k, comp.c_b.in_dim, check_linear=False)


def factor_through(omega, k: int, tol: Tolerance = DEFAULT_TOL):
    """Factorize ``a -> omega(a (x) .)`` through ``M_k``, or report why it cannot be done."""
    if k < 1:
        raise ValidationError("k must be >= 1")
    omega = _require_pure(omega)
    witness = correlation_rank(omega, tol)
    if witness > k * k:
        return Infeasible(k, witness)
    comp = minimal_compression(omega, tol)
    r = comp.k
    if r > k:
        # rank bound met but Schmidt rank larger: cannot happen for pure states
        return Infeasible(k, witness)
    alpha = comp.c_a
    beta = _beta_from_compression(comp)
    if k > r:
        marginal_a = omega.marginal("A").matrix

        def pad_alpha(a, inner=alpha):
            out = np.zeros((k, k), dtype=complex)
            out[:r, :r] = inner(a)
            out[r:, r:] = np.trace(marginal_a @ a) * np.eye(k - r)
            return out

        def cut_beta(x, inner=beta):
            return inner(x[:r, :r])

        alpha = choi_of(pad_alpha, alpha.in_dim, k, check_linear=False)
        beta = choi_of(cut_beta, k, beta.out_dim, check_linear=False)
    fac = Factorization(alpha, beta, k)
    dev = fac.max_deviation(omega)
    if dev > FACTOR_TOL:
        return Infeasible(k, witness)
    return fac


def smallest_factorization_dim(omega, tol: Tolerance = DEFAULT_TOL) -> int:
    omega = _require_pure(omega)
    k = 1
    while True:
        if isinstance(factor_through(omega, k, tol), Factorization):
            return k
        k += 1


def schmidt_rank_all_ways(omega, tol: Tolerance = DEFAULT_TOL) -> SchmidtRankRecord:
    """Evaluate the six equivalent definitions and insist that they agree."""
    omega = _require_pure(omega)
    # (A) the GNS space of a pure state on M_dA (x) M_dB is the vector itself
    gns = gns_of_state(omega.density, tol)
    if gns.multiplicity != 1:
        raise ConvergenceError("GNS representation of a pure state must be irreducible")
    omega_vec = BipartiteVector.normalized(gns.cyclic_vector, omega.dims)
    def_a = schmidt_decompose(omega_vec, tol).rank
    comp = minimal_compression(omega, tol)
    if comp.max_deviation(omega) > CORRELATION_TOL:
        raise ConvergenceError("compression does not reproduce the correlations")
    # (B) sqrt of the dimension of the space generated by the compressed algebras
    def_b = int(round(np.sqrt(comp.cyclic_dimension(tol=tol))))
    def_c = comp.k
    def_d = smallest_factorization_dim(omega, tol)
    ra = rank_of_state(omega.marginal("A"), tol)
    rb = rank_of_state(omega.marginal("B"), tol)
    if ra != rb:
        raise ConvergenceError(f"marginal ranks differ ({ra} vs {rb})")
    fa = order_interval_dim(omega.marginal("A"), tol)
    fb = order_interval_dim(omega.marginal("B"), tol)
    if fa != fb:
        raise ConvergenceError(f"order-interval dimensions differ ({fa} vs {fb})")
    record = SchmidtRankRecord(def_a, def_b, def_c, def_d, ra, int(round(np.sqrt(fa))))
    if not record.agree:
        raise ConvergenceError(f"definitions disagree: {record.values}")
    return record


def schmidt_rank(omega, tol: Tolerance = DEFAULT_TOL) -> int:
    """Vector Schmidt rank of a pure state."""
    omega = _require_pure(omega)
    return schmidt_decompose(omega.vector, tol).rank


def bob_joins_alice(omega, tol: Tolerance = DEFAULT_TOL) -> Tuple[BipartiteVector, CPMap]:
    """One-sided normal form ``omega(a (x) b) = <psi, a (x) T_B(b) psi>``.

    ``psi = sum_i sqrt(p_i) phi_i (x) |i>`` purifies Alice's marginal and
    ``<i|T_B(b)|j> = (p_i p_j)^(-1/2) omega(|phi_i><phi_j| (x) b)``.
    """
    omega = _require_pure(omega)
    rho = omega.marginal("A")
    w, v = linalg.eigh(rho.matrix)
    r = rank_of_state(rho, tol)
    p = np.clip(w[:r], 0.0, None)
    phi = v[:, :r]
    psi = BipartiteVector.normalized((phi * np.sqrt(p)).reshape(-1), (rho.dim, r))
    weights = 1.0 / np.sqrt(np.outer(p, p))

    def t_b(b):
        out = np.zeros((r, r), dtype=complex)
        for i in range(r):
            for j in range(r):
                out[i, j] = omega.correlation(np.outer(phi[:, i], phi[:, j].conj()), b)
        return out * weights

    return psi, choi_of(t_b, omega.dims[1], r, check_linear=False)


def local_operation(omega, t_a: CPMap, t_b: CPMap, tol: Tolerance = DEFAULT_TOL) -> FiniteBipartiteState:
    """The state ``x (x) y -> omega(T_A(x) (x) T_B(y))`` for Heisenberg maps ``T_j: M_ej -> M_dj``."""
    omega = FiniteBipartiteState.coerce(omega)
    if (t_a.out_dim, t_b.out_dim) != tuple(omega.dims):
        raise ValidationError("local maps do not land in the state's algebras")
    ka, kb = t_a.kraus(tol), t_b.kraus(tol)
    rho = omega.density.matrix
    out = sum(np.kron(x, y) @ rho @ np.kron(x, y).conj().T for x in ka for y in kb)
    out = out / np.trace(out).real
    return FiniteBipartiteState.mixed(out, (t_a.in_dim, t_b.in_dim), tol)


def distill_check(omega, d_a: CPMap, d_b: CPMap, target: BipartiteVector,
                  tol: Tolerance = DEFAULT_TOL) -> bool:
    """Whether ``omega(D_A(a) (x) D_B(b)) = <target, a (x) b target>`` on a product basis.

    When it holds and ``omega`` is pure, the bound ``SR(target) <= SR(omega)``
    is asserted.
    """
    omega = FiniteBipartiteState.coerce(omega)
    if (d_a.out_dim, d_b.out_dim) != tuple(omega.dims):
        raise ValidationError("distillation maps do not land in the state's algebras")
    if (d_a.in_dim, d_b.in_dim) != tuple(target.dims):
        raise ValidationError("distillation maps do not match the target dimensions")
    if not (d_a.is_cp(tol) and d_b.is_cp(tol) and d_a.unital and d_b.unital):
        raise ValidationError("distillation maps must be unital and completely positive")
    pulled = local_operation(omega, d_a, d_b, tol)
    reference = FiniteBipartiteState.pure(target).correlation_tensor()
    ok = float(np.max(np.abs(pulled.correlation_tensor() - reference))) <= CORRELATION_TOL
    if ok and omega.is_pure:
        sr_target = schmidt_decompose(target, tol).rank
        sr_omega = schmidt_rank(omega, tol)
        if sr_target > sr_omega:
            raise AssertionError(f"distilled Schmidt rank {sr_target} exceeds source rank {sr_omega}")
    return ok


def constant_map(vector, out_dim: int) -> CPMap:
    """Unital CP map ``a -> <v, a v> 1_out`` from ``M_len(v)``."""
    v = np.asarray(vector, dtype=complex)
    v = v / np.linalg.norm(v)
    kraus = [np.outer(v, np.eye(out_dim)[k]) for k in range(out_dim)]
    return from_kraus(kraus, len(v), out_dim)


def compressions_related_by_local_unitaries(c1: Compression, c2: Compression,
                                            tol: float = 1e-9) -> bool:
    """Whether ``c2`` is ``c1`` conjugated by local unitaries ``W_A (x) W_B``.

    Works for compressions whose maps have a single Kraus operator (as built
    by :func:`minimal_compression`); ``W_j`` is recovered from those
    operators and then checked on the maps and on the vector.
    """
    if c1.k != c2.k:
        return False
    s1 = schmidt_decompose(c1.psi).coefficients
    s2 = schmidt_decompose(c2.psi).coefficients
    if s1.shape != s2.shape or np.max(np.abs(s1 - s2)) > tol:
        return False
    ws = []
    for m1, m2 in ((c1.c_a, c2.c_a), (c1.c_b, c2.c_b)):
        k1, k2 = m1.kraus(), m2.kraus()
        if len(k1) != 1 or len(k2) != 1:
            raise ValidationError("compression maps must have a single Kraus operator")
        w = k1[0].conj().T @ k2[0]
        if np.max(np.abs(w.conj().T @ w - np.eye(c1.k))) > tol:
            return False
        ws.append(w)
    moved = (ws[0].conj().T @ c1.psi.as_matrix() @ ws[1].conj()).reshape(-1)
    overlap = abs(np.vdot(c2.psi.amplitudes, moved))
    return bool(abs(overlap - 1.0) <= tol)
