"""Translation-invariant states on spin chains from a transfer CP map.

A spec ``(d, n, E, rho)`` consists of a unital CP map ``E: M_d (x) M_n -> M_n``
and a density operator ``rho`` on ``M_n`` with ``rho o E_1 = rho`` where
``E_a = E(a (x) .)``. The state is

    omega(a_1 (x) ... (x) a_L) = tr(rho E_{a_1}(E_{a_2}( ... E_{a_L}(1) ... ))).

For a matrix-product description with tensors ``A_s`` (``sum_s A_s A_s^dagger
= 1``) the transfer map is ``E(a (x) X) = sum_st a_st A_s X A_t^dagger``.
"""
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from . import linalg
from .cpmaps import CPMap, choi_of, from_kraus
from .exceptions import ConvergenceError, ValidationError
from .linalg import DEFAULT_TOL, Tolerance
from .states import DensityOperator

SPEC_TOL = 1e-9
MAX_WINDOW = 12
MAX_CONDITIONED_ROWS = 1 << 20
CERTIFICATE_LABEL = "Schmidt-rank certificate (assumes purity)"


@dataclass(frozen=True)
class FCSSpec:
    d: int
    n: int
    transfer: CPMap
    rho: DensityOperator

    def __post_init__(self):
        if self.transfer.in_dim != self.d * self.n or self.transfer.out_dim != self.n:
            raise ValidationError("transfer map must go from M_d (x) M_n to M_n")
        if self.rho.dim != self.n:
            raise ValidationError("boundary state must live on M_n")

    def site_map(self, a) -> np.ndarray:
        """Matrix of ``X -> E(a (x) X)`` acting on row-major ``vec(X)``."""
        a = linalg.as_matrix(a)
        # c[s, x, p, t, y, q] = E(E_st (x) E_xy)[p, q]
        c = self.transfer.choi.reshape(self.d, self.n, self.n, self.d, self.n, self.n)
        return np.einsum("st,sxptyq->pqxy", a, c).reshape(self.n * self.n, self.n * self.n)

    def e_a(self, a, x) -> np.ndarray:
        return self.transfer(np.kron(a, x))

    def unitality_error(self) -> float:
        one = self.transfer(np.eye(self.d * self.n))
        return float(np.max(np.abs(one - np.eye(self.n))))

    def stationarity_error(self) -> float:
        r = self.rho.matrix
        return float(np.max(np.abs(self.transfer.dual(r).reshape(self.d, self.n, self.d, self.n)
                                   .trace(axis1=0, axis2=2) - r)))

    def validate(self, tol: float = SPEC_TOL) -> "FCSSpec":
        if not self.transfer.is_cp(Tolerance(DEFAULT_TOL.rank_tol, max(tol, DEFAULT_TOL.psd_tol))):
            raise ValidationError("transfer map is not completely positive")
        if self.unitality_error() > tol:
            raise ValidationError(f"transfer map is not unital (error {self.unitality_error():.3e})")
        if self.stationarity_error() > tol:
            raise ValidationError(f"boundary state is not stationary (error {self.stationarity_error():.3e})")
        return self


def _check_window(spec: FCSSpec, window: Sequence[np.ndarray], max_length: int = MAX_WINDOW):
    if len(window) > max_length:
        raise ValidationError(f"window of length {len(window)} exceeds maximum {max_length}")
    ops = []
    for a in window:
        a = linalg.as_matrix(a, "site observable")
        if a.shape != (spec.d, spec.d):
            raise ValidationError(f"site observable has shape {a.shape}, expected {(spec.d, spec.d)}")
        ops.append(a)
    return ops


def evaluate(spec: FCSSpec, window: Sequence[np.ndarray], max_length: int = MAX_WINDOW) -> complex:
    """Expectation of ``a_1 (x) ... (x) a_L`` on consecutive sites."""
    ops = _check_window(spec, window, max_length)
    x = np.eye(spec.n, dtype=complex)
    for a in reversed(ops):
        x = spec.e_a(a, x)
    return complex(np.trace(spec.rho.matrix @ x))


def _site_units(spec: FCSSpec) -> np.ndarray:
    return np.array([spec.site_map(e) for _, _, e in linalg.matrix_units(spec.d)])


def conditioned_space_dim(spec: FCSSpec, left_window: int, right_window: int,
                          tol: Tolerance = DEFAULT_TOL) -> int:
    """Rank of ``omega(a_L (x) a_R)`` over product bases of two adjacent windows.

    The correlation matrix factors as ``left @ right.T`` with ``left[alpha]``
    the functional ``X -> rho(E_{a_alpha}(X))`` and ``right[beta] =
    E_{b_beta}(1)``; its singular values are computed through thin QR factors.
    """
    for w in (left_window, right_window):
        if w < 0 or spec.d ** (2 * w) > MAX_CONDITIONED_ROWS:
            raise ValidationError(f"window {w} too large for site dimension {spec.d}")
    n2 = spec.n * spec.n
    units = _site_units(spec)
    # tr(rho X) = vec(rho^T) . vec(X)
    left = spec.rho.matrix.T.reshape(1, n2).astype(complex)
    for _ in range(left_window):
        left = np.einsum("kx,uxy->kuy", left, units).reshape(-1, n2)
    right = np.eye(spec.n, dtype=complex).reshape(1, n2)
    for _ in range(right_window):
        right = np.einsum("uxy,ky->ukx", units, right).reshape(-1, n2)
    r_left = np.linalg.qr(left, mode="r")
    r_right = np.linalg.qr(right, mode="r")
    s = np.linalg.svd(r_left @ r_right.T, compute_uv=False)
    rank = linalg.numerical_rank(s, tol)
    if rank > n2:
        raise ConvergenceError("conditioned space exceeds bond dimension squared")
    return rank


def stationary_state(transfer: CPMap, d: int, n: int) -> DensityOperator:
    """Fixed point of the dual of ``X -> E(1 (x) X)``."""
    e1 = np.zeros((n * n, n * n), dtype=complex)
    for k, (_, _, e) in enumerate(linalg.matrix_units(n)):
        e1[:, k] = transfer(np.kron(np.eye(d), e)).reshape(-1)
    # rho o E_1 = rho  <=>  E_1^T vec(rho^T) = vec(rho^T) in row-major coordinates
    w, v = np.linalg.eig(e1.T)
    k = int(np.argmin(np.abs(w - 1.0)))
    if abs(w[k] - 1.0) > 1e-8:
        raise ConvergenceError("transfer map has no eigenvalue 1")
    rho = v[:, k].reshape(n, n).T
    rho = rho / np.trace(rho)
    rho = (rho + rho.conj().T) / 2
    if np.linalg.eigvalsh(rho)[0] < -1e-9:
        rho = -rho
    return DensityOperator(rho / np.trace(rho).real)


def from_mps_tensors(tensors: Sequence[np.ndarray], rho=None) -> FCSSpec:
    """Spec from tensors ``A_s`` with ``E(a (x) X) = sum_st a_st A_s X A_t^dagger``."""
    tensors = [linalg.check_square(a, "MPS tensor") for a in tensors]
    d, n = len(tensors), tensors[0].shape[0]
    # single Kraus operator K = sum_s |s> (x) A_s^dagger : C^n -> C^d (x) C^n
    k = np.vstack([a.conj().T for a in tensors])
    transfer = from_kraus([k], d * n, n)
    if rho is None:
        rho = stationary_state(transfer, d, n)
    elif not isinstance(rho, DensityOperator):
        rho = DensityOperator(rho)
    return FCSSpec(d, n, transfer, rho)


def aklt_tensors() -> list:
    """Spin-1 bond-2 tensors (``m = +1, 0, -1``) of the AKLT valence-bond state."""
    sp = np.array([[0, 1], [0, 0]], dtype=complex)
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    return [np.sqrt(2 / 3) * sp, -np.sqrt(1 / 3) * sz, -np.sqrt(2 / 3) * sp.T]


def aklt_spec() -> FCSSpec:
    return from_mps_tensors(aklt_tensors()).validate()


def product_spec(site_density) -> FCSSpec:
    """``n = 1`` spec of the product state with single-site density ``site_density``."""
    sigma = site_density.matrix if isinstance(site_density, DensityOperator) else np.asarray(site_density)
    d = sigma.shape[0]
    transfer = choi_of(lambda y: np.array([[np.trace(sigma @ y)]]), d, 1)
    return FCSSpec(d, 1, transfer, DensityOperator(np.eye(1))).validate()


def pad_block(spec: FCSSpec, extra: int, rho_weight: float = 0.0,
              block_tensors: Optional[Sequence[np.ndarray]] = None) -> FCSSpec:
    """Add a decoupled ``extra``-dimensional block to the bond space.

    The new transfer map acts as the old one on the top-left block and, on the
    added block, as ``X -> sum_st a_st B_s X B_t^dagger`` (default: the
    product state on ``|0><0|``). Off-diagonal blocks are annihilated by a
    pinching, so the map stays unital and CP. ``rho_weight`` is the boundary
    weight put on the new block (zero keeps the generated state unchanged).
    """
    d, n = spec.d, spec.n
    if block_tensors is None:
        block_tensors = [np.eye(extra) if s == 0 else np.zeros((extra, extra)) for s in range(d)]
        extra_spec = from_mps_tensors(block_tensors, rho=np.eye(extra) / extra)
    else:
        extra_spec = from_mps_tensors(block_tensors)
    m = n + extra

    def action(y):
        y4 = y.reshape(d, m, d, m)
        top = y4[:, :n, :, :n].reshape(d * n, d * n)
        bottom = y4[:, n:, :, n:].reshape(d * extra, d * extra)
        out = np.zeros((m, m), dtype=complex)
        out[:n, :n] = spec.transfer(top)
        out[n:, n:] = extra_spec.transfer(bottom)
        return out

    transfer = choi_of(action, d * m, m)
    rho = np.zeros((m, m), dtype=complex)
    rho[:n, :n] = (1 - rho_weight) * spec.rho.matrix
    if rho_weight:
        rho[n:, n:] = rho_weight * extra_spec.rho.matrix
    return FCSSpec(d, m, transfer, DensityOperator(rho))


def random_injective_spec(rng: np.random.Generator, d: int, n: int) -> FCSSpec:
    from .sampling import random_isometry
    v = random_isometry(rng, d * n, n)
    tensors = [v[s * n:(s + 1) * n, :].conj().T for s in range(d)]
    return from_mps_tensors(tensors).validate()


def _compress_to_subspace(spec: FCSSpec, w: np.ndarray) -> FCSSpec:
    """Restrict to the range of the isometry ``w``: ``E'(a (x) Y) = w^dagger E(a (x) w Y w^dagger) w``."""
    d, n = spec.d, spec.n
    r = w.shape[1]
    big = np.kron(np.eye(d), w)

    def action(y):
        return w.conj().T @ spec.transfer(big @ y @ big.conj().T) @ w

    transfer = choi_of(action, d * r, r, check_linear=False)
    rho = w.conj().T @ spec.rho.matrix @ w
    return FCSSpec(d, r, transfer, DensityOperator(rho / np.trace(rho).real))


def _restrict_to_support(spec: FCSSpec, tol: Tolerance) -> FCSSpec:
    w, v = linalg.eigh(spec.rho.matrix)
    r = linalg.numerical_rank(np.clip(w, 0.0, None), tol)
    if r == spec.n:
        return spec
    return _compress_to_subspace(spec, v[:, :r])


def invariant_algebra(spec: FCSSpec, tol: float = 1e-10) -> np.ndarray:
    """Smallest unital *-algebra containing ``1`` and closed under every ``E_a``.

    Returned as orthonormal columns of row-major vecs.
    """
    n = spec.n
    units = [spec.site_map(e) for _, _, e in linalg.matrix_units(spec.d)]
    basis = linalg.orthonormalize([np.eye(n)], tol)
    while True:
        mats = [basis[:, k].reshape(n, n) for k in range(basis.shape[1])]
        cands = [basis[:, k] for k in range(basis.shape[1])]
        cands += [u @ basis[:, k] for u in units for k in range(basis.shape[1])]
        cands += [m.conj().T.reshape(-1) for m in mats]
        cands += [(x @ y).reshape(-1) for x in mats for y in mats]
        new = linalg.orthonormalize(cands, tol)
        if new.shape[1] == basis.shape[1]:
            return basis
        if new.shape[1] >= n * n:
            return np.eye(n * n, dtype=complex)
        basis = new


def _cluster(values: np.ndarray, tol: float) -> list:
    """Group indices of sorted real ``values`` whose gaps are below ``tol``."""
    groups, current = [], [0]
    for k in range(1, len(values)):
        if abs(values[k] - values[k - 1]) <= tol:
            current.append(k)
        else:
            groups.append(current)
            current = [k]
    groups.append(current)
    return groups


def _block_isometries(alg_mats: list, n: int, rng: np.random.Generator, tol: Tolerance) -> list:
    """Isometries ``W_i`` with ``X -> (W_i^dagger X W_i)_i`` a *-isomorphism onto ``(+)_i M_{m_i}``."""
    commutant = linalg.null_space_of_commutator_system(alg_mats, n, tol)
    # center = algebra intersect commutant
    a_mat = np.column_stack([m.reshape(-1) for m in alg_mats])
    c_mat = np.column_stack([m.reshape(-1) for m in commutant])
    ns = linalg.null_space(np.hstack([a_mat, -c_mat]), tol)
    center = [(a_mat @ ns[:a_mat.shape[1], k]).reshape(n, n) for k in range(ns.shape[1])]
    h = sum(rng.standard_normal() * (z + z.conj().T) + rng.standard_normal() * 1j * (z - z.conj().T)
            for z in center)
    w, v = np.linalg.eigh(h)
    isometries = []
    for group in _cluster(w, 1e-7 * max(1.0, np.abs(w).max())):
        p = v[:, group]
        hc = sum(rng.standard_normal() * (c + c.conj().T) + rng.standard_normal() * 1j * (c - c.conj().T)
                 for c in commutant)
        hb = p.conj().T @ hc @ p
        wb, vb = np.linalg.eigh((hb + hb.conj().T) / 2)
        sub = _cluster(wb, 1e-7 * max(1.0, np.abs(wb).max()))[0]
        isometries.append(p @ vb[:, sub])
    dims = [iso.shape[1] for iso in isometries]
    if sum(m * m for m in dims) != len(alg_mats):
        raise ConvergenceError("block decomposition of the invariant algebra failed")
    return isometries


def _reduce_to_algebra(spec: FCSSpec, basis: np.ndarray, tol: Tolerance, seed: int) -> FCSSpec:
    n, d = spec.n, spec.d
    alg_mats = [basis[:, k].reshape(n, n) for k in range(basis.shape[1])]
    rng = np.random.default_rng(seed)
    for _ in range(5):
        try:
            isos = _block_isometries(alg_mats, n, rng, tol)
            break
        except ConvergenceError:
            continue
    else:
        raise ConvergenceError("could not decompose the invariant algebra")
    w = np.hstack(isos)
    sizes = [iso.shape[1] for iso in isos]
    m = w.shape[1]
    offsets = np.cumsum([0] + sizes)

    def pinch(y):
        out = np.zeros_like(y)
        for i in range(len(sizes)):
            s = slice(offsets[i], offsets[i + 1])
            out[s, s] = y[s, s]
        return out

    # lift: block-diagonal Y -> unique X in the algebra with w^dagger X w = Y
    phi = np.column_stack([(w.conj().T @ x @ w).reshape(-1) for x in alg_mats])
    phi_pinv = np.linalg.pinv(phi)

    def lift(y):
        coeffs = phi_pinv @ pinch(y).reshape(-1)
        return sum(c * x for c, x in zip(coeffs, alg_mats))

    def action(z):
        z4 = z.reshape(d, m, d, m)
        out = np.zeros((m, m), dtype=complex)
        for s in range(d):
            for t in range(d):
                e = np.zeros((d, d))
                e[s, t] = 1.0
                out += w.conj().T @ spec.transfer(np.kron(e, lift(z4[s, :, t, :]))) @ w
        return out

    transfer = choi_of(action, d * m, m, check_linear=False)
    rho_t = np.zeros((m, m), dtype=complex)
    for i, j, e in linalg.matrix_units(m):
        rho_t[i, j] = np.trace(spec.rho.matrix @ lift(e))
    rho = rho_t.T
    return FCSSpec(d, m, transfer, DensityOperator(rho / np.trace(rho).real))


def minimize_representation(spec: FCSSpec, tol: Tolerance = DEFAULT_TOL, seed: int = 0) -> FCSSpec:
    """Reduce the bond dimension without changing any correlation.

    Alternates (i) restriction to the support of the boundary state and
    (ii) passage to the smallest ``E``-invariant unital *-algebra reachable
    from the identity, realized block-diagonally in ``M_m``.
    """
    current = spec
    for _ in range(2 * spec.n + 2):
        reduced = _restrict_to_support(current, tol)
        basis = invariant_algebra(reduced)
        if basis.shape[1] < reduced.n * reduced.n:
            reduced = _reduce_to_algebra(reduced, basis, tol, seed)
        if reduced.n == current.n:
            return reduced
        current = reduced
    return current


def transfer_spectrum(spec: FCSSpec) -> np.ndarray:
    """Eigenvalues of ``X -> E(1 (x) X)`` sorted by decreasing modulus."""
    w = np.linalg.eigvals(spec.site_map(np.eye(spec.d)))
    return w[np.argsort(-np.abs(w))]


def purity_heuristic(spec: FCSSpec, tol: float = 1e-8) -> Tuple[bool, np.ndarray]:
    """Primitivity check: ``1`` is the only eigenvalue of modulus one and it is simple.

    This is a heuristic for purity of the generated state, not a certificate.
    """
    w = transfer_spectrum(spec)
    peripheral = int(np.sum(np.abs(np.abs(w) - 1.0) <= tol))
    ok = peripheral == 1 and abs(w[0] - 1.0) <= tol
    return bool(ok), w


def mps_window_density(tensors: Sequence[np.ndarray], rho, length: int) -> np.ndarray:
    """Reduced density matrix of ``length`` consecutive sites by direct contraction.

    ``D[s, t] = tr(rho A_s1...A_sL (A_t1...A_tL)^dagger)`` and the expectation of
    an operator ``a`` is ``tr(a D^T)``.
    """
    rho = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho)
    d = len(tensors)
    n = tensors[0].shape[0]
    chains = np.eye(n, dtype=complex)[None]
    for _ in range(length):
        chains = np.einsum("kab,sbc->ksac", chains, np.asarray(tensors)).reshape(-1, n, n)
    return np.einsum("ab,sbc,tac->st", rho, chains, chains.conj())
