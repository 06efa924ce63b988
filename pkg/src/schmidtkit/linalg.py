"""Dense complex linear-algebra kernel shared by every other module.

All routines take and return plain ``numpy.ndarray`` objects with complex
dtype. Matrices are row-major; bipartite index order is ``(A, B)`` so that a
vector on ``C^dA (x) C^dB`` reshapes to a ``(dA, dB)`` array.
"""
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .exceptions import ConvergenceError, ValidationError

HERMITIAN_RTOL = 1e-12


@dataclass(frozen=True)
class Tolerance:
    """Numerical cutoffs.

    ``rank_tol`` is relative to the largest singular value / eigenvalue;
    ``psd_tol`` is the allowed negativity of eigenvalues deemed nonnegative.
    """

    rank_tol: float = 1e-9
    psd_tol: float = 1e-9

    def __post_init__(self):
        if not (self.rank_tol > 0 and self.psd_tol > 0):
            raise ValidationError("rank_tol and psd_tol must be positive")


DEFAULT_TOL = Tolerance()


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2:
        raise ValidationError(f"{name} must be two-dimensional, got shape {m.shape}")
    return m


def check_square(m, name: str = "matrix") -> np.ndarray:
    m = as_matrix(m, name)
    if m.shape[0] != m.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {m.shape}")
    return m


def hermitian_part(m, name: str = "matrix", rtol: float = HERMITIAN_RTOL) -> np.ndarray:
    """Return ``(M + M^dagger)/2``, refusing inputs that are visibly non-Hermitian."""
    m = check_square(m, name)
    scale = float(np.max(np.abs(m))) if m.size else 0.0
    asym = float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0
    if asym > rtol * max(scale, 1.0):
        raise ValidationError(f"{name} is not Hermitian (asymmetry {asym:.3e})")
    return (m + m.conj().T) / 2


def kron(a, b) -> np.ndarray:
    return np.kron(as_matrix(a, "a"), as_matrix(b, "b"))


def kron_all(mats: Sequence[np.ndarray]) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def partial_trace(m, dims: Tuple[int, int], side: str = "B") -> np.ndarray:
    """Trace out subsystem ``side`` ("A" or "B") of an operator on ``C^dA (x) C^dB``."""
    m = check_square(m)
    da, db = int(dims[0]), int(dims[1])
    if m.shape[0] != da * db:
        raise ValidationError(f"operator of size {m.shape[0]} does not match dims {(da, db)}")
    t = m.reshape(da, db, da, db)
    if side == "B":
        return np.einsum("ibjb->ij", t)
    if side == "A":
        return np.einsum("aiaj->ij", t)
    raise ValidationError(f"side must be 'A' or 'B', got {side!r}")


def svd(m) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thin SVD ``m = U diag(s) V^dagger`` with ``s`` decreasing.

    Returns ``(U, s, V)``, note ``V`` rather than ``V^dagger``.
    """
    m = as_matrix(m)
    try:
        u, s, vh = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"SVD did not converge: {exc}") from exc
    return u, s, vh.conj().T


def numerical_rank(values, tol: Tolerance = DEFAULT_TOL) -> int:
    """Count entries above ``rank_tol`` times the largest entry."""
    values = np.abs(np.asarray(values, dtype=float))
    if values.size == 0:
        return 0
    top = values.max()
    if top == 0:
        return 0
    return int(np.sum(values > tol.rank_tol * top))


def matrix_rank(m, tol: Tolerance = DEFAULT_TOL) -> int:
    return numerical_rank(svd(m)[1], tol)


def eigh(m, name: str = "matrix") -> Tuple[np.ndarray, np.ndarray]:
    """Hermitian eigendecomposition with eigenvalues in *decreasing* order."""
    h = hermitian_part(m, name)
    try:
        w, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigendecomposition did not converge: {exc}") from exc
    return w[::-1], v[:, ::-1]


def min_eigenvalue(m, name: str = "matrix") -> float:
    return float(np.linalg.eigvalsh(hermitian_part(m, name))[0])


def is_psd(m, tol: Tolerance = DEFAULT_TOL, name: str = "matrix") -> bool:
    return min_eigenvalue(m, name) >= -tol.psd_tol


def psd_sqrt(m) -> np.ndarray:
    w, v = eigh(m)
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def operator_sign(m) -> np.ndarray:
    """Sum of +-1 spectral projections of a Hermitian matrix; zero eigenvalues map to +1."""
    w, v = eigh(m)
    return (v * np.where(w >= 0, 1.0, -1.0)) @ v.conj().T


def lstsq(a, b) -> Tuple[np.ndarray, float]:
    """Least-squares solve ``a x = b``; returns ``(x, residual_norm)``."""
    a = as_matrix(a, "a")
    b = np.asarray(b, dtype=complex)
    try:
        x, *_ = np.linalg.lstsq(a, b, rcond=None)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"least squares did not converge: {exc}") from exc
    return x, float(np.linalg.norm(a @ x - b))


def null_space(m, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal columns spanning the kernel of ``m``."""
    m = as_matrix(m)
    if m.shape[0] == 0:
        return np.eye(m.shape[1], dtype=complex)
    try:
        # a thin SVD already gives the full right factor for tall matrices
        _, s, vh = np.linalg.svd(m, full_matrices=m.shape[0] < m.shape[1])
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"SVD did not converge: {exc}") from exc
    top = s[0] if s.size else 0.0
    rank = int(np.sum(s > tol.rank_tol * top)) if top > 0 else 0
    return vh[rank:].conj().T


def _fix_phase(x: np.ndarray) -> np.ndarray:
    # deterministic output: first non-negligible entry made real positive
    flat = x.ravel()
    k = int(np.argmax(np.abs(flat) > 1e-12 * np.abs(flat).max())) if flat.size else 0
    ph = flat[k] / abs(flat[k]) if flat.size and flat[k] != 0 else 1.0
    return x / ph


def _eigen_clusters(h: np.ndarray) -> list:
    """Eigenvector groups of Hermitian ``h`` with nearly equal eigenvalues (generous gaps)."""
    w, v = np.linalg.eigh(h)
    gap = 1e-6 * max(1.0, float(np.abs(w).max()))
    groups, start = [], 0
    for k in range(1, len(w) + 1):
        if k == len(w) or w[k] - w[k - 1] > gap:
            groups.append(v[:, start:k])
            start = k
    return groups


def null_space_of_commutator_system(generators: Sequence[np.ndarray], dim: int,
                                    tol: Tolerance = DEFAULT_TOL) -> list:
    """Orthonormal (Hilbert-Schmidt) basis of ``{X : [X, g] = 0 for every g}``.

    For a self-adjoint generating set of a *-algebra this is its commutant.
    Any solution commutes with a fixed generic Hermitian combination ``h`` of
    the generators, so it is block diagonal in the eigenbasis of ``h``; the
    remaining constraints are solved on that (much smaller) block space. The
    rank cutoff applies to the squared singular values of the restricted
    system.
    """
    gens = []
    for g in generators:
        g = check_square(g, "generator")
        if g.shape[0] != dim:
            raise ValidationError(f"generator has size {g.shape[0]}, expected {dim}")
        gens.append(g)
    h = np.zeros((dim, dim), dtype=complex)
    for k, g in enumerate(gens):
        # fixed irrational weights keep h generic and the result deterministic
        c1, c2 = np.sqrt(2.0 + 2 * k), np.sqrt(3.0 + 2 * k)
        h += c1 * (g + g.conj().T) / 2 + c2 * (g - g.conj().T) / 2j
    blocks = _eigen_clusters(h)
    # block matrix units v_a v_b^dagger within each cluster
    left = np.concatenate([np.repeat(b, b.shape[1], axis=1) for b in blocks], axis=1)
    right = np.concatenate([np.tile(b, (1, b.shape[1])) for b in blocks], axis=1)
    count = left.shape[1]
    rows = []
    for g in gens:
        gl = g @ left  # g v_a
        rg = g.conj().T @ right  # columns conj of (v_b^dagger g)
        # [v_a v_b^dagger, g] = v_a (v_b^dagger g) - (g v_a) v_b^dagger
        comm = (np.einsum("ip,jp->ijp", left, rg.conj()) - np.einsum("ip,jp->ijp", gl, right.conj()))
        rows.append(comm.reshape(dim * dim, count))
    if rows:
        system = np.vstack(rows)
        gram = system.conj().T @ system
        w, v = np.linalg.eigh(gram)
        top = max(float(w[-1]), 0.0)
        coeffs = np.eye(count, dtype=complex) if top == 0.0 else v[:, w <= tol.rank_tol * top]
    else:
        coeffs = np.eye(count, dtype=complex)
    out = []
    for k in range(coeffs.shape[1]):
        x = (left * coeffs[:, k]) @ right.conj().T
        out.append(_fix_phase(x))
    return out


def orthonormalize(vectors: Sequence[np.ndarray], tol: float = 1e-10) -> np.ndarray:
    """Columns of an orthonormal basis of ``span(vectors)`` (Gram-Schmidt via SVD)."""
    if len(vectors) == 0:
        return np.zeros((0, 0), dtype=complex)
    mat = np.column_stack([np.asarray(v, dtype=complex).ravel() for v in vectors])
    u, s, _ = np.linalg.svd(mat, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros((mat.shape[0], 0), dtype=complex)
    return u[:, s > tol * s[0]]


def matrix_units(dim: int):
    """Yield ``(i, j, E_ij)`` for the standard matrix-unit basis of ``M_dim``."""
    for i in range(dim):
        for j in range(dim):
            e = np.zeros((dim, dim), dtype=complex)
            e[i, j] = 1.0
            yield i, j, e


def algebra_generators(dim: int) -> list:
    """Two Hermitian matrices generating ``M_dim`` as a unital *-algebra.

    A diagonal with distinct entries only commutes with diagonals, and a
    diagonal commuting with the path adjacency matrix is scalar, so the
    commutant is trivial.
    """
    if dim == 1:
        return []
    path = np.diag(np.ones(dim - 1), 1).astype(complex)
    return [np.diag(np.arange(dim)).astype(complex), path + path.T]
