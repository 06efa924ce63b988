"""Pure and mixed states at finite dimension.

A :class:`BipartiteVector` is a unit vector on ``C^dA (x) C^dB`` and a
:class:`DensityOperator` a trace-one positive matrix. The routines here give
the Schmidt decomposition, the rank of a state, the dimension of the order
interval below a state, and canonical purifications.
"""
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from . import linalg
from .exceptions import ConvergenceError, ValidationError
from .linalg import DEFAULT_TOL, Tolerance

NORM_TOL = 1e-10
TRACE_TOL = 1e-10
DROPPED_MASS_TOL = 1e-12


@dataclass(frozen=True)
class BipartiteVector:
    dims: Tuple[int, int]
    amplitudes: np.ndarray

    def __post_init__(self):
        dims = (int(self.dims[0]), int(self.dims[1]))
        if dims[0] < 1 or dims[1] < 1:
            raise ValidationError(f"dims must be positive, got {dims}")
        amps = np.asarray(self.amplitudes, dtype=complex).ravel()
        if amps.size != dims[0] * dims[1]:
            raise ValidationError(
                f"{amps.size} amplitudes do not match dims {dims}")
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > NORM_TOL:
            raise ValidationError(f"vector is not normalized (norm {norm:.12g})")
        amps.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def normalized(cls, amplitudes, dims) -> "BipartiteVector":
        amps = np.asarray(amplitudes, dtype=complex).ravel()
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise ValidationError("cannot normalize the zero vector")
        return cls(dims, amps / norm)

    @property
    def dim(self) -> int:
        return self.dims[0] * self.dims[1]

    def as_matrix(self) -> np.ndarray:
        """Amplitudes reshaped to ``(dA, dB)``."""
        return self.amplitudes.reshape(self.dims)

    def projector(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def density(self) -> "DensityOperator":
        return DensityOperator(self.projector(), self.dims)

    def tensor(self, other: "BipartiteVector") -> "BipartiteVector":
        """Vector of the joint state with Alice holding ``A1 A2`` and Bob ``B1 B2``."""
        t = np.einsum("ab,cd->acbd", self.as_matrix(), other.as_matrix())
        dims = (self.dims[0] * other.dims[0], self.dims[1] * other.dims[1])
        return BipartiteVector(dims, t.reshape(-1))


@dataclass(frozen=True)
class DensityOperator:
    """Positive trace-one matrix. ``dims`` records an optional tensor splitting."""

    matrix: np.ndarray
    dims: Tuple[int, ...] = field(default=None)
    tol: Tolerance = field(default=DEFAULT_TOL, compare=False, repr=False)

    def __post_init__(self):
        m = linalg.hermitian_part(self.matrix, "density operator")
        dims = self.dims
        if dims is None:
            dims = (m.shape[0],)
        dims = tuple(int(d) for d in dims)
        if int(np.prod(dims)) != m.shape[0]:
            raise ValidationError(f"dims {dims} do not match matrix size {m.shape[0]}")
        tr = np.trace(m)
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValidationError(f"density operator has trace {tr.real:.12g}")
        lo = float(np.linalg.eigvalsh(m)[0])
        if lo < -self.tol.psd_tol:
            raise ValidationError(f"density operator is not positive (min eigenvalue {lo:.3e})")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def expectation(self, x) -> complex:
        return complex(np.trace(self.matrix @ np.asarray(x, dtype=complex)))

    def marginal(self, side: str) -> "DensityOperator":
        """Reduced state on ``side`` ("A" keeps A, traces out B)."""
        if len(self.dims) != 2:
            raise ValidationError("marginal requires a bipartite dims pair")
        other = "B" if side == "A" else "A"
        keep = self.dims[0] if side == "A" else self.dims[1]
        return DensityOperator(linalg.partial_trace(self.matrix, self.dims, other), (keep,))


@dataclass(frozen=True)
class SchmidtData:
    """``v = sum_i coefficients[i] * left[:, i] (x) right[:, i]``."""

    coefficients: np.ndarray
    left_basis: np.ndarray
    right_basis: np.ndarray
    rank: int
    renormalized: bool = False

    def reconstruct(self) -> np.ndarray:
        m = (self.left_basis * self.coefficients) @ self.right_basis.T
        return m.reshape(-1)


def schmidt_decompose(v: BipartiteVector, tol: Tolerance = DEFAULT_TOL) -> SchmidtData:
    if not isinstance(v, BipartiteVector):
        raise ValidationError("schmidt_decompose expects a BipartiteVector")
    u, s, w = linalg.svd(v.as_matrix())
    rank = linalg.numerical_rank(s, tol)
    # amplitudes = U diag(s) V^dagger, so the right basis vectors are conj(V) columns
    coeffs = s[:rank].copy()
    dropped = float(np.sum(s[rank:] ** 2))
    renormalized = dropped > DROPPED_MASS_TOL
    if renormalized:
        coeffs = coeffs / np.linalg.norm(coeffs)
    return SchmidtData(coeffs, u[:, :rank], w[:, :rank].conj(), rank, renormalized)


def _as_density(rho) -> DensityOperator:
    if isinstance(rho, DensityOperator):
        return rho
    return DensityOperator(np.asarray(rho, dtype=complex))


def rank_of_state(rho, tol: Tolerance = DEFAULT_TOL) -> int:
    """Number of pure states needed in a convex decomposition (eigenvalue rank)."""
    rho = _as_density(rho)
    w, _ = linalg.eigh(rho.matrix)
    return linalg.numerical_rank(np.clip(w, 0.0, None), tol)


def order_interval_dim(rho, tol: Tolerance = DEFAULT_TOL, cross_check: bool = True) -> int:
    """Dimension of the real linear hull of ``{phi : 0 <= phi <= rho}``.

    Computed as the dimension of the commutant of the GNS representation
    ``a -> a (x) 1_r`` on ``C^d (x) C^r``, and compared with ``rank**2``.
    """
    rho = _as_density(rho)
    r = rank_of_state(rho, tol)
    if not cross_check:
        return r * r
    d = rho.dim
    gens = [np.kron(g, np.eye(r)) for g in linalg.algebra_generators(d)]
    commutant = linalg.null_space_of_commutator_system(gens, d * r, tol)
    if len(commutant) != r * r:
        raise ConvergenceError(
            f"commutant dimension {len(commutant)} disagrees with rank^2 = {r * r}")
    return len(commutant)


def purify(rho, tol: Tolerance = DEFAULT_TOL) -> BipartiteVector:
    """Canonical purification ``sum_i sqrt(p_i) phi_i (x) |i>`` on ``C^d (x) C^r``."""
    rho = _as_density(rho)
    w, v = linalg.eigh(rho.matrix)
    r = linalg.numerical_rank(np.clip(w, 0.0, None), tol)
    p = np.clip(w[:r], 0.0, None)
    p = p / p.sum()
    mat = v[:, :r] * np.sqrt(p)
    return BipartiteVector((rho.dim, r), mat.reshape(-1))


def basis_vector(dims: Tuple[int, int], i: int, j: int) -> BipartiteVector:
    amps = np.zeros(dims[0] * dims[1], dtype=complex)
    amps[i * dims[1] + j] = 1.0
    return BipartiteVector(dims, amps)


def maximally_entangled(d: int) -> BipartiteVector:
    return BipartiteVector((d, d), np.eye(d, dtype=complex).reshape(-1) / np.sqrt(d))
