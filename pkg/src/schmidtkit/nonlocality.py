"""CHSH optimisation, correlation tables and the quantum constraint.

The CHSH value is normalised so that classical models reach 1 and the
Tsirelson bound is sqrt(2):

    beta(omega) = 1/2 sup omega(a1 b1 + a1 b2 + a2 b1 - a2 b2)
"""
import csv
import io
import logging
from dataclasses import dataclass
from typing import Callable, List, Sequence, Union

import numpy as np

from . import linalg
from .exceptions import ValidationError
from .linalg import DEFAULT_TOL, Tolerance
from .sampling import random_contraction, rng_for
from .schmidt import FiniteBipartiteState

log = logging.getLogger(__name__)

OBSERVABLE_NORM_TOL = 1e-10
NO_SIGNALLING_TOL = 1e-10
POVM_SUM_TOL = 1e-9


@dataclass(frozen=True)
class DichotomicObservables:
    a1: np.ndarray
    a2: np.ndarray
    b1: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        for name in ("a1", "a2", "b1", "b2"):
            m = linalg.hermitian_part(getattr(self, name), name)
            if np.linalg.norm(m, 2) > 1 + OBSERVABLE_NORM_TOL:
                raise ValidationError(f"{name} has spectral norm above 1")
            object.__setattr__(self, name, m)
        if self.a1.shape != self.a2.shape or self.b1.shape != self.b2.shape:
            raise ValidationError("observables of one party must share a dimension")

    def to_dict(self) -> dict:
        return {name: {"re": getattr(self, name).real.tolist(), "im": getattr(self, name).imag.tolist()}
                for name in ("a1", "a2", "b1", "b2")}


@dataclass(frozen=True)
class ChshResult:
    beta: float
    observables: DichotomicObservables
    histories: tuple  # objective after each half-step, one tuple per restart


def _density_tensor(omega: FiniteBipartiteState) -> np.ndarray:
    da, db = omega.dims
    return omega.density.matrix.reshape(da, db, da, db)


def chsh_objective(omega, obs: DichotomicObservables) -> float:
    omega = FiniteBipartiteState.coerce(omega)
    bell = (np.kron(obs.a1, obs.b1 + obs.b2) + np.kron(obs.a2, obs.b1 - obs.b2)) / 2
    return float(np.real(np.trace(omega.density.matrix @ bell)))


def _alice_effective(r: np.ndarray, b: np.ndarray) -> np.ndarray:
    # omega(a (x) b) = tr(a M) with M = tr_B(rho (1 (x) b))
    return np.einsum("ijkl,lj->ik", r, b)


def _bob_effective(r: np.ndarray, a: np.ndarray) -> np.ndarray:
    return np.einsum("ijkl,ki->jl", r, a)


def _seesaw(r: np.ndarray, a1, a2, b1, b2, max_iter: int, tol: float):
    def value():
        return float(np.real(np.trace(_alice_effective(r, b1 + b2) @ a1)
                             + np.trace(_alice_effective(r, b1 - b2) @ a2))) / 2

    history = [value()]
    for _ in range(max_iter):
        a1 = linalg.operator_sign(_alice_effective(r, b1 + b2))
        a2 = linalg.operator_sign(_alice_effective(r, b1 - b2))
        history.append(value())
        b1 = linalg.operator_sign(_bob_effective(r, a1 + a2))
        b2 = linalg.operator_sign(_bob_effective(r, a1 - a2))
        history.append(value())
        if history[-1] - history[-3] < tol:
            break
    return history, (a1, a2, b1, b2)


def chsh_value(omega, restarts: int = 20, seed: int = 0, max_iter: int = 500,
               tol: float = 1e-12) -> ChshResult:
    """Best seesaw value over ``restarts`` random starts; deterministic in ``seed``."""
    if restarts < 1:
        raise ValidationError("restarts must be >= 1")
    omega = FiniteBipartiteState.coerce(omega)
    da, db = omega.dims
    r = _density_tensor(omega)
    rng = rng_for(seed, "chsh")
    best, best_obs, histories = -np.inf, None, []
    for _ in range(restarts):
        start = (random_contraction(rng, da), random_contraction(rng, da),
                 random_contraction(rng, db), random_contraction(rng, db))
        history, obs = _seesaw(r, *start, max_iter=max_iter, tol=tol)
        histories.append(tuple(history))
        if history[-1] > best:
            best, best_obs = history[-1], obs
    log.debug("chsh restarts=%d best=%.12f", restarts, best)
    return ChshResult(float(best), DichotomicObservables(*best_obs), tuple(histories))


def _check_povm(povm: Sequence[np.ndarray], dim: int, tol: Tolerance, label: str) -> List[np.ndarray]:
    elems = [linalg.hermitian_part(linalg.check_square(m, label), label) for m in povm]
    if not elems:
        raise ValidationError(f"{label} is empty")
    for m in elems:
        if m.shape != (dim, dim):
            raise ValidationError(f"{label} element has shape {m.shape}, expected {(dim, dim)}")
        if linalg.min_eigenvalue(m) < -tol.psd_tol:
            raise ValidationError(f"{label} has a non-positive element")
    if np.max(np.abs(sum(elems) - np.eye(dim))) > POVM_SUM_TOL:
        raise ValidationError(f"{label} does not sum to the identity")
    return elems


@dataclass(frozen=True)
class CorrelationTable:
    """``p[i, j, alpha, beta] = p(alpha, beta | i, j)``."""

    p: np.ndarray

    def normalization_residual(self) -> float:
        return float(np.max(np.abs(self.p.sum(axis=(2, 3)) - 1.0)))

    def no_signalling_residual(self) -> float:
        alice = self.p.sum(axis=3)  # (i, j, alpha)
        bob = self.p.sum(axis=2)  # (i, j, beta)
        ra = np.max(np.abs(alice - alice[:, :1, :]))
        rb = np.max(np.abs(bob - bob[:1, :, :]))
        return float(max(ra, rb))

    def validate(self, tol: float = NO_SIGNALLING_TOL) -> "CorrelationTable":
        if self.p.min() < -tol:
            raise ValidationError("negative probability in correlation table")
        if self.normalization_residual() > tol:
            raise ValidationError("correlation table is not normalised")
        if self.no_signalling_residual() > tol:
            raise ValidationError("correlation table violates no-signalling")
        return self

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["i", "j", "alpha", "beta", "p"])
        for idx in np.ndindex(*self.p.shape):
            writer.writerow([*idx, f"{self.p[idx]:.9g}"])
        return buf.getvalue()


def correlations_from_model(omega, povms_a: Sequence[Sequence[np.ndarray]],
                            povms_b: Sequence[Sequence[np.ndarray]],
                            tol: Tolerance = DEFAULT_TOL) -> CorrelationTable:
    """Table ``p(alpha, beta | i, j) = omega(M_{i,alpha} (x) N_{j,beta})``."""
    omega = FiniteBipartiteState.coerce(omega)
    da, db = omega.dims
    if not povms_a or not povms_b:
        raise ValidationError("each party needs at least one measurement")
    pa = [_check_povm(m, da, tol, f"Alice POVM {i}") for i, m in enumerate(povms_a)]
    pb = [_check_povm(m, db, tol, f"Bob POVM {j}") for j, m in enumerate(povms_b)]
    ka, kb = {len(m) for m in pa}, {len(m) for m in pb}
    if len(ka) != 1 or len(kb) != 1:
        raise ValidationError("all POVMs of one party must have the same number of outcomes")
    r = _density_tensor(omega)
    ea = np.array([[_bob_effective(r, m) for m in povm] for povm in pa])  # (i, alpha, db, db)
    nb = np.array(pb)  # (j, beta, db, db)
    p = np.real(np.einsum("iaxy,jbyx->ijab", ea, nb))
    return CorrelationTable(p)


@dataclass(frozen=True)
class ConstraintResult:
    passed: bool
    min_eigenvalue: float
    plain_sum: float
    witness: np.ndarray  # coefficients c with sum conj(c_i) c_j G_ij < 0, empty when passed


Bilinear = Union[FiniteBipartiteState, Callable[[np.ndarray, np.ndarray], complex]]


def quantum_constraint_check(bilinear: Bilinear, a_family: Sequence[np.ndarray],
                             b_family: Sequence[np.ndarray], tol: Tolerance = DEFAULT_TOL) -> ConstraintResult:
    """Positivity of ``sum_ij conj(c_i) c_j w(a_i^* a_j, b_i^* b_j)`` over all coefficients ``c``.

    Absorbing ``c_i`` into ``a_i`` shows this is the same as the constraint on
    every rescaled family, so it reduces to positive semidefiniteness of the
    Gram matrix ``G_ij = w(a_i^* a_j, b_i^* b_j)``.
    """
    if len(a_family) != len(b_family) or not a_family:
        raise ValidationError("families must be nonempty and of equal length")
    if isinstance(bilinear, FiniteBipartiteState):
        w = bilinear.correlation
    else:
        w = bilinear
    a_family = [linalg.as_matrix(a) for a in a_family]
    b_family = [linalg.as_matrix(b) for b in b_family]
    n = len(a_family)
    g = np.empty((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            g[i, j] = w(a_family[i].conj().T @ a_family[j], b_family[i].conj().T @ b_family[j])
    herm = (g + g.conj().T) / 2
    vals, vecs = np.linalg.eigh(herm)
    passed = bool(vals[0] >= -tol.psd_tol)
    witness = np.zeros(0, dtype=complex) if passed else vecs[:, 0]
    return ConstraintResult(passed, float(vals[0]), float(np.real(g.sum())), witness)
