"""Seeded random objects: unitaries, states, unital CP maps.

Every function takes a ``numpy.random.Generator``; :func:`rng_for` derives
independent counter-based streams from one user seed.
"""
import zlib

import numpy as np

from .exceptions import ValidationError
from .states import BipartiteVector, DensityOperator


def rng_for(seed: int, stream: str = "") -> np.random.Generator:
    """Philox generator keyed by ``(seed, stream)`` so streams never collide."""
    key = zlib.crc32(stream.encode("utf-8"))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), key])))


def ginibre(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


def haar_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    q, r = np.linalg.qr(ginibre(rng, dim, dim))
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_isometry(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """``rows x cols`` matrix with orthonormal columns (``rows >= cols``)."""
    q, r = np.linalg.qr(ginibre(rng, rows, cols))
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_pure_state(rng: np.random.Generator, dims, schmidt_rank: int = None) -> BipartiteVector:
    """Haar-ish random vector; with ``schmidt_rank`` set, exactly that many Schmidt terms."""
    da, db = dims
    if schmidt_rank is None:
        return BipartiteVector.normalized(ginibre(rng, da * db, 1), dims)
    k = int(schmidt_rank)
    u = random_isometry(rng, da, k)
    v = random_isometry(rng, db, k)
    coeffs = rng.uniform(0.2, 1.0, size=k)
    mat = (u * coeffs) @ v.T
    return BipartiteVector.normalized(mat.reshape(-1), dims)


def random_density(rng: np.random.Generator, dim: int, rank: int = None) -> DensityOperator:
    rank = dim if rank is None else rank
    g = ginibre(rng, dim, rank)
    m = g @ g.conj().T
    return DensityOperator(m / np.trace(m).real)


def random_contraction(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Hermitian matrix with spectrum uniform in ``[-1, 1]`` and Haar eigenbasis."""
    u = haar_unitary(rng, dim)
    return (u * rng.uniform(-1.0, 1.0, size=dim)) @ u.conj().T


def random_effect(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Hermitian ``0 <= q <= 1`` with Haar eigenbasis."""
    u = haar_unitary(rng, dim)
    return (u * rng.uniform(0.0, 1.0, size=dim)) @ u.conj().T


def random_kraus_unital(rng: np.random.Generator, in_dim: int, out_dim: int, kraus_rank: int) -> list:
    """Kraus operators ``K_k`` (``in_dim x out_dim``) with ``sum K^dagger K = 1``.

    They define the unital Heisenberg-picture map ``a -> sum K^dagger a K``
    from ``M_in_dim`` to ``M_out_dim``.
    """
    if in_dim * kraus_rank < out_dim:
        raise ValidationError(f"need in_dim * kraus_rank >= out_dim, got {in_dim} * {kraus_rank} < {out_dim}")
    v = random_isometry(rng, in_dim * kraus_rank, out_dim)
    blocks = v.reshape(in_dim, kraus_rank, out_dim)
    return [blocks[:, k, :] for k in range(kraus_rank)]


def random_povm(rng: np.random.Generator, dim: int, outcomes: int) -> list:
    """``outcomes`` positive matrices summing to the identity."""
    raw = [g @ g.conj().T for g in (ginibre(rng, dim, dim) for _ in range(outcomes))]
    total = sum(raw)
    w, v = np.linalg.eigh(total)
    inv_sqrt = (v / np.sqrt(w)) @ v.conj().T
    return [inv_sqrt @ m @ inv_sqrt for m in raw]
