"""Unitary completion from equal reduced states.

Write a bipartite pure state as ``sum_mn f(m, n) |a_m>|A_n>``. Tracing out
``a`` gives the same reduced state on ``A`` for two amplitude matrices iff
``f1^H f1 == f2^H f2``, and then some unitary ``U`` acting on ``a`` alone
has ``f2 = U f1``. This module constructs that ``U``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import RankInstability, RdmMismatch

__all__ = [
    "UnitaryCompletion",
    "check_rdm_equal",
    "numerical_rank",
    "complete_unitary",
    "find_local_unitary",
    "amplitude_matrix",
    "embed_in_fock",
    "matrix_to_json",
    "matrix_from_json",
]

DEFAULT_TOL = 1e-10


def _as_amplitudes(f) -> np.ndarray:
    arr = np.array(f, dtype=complex)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError("an amplitude matrix must be a non-empty 2-D array")
    if not np.all(np.isfinite(arr)):
        raise ValueError("amplitude matrix has non-finite entries")
    return arr


def check_rdm_equal(f1, f2, tol: float = DEFAULT_TOL) -> tuple[bool, float]:
    """Whether ``f1`` and ``f2`` give the same state on the ``A`` factor.

    Returns ``(equal, residual)`` with ``residual = max |f1^H f1 - f2^H f2|``.
    """
    f1, f2 = _as_amplitudes(f1), _as_amplitudes(f2)
    if f1.shape != f2.shape:
        raise ValueError(f"shape mismatch: {f1.shape} vs {f2.shape}")
    residual = float(np.max(np.abs(f1.conj().T @ f1 - f2.conj().T @ f2)))
    return residual <= tol, residual


def numerical_rank(s: np.ndarray, tol: float) -> int:
    """Count singular values above ``tol * s_max``.

    Raises
    ------
    RankInstability
        If any relative singular value lies inside ``[tol/10, 10 tol]``.
    """
    if s.size == 0 or s[0] == 0:
        return 0
    rel = s / s[0]
    band = (rel >= tol / 10) & (rel <= 10 * tol)
    if np.any(band):
        raise RankInstability(
            f"singular value {rel[band][0]:.3g} (relative) is inside the band [{tol / 10:.1g}, {10 * tol:.1g}]"
        )
    return int(np.sum(rel > tol))


@dataclass(frozen=True)
class UnitaryCompletion:
    unitary: np.ndarray
    rank: int
    path_taken: str
    residual_unitarity: float
    residual_equation: float
    pivots: tuple

    def to_dict(self) -> dict:
        return {
            "residual_unitarity": self.residual_unitarity,
            "residual_equation": self.residual_equation,
            "rank": self.rank,
            "path_taken": self.path_taken,
            "unitary": matrix_to_json(self.unitary),
        }


def _complement(u_svd: np.ndarray, k: int, rng) -> np.ndarray:
    comp = u_svd[:, k:]
    if rng is not None and comp.shape[1] > 1:
        z = rng.standard_normal((comp.shape[1],) * 2) + 1j * rng.standard_normal((comp.shape[1],) * 2)
        q, r = np.linalg.qr(z)
        comp = comp @ (q * (np.diag(r) / np.abs(np.diag(r))))
    return comp


def complete_unitary(f1, f2, tol: float = DEFAULT_TOL, rng=None) -> UnitaryCompletion:
    """Build ``U`` with ``f2 = U f1`` and report how it was found.

    Parameters
    ----------
    f1, f2 : array_like, shape (M, N)
        Amplitude matrices with equal Gram matrices ``f^H f``.
    tol : float
        Tolerance for the Gram check and the relative rank threshold.
    rng : numpy.random.Generator, optional
        Rotates the basis of the orthogonal complements used in the
        rank-deficient case. Different choices give different, equally valid
        unitaries.

    Returns
    -------
    UnitaryCompletion
    """
    f1, f2 = _as_amplitudes(f1), _as_amplitudes(f2)
    ok, residual = check_rdm_equal(f1, f2, tol)
    if not ok:
        raise RdmMismatch(f"f1^H f1 and f2^H f2 differ by {residual:.3g} > tol={tol:.3g}")
    m, n = f1.shape
    u1, s1, _ = linalg.svd(f1)
    u2, s2, _ = linalg.svd(f2)
    k = numerical_rank(s1, tol)
    if numerical_rank(s2, tol) != k:
        raise RdmMismatch("equal Gram matrices but different numerical ranks")

    if k < m:
        path = "rank_deficient"
        e1 = np.hstack([f1, _complement(u1, k, rng)])
        e2 = np.hstack([f2, _complement(u2, k, rng)])
    else:
        path = "full_rank_square" if m == n else "full_rank_rectangular"
        e1, e2 = f1, f2

    # same independent columns for both, picked from f2
    _, _, piv = linalg.qr(e2, mode="economic", pivoting=True)
    cols = np.sort(piv[:m])
    big1, big2 = e1[:, cols], e2[:, cols]
    u = linalg.solve(big2.conj().T, big1.conj().T)
    w, _, vh = linalg.svd(u)
    u = w @ vh

    res_u = float(np.max(np.abs(u.conj().T @ u - np.eye(m))))
    res_f = float(np.max(np.abs(f2 - u @ f1)))
    return UnitaryCompletion(u, k, path, res_u, res_f, tuple(int(c) for c in cols))


def find_local_unitary(f1, f2, tol: float = DEFAULT_TOL, rng=None) -> np.ndarray:
    """The ``M x M`` unitary with ``f2 = U f1``; see :func:`complete_unitary`."""
    return complete_unitary(f1, f2, tol, rng).unitary


def _region_order(dims, sites):
    sites = sorted(int(s) for s in sites)
    if not sites or sites[0] < 0 or sites[-1] >= len(dims) or len(set(sites)) != len(sites):
        raise ValueError(f"bad region factors {sites} for {len(dims)} factors")
    rest = [x for x in range(len(dims)) if x not in sites]
    return sites, rest


def amplitude_matrix(psi, dims, sites) -> np.ndarray:
    """Reshape a product-basis vector into ``f(m, n)`` with ``m`` on ``sites``."""
    dims = tuple(int(d) for d in dims)
    sites, rest = _region_order(dims, sites)
    t = np.asarray(psi, dtype=complex).reshape(dims).transpose(sites + rest)
    return t.reshape(int(np.prod([dims[s] for s in sites])), -1)


def embed_in_fock(unitary, dims, sites=(0,)) -> np.ndarray:
    """``sum U(m, m') |a_m><a_m'|`` tensored with the identity elsewhere.

    Parameters
    ----------
    unitary : array_like, shape (M, M)
    dims : sequence of int
        Local dimension of every tensor factor, in the lexicographic order of
        the product basis (``FockLattice.dims`` for the oracle).
    sites : sequence of int
        Factors that make up ``a``. Their joint basis is lexicographic in
        increasing factor order, matching :func:`amplitude_matrix`.
    """
    u = np.asarray(unitary, dtype=complex)
    dims = tuple(int(d) for d in dims)
    sites, rest = _region_order(dims, sites)
    m = int(np.prod([dims[s] for s in sites]))
    if u.shape != (m, m):
        raise ValueError(f"unitary has shape {u.shape}, region dimension is {m}")
    comp = int(np.prod([dims[s] for s in rest]))
    op = np.kron(u, np.eye(comp))
    order = sites + rest
    nf = len(dims)
    shape = tuple(dims[o] for o in order)
    op = op.reshape(shape + shape)
    inv = list(np.argsort(order))
    op = op.transpose(inv + [nf + i for i in inv])
    total = int(np.prod(dims))
    return op.reshape(total, total)


def matrix_to_json(mat) -> list:
    """Nested lists of ``[re, im]`` pairs."""
    mat = np.asarray(mat, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.atleast_2d(mat)]


def matrix_from_json(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ValueError("expected a matrix of [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]
