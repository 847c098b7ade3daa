"""Superpositions of coherent (classical-field) states.

A branch is the displaced vacuum whose wavefunctional is

    <q|alpha> ~ exp(-1/2 (q - q_c)^T A (q - q_c)) * exp(i P_c^T q)

in canonical lattice variables ``q = phi``, ``P = a pi`` with
``A = a^2 E`` (eigenvalues ``a omega_k``). The phase convention is fixed by
this wavefunctional, and all overlaps inherit it.

Moments of ``sum_i c_i |alpha_i>`` follow from the ladder operators
``b = (A^1/2 q + i A^-1/2 P) / sqrt(2)``, for which ``b|alpha> = beta |alpha>``:
every cross matrix element ``<alpha_i| R |alpha_j>`` is the overlap times a
complex "weak value", and normal ordering adds the vacuum covariance to the
second moments.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BranchNotVacuumEquivalent, MasslessVacuumError
from .gaussian import (
    GaussianState,
    Region,
    ReducedDescriptor,
    coherent,
    descriptor_distance,
    restrict,
    vacuum,
)
from .kernels import LatticeSpec, circulant_from_weights, mode_frequencies

__all__ = [
    "Branch",
    "CoherentSuperposition",
    "overlap",
    "gram_matrix",
    "moments",
    "local_moments",
    "local_descriptor",
    "vacuum_witness",
    "cat_state",
    "branch_state",
]

BRANCH_TOL = 1e-10


@dataclass(frozen=True)
class Branch:
    amplitude: complex
    phi_class: np.ndarray = field(repr=False)
    pi_class: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "amplitude", complex(self.amplitude))
        for name in ("phi_class", "pi_class"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


class _Ladder:
    """Square roots of ``A`` for one lattice (all circulant)."""

    def __init__(self, spec: LatticeSpec):
        if spec.mass <= 0:
            raise MasslessVacuumError("coherent states need mass > 0")
        a = spec.spacing
        aw = a * mode_frequencies(spec)
        self.spec = spec
        self.a_mat = circulant_from_weights(aw)
        self.a_inv = circulant_from_weights(1.0 / aw)
        self.sqrt_a = circulant_from_weights(np.sqrt(aw))
        self.inv_sqrt_a = circulant_from_weights(1.0 / np.sqrt(aw))

    def beta(self, branch: Branch) -> np.ndarray:
        p = self.spec.spacing * branch.pi_class
        return (self.sqrt_a @ branch.phi_class + 1j * (self.inv_sqrt_a @ p)) / np.sqrt(2.0)

    def overlap(self, bi: Branch, bj: Branch) -> complex:
        a = self.spec.spacing
        dq = bj.phi_class - bi.phi_class
        dp = a * (bj.pi_class - bi.pi_class)
        qbar = 0.5 * (bi.phi_class + bj.phi_class)
        expo = -0.25 * dq @ self.a_mat @ dq - 0.25 * dp @ self.a_inv @ dp + 1j * dp @ qbar
        return complex(np.exp(expo))

    def weak_value(self, beta_i: np.ndarray, beta_j: np.ndarray) -> np.ndarray:
        """``<alpha_i| (q, P) |alpha_j> / <alpha_i|alpha_j>`` in canonical units."""
        q = self.inv_sqrt_a @ (beta_j + beta_i.conj()) / np.sqrt(2.0)
        p = self.sqrt_a @ (beta_j - beta_i.conj()) / (1j * np.sqrt(2.0))
        return np.concatenate([q, p])


@dataclass(frozen=True)
class CoherentSuperposition:
    spec: LatticeSpec
    branches: tuple

    def __post_init__(self):
        n = self.spec.n_sites
        branches = tuple(b if isinstance(b, Branch) else Branch(*b) for b in self.branches)
        if not branches:
            raise ValueError("a superposition needs at least one branch")
        for b in branches:
            if b.phi_class.shape != (n,) or b.pi_class.shape != (n,):
                raise ValueError(f"branch fields must have length {n}")
        object.__setattr__(self, "branches", branches)

    @property
    def norm(self) -> float:
        c = np.array([b.amplitude for b in self.branches])
        n2 = c.conj() @ gram_matrix(self) @ c
        return float(np.sqrt(n2.real))

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "branches": [
                {"re": b.amplitude.real, "im": b.amplitude.imag,
                 "phi_class": b.phi_class.tolist(), "pi_class": b.pi_class.tolist()}
                for b in self.branches
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CoherentSuperposition":
        spec = LatticeSpec.from_dict(data["spec"])
        branches = []
        for b in data["branches"]:
            unknown = set(b) - {"re", "im", "phi_class", "pi_class"}
            if unknown:
                raise ValueError(f"unknown branch keys: {sorted(unknown)}")
            branches.append(Branch(complex(b.get("re", 0.0), b.get("im", 0.0)),
                                   b["phi_class"], b["pi_class"]))
        return cls(spec, tuple(branches))


def overlap(spec: LatticeSpec, branch_i: Branch, branch_j: Branch) -> complex:
    """``<alpha_i|alpha_j>`` for unit-normalised branches (amplitudes ignored)."""
    return _Ladder(spec).overlap(branch_i, branch_j)


def gram_matrix(sup: CoherentSuperposition) -> np.ndarray:
    lad = _Ladder(sup.spec)
    k = len(sup.branches)
    gram = np.eye(k, dtype=complex)
    for i in range(k):
        for j in range(i + 1, k):
            gram[i, j] = lad.overlap(sup.branches[i], sup.branches[j])
            gram[j, i] = gram[i, j].conjugate()
    return gram


def moments(sup: CoherentSuperposition) -> tuple[np.ndarray, np.ndarray]:
    """Mean and covariance of the normalised superposition over the whole lattice.

    Ordering and units match :class:`~lightcone_rdm.gaussian.GaussianState`.
    """
    spec = sup.spec
    lad = _Ladder(spec)
    n, a = spec.n_sites, spec.spacing
    c = np.array([b.amplitude for b in sup.branches])
    gram = gram_matrix(sup)
    weights = np.outer(c.conj(), c) * gram
    norm2 = weights.sum().real
    if not norm2 > 1e-300:
        raise ValueError("the superposition has zero norm")
    betas = [lad.beta(b) for b in sup.branches]

    first = np.zeros(2 * n, dtype=complex)
    second = np.zeros((2 * n, 2 * n), dtype=complex)
    for i, bi in enumerate(betas):
        for j, bj in enumerate(betas):
            w = weights[i, j]
            if w == 0:
                continue
            r = lad.weak_value(bi, bj)
            first += w * r
            second += w * np.outer(r, r)
    mean_c = first.real / norm2
    vac = vacuum(spec).covariance
    d = np.concatenate([np.ones(n), np.full(n, a)])
    cov_c = second.real / norm2 + vac * np.outer(d, d) - np.outer(mean_c, mean_c)
    cov = cov_c / np.outer(d, d)
    return mean_c / d, 0.5 * (cov + cov.T)


def local_moments(sup: CoherentSuperposition, region: Region) -> tuple[np.ndarray, np.ndarray]:
    """Regional mean ``(phi_R, pi_R)`` and symmetrised central second moments."""
    mean, cov = moments(sup)
    idx = region.phase_indices()
    return mean[idx], cov[np.ix_(idx, idx)]


def local_descriptor(sup: CoherentSuperposition, region: Region) -> ReducedDescriptor:
    return ReducedDescriptor(region, *local_moments(sup, region))


def vacuum_witness(sup: CoherentSuperposition, region: Region) -> float:
    """Max deviation of the regional moments from the vacuum's.

    Every branch must already look like the vacuum on ``region``. A strictly
    positive result then certifies that the superposition does not.
    """
    vac = vacuum(sup.spec)
    ref = restrict(vac, region)
    idx = region.phase_indices()
    for k, b in enumerate(sup.branches):
        shift = np.concatenate([b.phi_class, b.pi_class])[idx]
        if np.max(np.abs(shift), initial=0.0) > BRANCH_TOL:
            raise BranchNotVacuumEquivalent(
                f"branch {k} has classical field {np.max(np.abs(shift)):.3g} on the region"
            )
    return descriptor_distance(local_descriptor(sup, region), ref)


def cat_state(spec: LatticeSpec, phi_class, pi_class=None, second=None,
              amplitudes=(1.0, 1.0)) -> CoherentSuperposition:
    """Two-branch superposition; the second branch defaults to the negated field."""
    phi_class = np.asarray(phi_class, dtype=float)
    pi_class = np.zeros_like(phi_class) if pi_class is None else np.asarray(pi_class, dtype=float)
    if second is None:
        second = (-phi_class, -pi_class)
    return CoherentSuperposition(spec, (
        Branch(amplitudes[0], phi_class, pi_class),
        Branch(amplitudes[1], *second),
    ))


def branch_state(spec: LatticeSpec, branch: Branch) -> GaussianState:
    return coherent(spec, branch.phi_class, branch.pi_class)
