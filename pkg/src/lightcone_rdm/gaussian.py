"""Pure Gaussian states of the lattice field in phase space.

Phase-space vectors are ordered ``(phi_0 .. phi_{n-1}, pi_0 .. pi_{n-1})``
where ``pi = d phi / dt`` is the momentum *density*, so the free evolution
reads ``phi(t) = C phi + (a g^-1) pi`` with the commutator kernel ``g^-1``
of :mod:`lightcone_rdm.kernels`. The canonical commutator is
``[phi_x, pi_y] = i delta_xy / a``; with ``a = 1`` the symplectic form is the
usual ``Omega = [[0, I], [-I, 0]]``. Symplectic eigenvalues are always
reported in canonical units ``(phi, a pi)`` so a pure state has ``nu = 1/2``
at every spacing.

The covariance is the matrix of symmetrised central second moments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh, schur

from .errors import (
    ComplementMismatch,
    DegenerateSpectrum,
    LightconeError,
    MasslessVacuumError,
    NotSymplecticError,
    PreconditionError,
    RegionError,
    SupportError,
)
from .kernels import LatticeSpec, circulant_from_weights, mode_frequencies

__all__ = [
    "Region",
    "GaussianState",
    "SymplecticPropagator",
    "ReducedDescriptor",
    "LocalGaussianOperation",
    "symplectic_form",
    "symplectic_eigenvalues",
    "williamson",
    "vacuum",
    "coherent",
    "propagator",
    "evolve",
    "restrict",
    "descriptor_distance",
    "state_distance",
    "apply_local_displacement",
    "apply_local_symplectic",
    "find_local_gaussian_unitary",
]

SYMPLECTIC_TOL = 1e-10
DEGENERACY_GAP = 1e-8


def symplectic_form(n: int) -> np.ndarray:
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, eye], [-eye, zero]])


def _readonly(x) -> np.ndarray:
    arr = np.array(x, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Region:
    """A set of lattice sites on a ring of ``n_sites``."""

    sites: tuple
    n_sites: int

    def __post_init__(self):
        sites = tuple(sorted({int(s) for s in self.sites}))
        if any(s < 0 or s >= self.n_sites for s in sites):
            raise RegionError(f"sites {sites} outside [0, {self.n_sites})")
        object.__setattr__(self, "sites", sites)

    @classmethod
    def interval(cls, start: int, length: int, n_sites: int) -> "Region":
        """``length`` consecutive sites from ``start``, wrapping around the ring."""
        if not 0 <= length <= n_sites:
            raise RegionError(f"interval length {length} outside [0, {n_sites}]")
        return cls(tuple((start + i) % n_sites for i in range(length)), n_sites)

    @classmethod
    def full(cls, n_sites: int) -> "Region":
        return cls(tuple(range(n_sites)), n_sites)

    def __len__(self):
        return len(self.sites)

    def __contains__(self, site):
        return site in self.sites

    def complement(self) -> "Region":
        own = set(self.sites)
        return Region(tuple(s for s in range(self.n_sites) if s not in own), self.n_sites)

    def dilate(self, d: int) -> "Region":
        """All sites within ``d`` lattice steps of the region (ring metric)."""
        out = set()
        for s in self.sites:
            out.update((s + j) % self.n_sites for j in range(-d, d + 1))
        return Region(tuple(out), self.n_sites)

    def distance_to(self, site: int) -> int:
        """Ring distance from ``site`` to the nearest site of the region."""
        n = self.n_sites
        return min(min((site - s) % n, (s - site) % n) for s in self.sites)

    def phase_indices(self) -> np.ndarray:
        """Indices of ``(phi_R, pi_R)`` inside a length-``2n`` phase-space vector."""
        s = np.asarray(self.sites, dtype=int)
        return np.concatenate([s, s + self.n_sites])

    def to_dict(self) -> dict:
        return {"sites": list(self.sites), "n_sites": self.n_sites}

    @classmethod
    def from_dict(cls, data: dict) -> "Region":
        return cls(tuple(data["sites"]), int(data["n_sites"]))


def _canonical_scale(n: int, spacing: float) -> np.ndarray:
    return np.concatenate([np.ones(n), np.full(n, spacing)])


def symplectic_eigenvalues(cov: np.ndarray, spacing: float = 1.0) -> np.ndarray:
    """Symplectic spectrum (ascending, one value per mode) in canonical units."""
    cov = np.asarray(cov, dtype=float)
    n = cov.shape[0] // 2
    d = _canonical_scale(n, spacing)
    cov_c = cov * np.outer(d, d)
    ev = np.linalg.eigvals(1j * symplectic_form(n) @ cov_c)
    return np.sort(np.abs(ev.real))[::2]


@dataclass(frozen=True)
class GaussianState:
    spec: LatticeSpec
    mean: np.ndarray = field(repr=False)
    covariance: np.ndarray = field(repr=False)

    def __post_init__(self):
        n = self.spec.n_sites
        mean = _readonly(self.mean)
        cov = _readonly(self.covariance)
        if mean.shape != (2 * n,):
            raise ValueError(f"mean must have length {2 * n}, got shape {mean.shape}")
        if cov.shape != (2 * n, 2 * n):
            raise ValueError(f"covariance must be {2 * n}x{2 * n}, got shape {cov.shape}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)

    @property
    def n_sites(self) -> int:
        return self.spec.n_sites

    def symplectic_eigenvalues(self) -> np.ndarray:
        return symplectic_eigenvalues(self.covariance, self.spec.spacing)

    def is_pure(self, tol: float = 1e-9) -> bool:
        return bool(np.all(np.abs(self.symplectic_eigenvalues() - 0.5) <= tol))

    def uncertainty_margin(self) -> float:
        """Smallest eigenvalue of ``cov + (i/2) [R, R]/i``; non-negative for a physical state."""
        n = self.n_sites
        herm = self.covariance + 0.5j * symplectic_form(n) / self.spec.spacing
        return float(np.linalg.eigvalsh(herm)[0])

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "mean": self.mean.tolist(),
            "covariance": self.covariance.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GaussianState":
        unknown = set(data) - {"spec", "mean", "covariance"}
        if unknown:
            raise ValueError(f"unknown GaussianState keys: {sorted(unknown)}")
        return cls(LatticeSpec.from_dict(data["spec"]), np.asarray(data["mean"]),
                   np.asarray(data["covariance"]))


@dataclass(frozen=True)
class SymplecticPropagator:
    spec: LatticeSpec
    time: float
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "matrix", _readonly(self.matrix))

    def symplectic_residual(self) -> float:
        om = symplectic_form(self.spec.n_sites)
        s = self.matrix
        return float(np.max(np.abs(s.T @ om @ s - om)))


@dataclass(frozen=True)
class ReducedDescriptor:
    """Restricted first and second moments: the whole content of a Gaussian RDM."""

    region: Region
    mean_block: np.ndarray = field(repr=False)
    cov_block: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "mean_block", _readonly(self.mean_block))
        object.__setattr__(self, "cov_block", _readonly(self.cov_block))

    def to_dict(self) -> dict:
        return {
            "region": self.region.to_dict(),
            "mean_block": self.mean_block.tolist(),
            "cov_block": self.cov_block.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ReducedDescriptor":
        return cls(Region.from_dict(data["region"]), np.asarray(data["mean_block"]),
                   np.asarray(data["cov_block"]))


def _vacuum_covariance(spec: LatticeSpec) -> np.ndarray:
    if spec.mass <= 0:
        raise MasslessVacuumError("vacuum needs mass > 0: the zero mode has no ground state")
    omega = mode_frequencies(spec)
    n, a = spec.n_sites, spec.spacing
    cov = np.zeros((2 * n, 2 * n))
    cov[:n, :n] = circulant_from_weights(0.5 / omega, a)  # E^-1 / 2
    cov[n:, n:] = circulant_from_weights(0.5 * omega, a)  # E / 2
    return cov


def vacuum(spec: LatticeSpec) -> GaussianState:
    return GaussianState(spec, np.zeros(2 * spec.n_sites), _vacuum_covariance(spec))


def coherent(spec: LatticeSpec, phi_class, pi_class) -> GaussianState:
    """Displaced vacuum centred on the classical configuration ``(phi_class, pi_class)``."""
    phi_class = np.asarray(phi_class, dtype=float)
    pi_class = np.asarray(pi_class, dtype=float)
    n = spec.n_sites
    if phi_class.shape != (n,) or pi_class.shape != (n,):
        raise ValueError(f"classical fields must have length {n}")
    return GaussianState(spec, np.concatenate([phi_class, pi_class]), _vacuum_covariance(spec))


def propagator(spec: LatticeSpec, t: float) -> SymplecticPropagator:
    """Exact free evolution ``(phi, pi) -> S(t) (phi, pi)``.

    Blocks are ``[[cos, a g^-1], [-M^2 a g^-1, cos]]`` built in the same mode
    basis as the kernels, so there is no caustic restriction.
    """
    t = float(t)
    omega = mode_frequencies(spec)
    wt = omega * t
    safe = np.where(omega > 0, omega, 1.0)
    cos = circulant_from_weights(np.cos(wt))
    sin_over = circulant_from_weights(np.where(omega > 0, np.sin(wt) / safe, t))
    omega_sin = circulant_from_weights(omega * np.sin(wt))
    return SymplecticPropagator(spec, t, np.block([[cos, sin_over], [-omega_sin, cos]]))


def evolve(state: GaussianState, t: float) -> GaussianState:
    s = propagator(state.spec, t).matrix
    cov = s @ state.covariance @ s.T
    return GaussianState(state.spec, s @ state.mean, 0.5 * (cov + cov.T))


def restrict(state: GaussianState, region: Region) -> ReducedDescriptor:
    if len(region) == 0:
        raise RegionError("cannot restrict to an empty region")
    if region.n_sites != state.n_sites:
        raise RegionError(f"region lives on {region.n_sites} sites, state on {state.n_sites}")
    idx = region.phase_indices()
    return ReducedDescriptor(region, state.mean[idx], state.covariance[np.ix_(idx, idx)])


def descriptor_distance(d1: ReducedDescriptor, d2: ReducedDescriptor) -> float:
    if d1.region != d2.region:
        raise RegionError("descriptors belong to different regions")
    return max(float(np.max(np.abs(d1.mean_block - d2.mean_block))),
               float(np.max(np.abs(d1.cov_block - d2.cov_block))))


def state_distance(s1: GaussianState, s2: GaussianState) -> float:
    return descriptor_distance(restrict(s1, Region.full(s1.n_sites)),
                               restrict(s2, Region.full(s2.n_sites)))


def apply_local_displacement(state: GaussianState, region: Region, dphi, dpi) -> GaussianState:
    """Weyl displacement supported on ``region``; the covariance is untouched."""
    n = state.n_sites
    delta = np.concatenate([np.asarray(dphi, dtype=float), np.asarray(dpi, dtype=float)])
    if delta.shape != (2 * n,):
        raise ValueError(f"displacements must have length {n}")
    idx = region.phase_indices()
    outside = np.ones(2 * n, dtype=bool)
    outside[idx] = False
    if np.any(delta[outside] != 0):
        raise SupportError("displacement has entries outside the region")
    mean = state.mean.copy()
    mean[idx] += delta[idx]
    return GaussianState(state.spec, mean, state.covariance)


def _check_symplectic(mat: np.ndarray, tol: float = SYMPLECTIC_TOL) -> None:
    r = mat.shape[0] // 2
    om = symplectic_form(r)
    res = float(np.max(np.abs(mat.T @ om @ mat - om)))
    if res > tol * max(1.0, float(np.max(np.abs(mat))) ** 2):
        raise NotSymplecticError(f"matrix is not symplectic (residual {res:.3g})")


def apply_local_symplectic(state: GaussianState, region: Region, local_sym) -> GaussianState:
    """Conjugate the region's moments by a symplectic map on ``(phi_R, pi_R)``.

    Only the rows and columns of the region change; the complement block is
    copied, so the complement descriptor is reproduced bit for bit.
    """
    local_sym = np.asarray(local_sym, dtype=float)
    r = len(region)
    if local_sym.shape != (2 * r, 2 * r):
        raise ValueError(f"local symplectic must be {2 * r}x{2 * r}, got {local_sym.shape}")
    _check_symplectic(local_sym)
    n = state.n_sites
    idx = region.phase_indices()
    rest = np.setdiff1d(np.arange(2 * n), idx)
    mean = state.mean.copy()
    mean[idx] = local_sym @ state.mean[idx]
    cov = state.covariance.copy()
    inner = local_sym @ state.covariance[np.ix_(idx, idx)] @ local_sym.T
    cov[np.ix_(idx, idx)] = 0.5 * (inner + inner.T)
    cross = local_sym @ state.covariance[np.ix_(idx, rest)]
    cov[np.ix_(idx, rest)] = cross
    cov[np.ix_(rest, idx)] = cross.T
    return GaussianState(state.spec, mean, cov)


def williamson(cov: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Williamson normal form in ``(x.., p..)`` ordering.

    Returns ``(nu, S)`` with ``S`` symplectic and
    ``S @ cov @ S.T == diag(nu, nu)``, ``nu`` ascending.
    """
    cov = np.asarray(cov, dtype=float)
    r = cov.shape[0] // 2
    w, o = eigh(cov)
    if w[0] <= 0:
        raise PreconditionError("covariance is not positive definite")
    inv_sqrt = (o / np.sqrt(w)) @ o.T
    antisym = inv_sqrt @ symplectic_form(r) @ inv_sqrt
    antisym = 0.5 * (antisym - antisym.T)
    blocks, z = schur(antisym, output="real")
    inv_nu = np.empty(r)
    for i in range(r):
        b = blocks[2 * i, 2 * i + 1]
        if b < 0:
            z[:, [2 * i, 2 * i + 1]] = z[:, [2 * i + 1, 2 * i]]
            b = -b
        inv_nu[i] = b
    nu = 1.0 / inv_nu
    order = np.argsort(nu, kind="stable")
    nu = nu[order]
    cols = np.concatenate([2 * order, 2 * order + 1])
    z = z[:, cols]
    scale = np.sqrt(np.concatenate([nu, nu]))
    s = scale[:, None] * (z.T @ inv_sqrt)
    return nu, s


@dataclass(frozen=True)
class LocalGaussianOperation:
    """A Gaussian unitary on ``region``: symplectic map first, then a displacement."""

    region: Region
    symplectic: np.ndarray = field(repr=False)
    dphi: np.ndarray = field(repr=False)
    dpi: np.ndarray = field(repr=False)
    residual: float = math.nan

    def apply(self, state: GaussianState) -> GaussianState:
        out = apply_local_symplectic(state, self.region, self.symplectic)
        return apply_local_displacement(out, self.region, self.dphi, self.dpi)


def _group_degenerate(nu: np.ndarray, gap: float) -> list[np.ndarray]:
    groups, current = [], [0]
    for i in range(1, nu.size):
        if nu[i] - nu[i - 1] < gap:
            current.append(i)
        else:
            groups.append(np.array(current))
            current = [i]
    groups.append(np.array(current))
    return groups


def find_local_gaussian_unitary(s1: GaussianState, s2: GaussianState, region: Region,
                                tol: float = 1e-8) -> LocalGaussianOperation:
    """Local Gaussian unitary on ``region`` taking ``s1`` to ``s2``.

    Both states are brought to Williamson form on the region. In those frames
    the region/complement correlations of the two states agree up to an
    orthogonal symplectic (a ``U(d)`` rotation) inside each block of equal
    symplectic eigenvalues; the rotation is fixed by a unitary Procrustes fit.
    Eigenvalues closer than ``1e-8`` are treated as one block, which is where
    the gauge freedom of the construction lives.
    """
    if s1.spec != s2.spec:
        raise PreconditionError("states live on different lattices")
    spec = s1.spec
    n, a = spec.n_sites, spec.spacing
    comp = region.complement()
    if len(region) == 0:
        raise RegionError("region is empty")
    if len(comp):
        gap = descriptor_distance(restrict(s1, comp), restrict(s2, comp))
        if gap > tol:
            raise ComplementMismatch(f"states differ outside the region by {gap:.3g} > {tol:.3g}")
    for name, s in (("s1", s1), ("s2", s2)):
        if not s.is_pure(1e-8):
            raise PreconditionError(f"{name} is not a pure Gaussian state")

    r = len(region)
    ra, rc = region.phase_indices(), comp.phase_indices()
    d = _canonical_scale(n, a)

    frames, cross, spectra = [], [], []
    for s in (s1, s2):
        cov_c = s.covariance * np.outer(d, d)
        nu, sym = williamson(cov_c[np.ix_(ra, ra)])
        frames.append(sym)
        spectra.append(nu)
        cross.append(sym @ cov_c[np.ix_(ra, rc)])
    if np.max(np.abs(spectra[0] - spectra[1])) > max(tol, 1e-6):
        raise ComplementMismatch("regional symplectic spectra differ")

    nu = 0.5 * (spectra[0] + spectra[1])
    rotation = np.zeros((2 * r, 2 * r))
    for group in _group_degenerate(nu, DEGENERACY_GAP):
        z1 = cross[0][group] + 1j * cross[0][group + r]
        z2 = cross[1][group] + 1j * cross[1][group + r]
        w, _, vh = np.linalg.svd(z2 @ z1.conj().T)
        u = w @ vh
        gx, gp = np.ix_(group, group), np.ix_(group + r, group + r)
        rotation[gx] = u.real
        rotation[gp] = u.real
        rotation[np.ix_(group, group + r)] = -u.imag
        rotation[np.ix_(group + r, group)] = u.imag

    sym_c = np.linalg.solve(frames[1], rotation @ frames[0])
    dr = np.concatenate([np.ones(r), np.full(r, a)])
    sym = sym_c * np.outer(1.0 / dr, dr)

    moved = apply_local_symplectic(s1, region, sym)
    delta = np.zeros(2 * n)
    delta[ra] = s2.mean[ra] - moved.mean[ra]
    op = LocalGaussianOperation(region, sym, delta[:n], delta[n:])
    residual = state_distance(op.apply(s1), s2)
    op = LocalGaussianOperation(region, sym, delta[:n], delta[n:], residual)
    if residual > tol:
        close = np.diff(nu)
        if np.any((close >= DEGENERACY_GAP) & (close < 1e-5)):
            raise DegenerateSpectrum(
                f"reconstruction residual {residual:.3g}: symplectic eigenvalues on the region "
                "are nearly degenerate and the frames cannot be matched stably"
            )
        raise LightconeError(f"local Gaussian unitary reconstruction residual {residual:.3g} > {tol:.3g}")
    return op
