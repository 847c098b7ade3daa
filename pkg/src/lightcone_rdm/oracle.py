"""Brute-force ground truth for small chains.

A few lattice sites, each truncated to ``cutoff`` Fock levels of an
oscillator with frequency ``ref_frequency``, give a dense Hamiltonian that
can be diagonalised exactly. Everything the Gaussian engine claims for
small systems is checked against this.

Per site the canonical pair is ``q = phi_x`` and ``P = a pi_x`` with
``[q, P] = i``, and

    H = sum_x P_x^2 / (2a) + (a/2) q^T M^2 q

where ``M^2`` is :func:`lightcone_rdm.kernels.quadratic_form`.

:func:`normalization_check` is separate: it discretises a single mode on a
position grid and compares the exact propagator with ``N(t) exp(iS)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property, reduce

import numpy as np
from scipy import integrate, special
from scipy.linalg import eigh
from scipy.sparse.linalg import expm_multiply

from .errors import CausticError, DimensionOverflow
from .gaussian import Region
from .kernels import LatticeSpec, build_kernel, mode_frequencies, quadratic_form

__all__ = [
    "FockLattice",
    "build_hamiltonian",
    "evolve_exact",
    "partial_trace",
    "coherent_amplitude",
    "coherent_state_vector",
    "state_moments",
    "reduced_moments",
    "normalization_ratio",
    "position_propagator",
    "NormalizationReport",
    "normalization_check",
    "compare_with_engine",
]

MAX_DIMENSION = 250_000


def _ladder(d: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, d)), 1)


@dataclass(frozen=True)
class FockLattice:
    spec: LatticeSpec
    cutoff: int = 8
    ref_frequency: float | None = None

    def __post_init__(self):
        if self.spec.n_sites > 5:
            raise DimensionOverflow("the Fock oracle handles at most 5 sites")
        if self.cutoff < 2:
            raise DimensionOverflow(f"cutoff must be at least 2, got {self.cutoff}")
        if self.cutoff**self.spec.n_sites > MAX_DIMENSION:
            raise DimensionOverflow(f"dimension {self.cutoff ** self.spec.n_sites} > {MAX_DIMENSION}")
        if self.ref_frequency is None:
            ref = math.sqrt(self.spec.mass**2 + 2.0 / self.spec.spacing**2)
            object.__setattr__(self, "ref_frequency", ref)
        if not self.ref_frequency > 0:
            raise ValueError("ref_frequency must be positive")

    @property
    def dims(self) -> tuple:
        return (self.cutoff,) * self.spec.n_sites

    @property
    def dimension(self) -> int:
        return self.cutoff**self.spec.n_sites

    def _embed(self, op: np.ndarray, site: int) -> np.ndarray:
        eye = np.eye(self.cutoff)
        factors = [op if s == site else eye for s in range(self.spec.n_sites)]
        return reduce(np.kron, factors)

    @cached_property
    def _site_ops(self):
        a, w = self.spec.spacing, self.ref_frequency
        b = _ladder(self.cutoff)
        q = (b + b.T) / math.sqrt(2.0 * a * w)
        p = 1j * math.sqrt(a * w / 2.0) * (b.T - b)
        return q, p

    @cached_property
    def field_ops(self) -> list:
        """``q_x = phi_x`` on the full truncated space."""
        return [self._embed(self._site_ops[0], x) for x in range(self.spec.n_sites)]

    @cached_property
    def momentum_ops(self) -> list:
        """Canonical ``P_x = a pi_x`` on the full truncated space."""
        return [self._embed(self._site_ops[1], x) for x in range(self.spec.n_sites)]

    @cached_property
    def hamiltonian(self) -> np.ndarray:
        a = self.spec.spacing
        m2 = quadratic_form(self.spec)
        qs = self.field_ops
        p_site = self._site_ops[1]
        kinetic_site = (p_site @ p_site).real / (2.0 * a)
        h = sum(self._embed(kinetic_site, x) for x in range(self.spec.n_sites))
        for x in range(self.spec.n_sites):
            for y in range(self.spec.n_sites):
                if m2[x, y] != 0:
                    h = h + 0.5 * a * m2[x, y] * (qs[x] @ qs[y])
        return 0.5 * (h + h.T)

    @cached_property
    def spectrum(self) -> tuple[np.ndarray, np.ndarray]:
        return eigh(self.hamiltonian)

    @property
    def ground_state(self) -> np.ndarray:
        vec = self.spectrum[1][:, 0].astype(complex)
        return vec / np.linalg.norm(vec)


def build_hamiltonian(fl: FockLattice) -> np.ndarray:
    return fl.hamiltonian


def evolve_exact(fl: FockLattice, state_vector, t: float) -> np.ndarray:
    energies, vecs = fl.spectrum
    psi = np.asarray(state_vector, dtype=complex)
    return vecs @ (np.exp(-1j * energies * t) * (vecs.T @ psi))


def partial_trace(rho: np.ndarray, fl: FockLattice, region: Region) -> np.ndarray:
    """Reduced density matrix of ``region`` (the other sites are traced out)."""
    n = fl.spec.n_sites
    keep = list(region.sites)
    t = np.asarray(rho).reshape(fl.dims + fl.dims)
    letters = "abcdefghij"
    bra = [letters[x] for x in range(n)]
    ket = [letters[x] if x not in keep else letters[x].upper() for x in range(n)]
    out = "".join(bra[x] for x in keep) + "".join(ket[x] for x in keep)
    red = np.einsum("".join(bra) + "".join(ket) + "->" + out, t)
    dim = fl.cutoff ** len(keep)
    return red.reshape(dim, dim)


def coherent_amplitude(spec: LatticeSpec, phi_class, pi_class) -> float:
    """``|alpha|``: root of the mean excitation number over all normal modes."""
    aw = spec.spacing * mode_frequencies(spec)
    qk = np.fft.fft(np.asarray(phi_class, dtype=float)) / math.sqrt(spec.n_sites)
    pk = np.fft.fft(spec.spacing * np.asarray(pi_class, dtype=float)) / math.sqrt(spec.n_sites)
    return math.sqrt(0.5 * float(np.sum(aw * np.abs(qk) ** 2 + np.abs(pk) ** 2 / aw)))


def coherent_state_vector(fl: FockLattice, phi_class, pi_class) -> np.ndarray:
    """Displaced ground state with the wavefunctional's phase convention.

    ``exp(i P_c.q) psi_0(q - q_c) = exp(i P_c.q_c / 2) W(q_c, P_c) |0>``
    with the Weyl operator ``W = exp(i (P_c.q - q_c.P))``.
    """
    spec = fl.spec
    q_c = np.asarray(phi_class, dtype=float)
    p_c = spec.spacing * np.asarray(pi_class, dtype=float)
    amp = coherent_amplitude(spec, phi_class, pi_class)
    if amp > 1.0:
        warnings.warn(f"coherent amplitude |alpha| = {amp:.3g} > 1: Fock truncation may be visible",
                      RuntimeWarning, stacklevel=2)
    gen = sum(p_c[x] * fl.field_ops[x] - q_c[x] * fl.momentum_ops[x] for x in range(spec.n_sites))
    psi = expm_multiply(1j * gen, fl.ground_state)
    return np.exp(0.5j * float(p_c @ q_c)) * psi


def _operators(fl: FockLattice, sites) -> list:
    a = fl.spec.spacing
    return [fl.field_ops[x] for x in sites] + [fl.momentum_ops[x] / a for x in sites]


def state_moments(fl: FockLattice, psi) -> tuple[np.ndarray, np.ndarray]:
    """Mean and symmetrised covariance of ``(phi, pi)`` in a pure state."""
    psi = np.asarray(psi, dtype=complex)
    vs = [op @ psi for op in _operators(fl, range(fl.spec.n_sites))]
    mean = np.array([np.vdot(psi, v).real for v in vs])
    gram = np.array([[np.vdot(u, v).real for v in vs] for u in vs])
    cov = gram - np.outer(mean, mean)
    return mean, 0.5 * (cov + cov.T)


def reduced_moments(rho_region: np.ndarray, fl: FockLattice, region: Region):
    """Mean and covariance of ``(phi_R, pi_R)`` from a reduced density matrix."""
    a = fl.spec.spacing
    sub = FockLattice(LatticeSpec(len(region), a, fl.spec.mass, fl.spec.dispersion),
                      fl.cutoff, fl.ref_frequency)
    ops = [sub.field_ops[i] for i in range(len(region))] + \
          [sub.momentum_ops[i] / a for i in range(len(region))]
    mean = np.array([np.trace(rho_region @ op).real for op in ops])
    k = len(ops)
    cov = np.empty((k, k))
    for i in range(k):
        for j in range(k):
            sym = 0.5 * (ops[i] @ ops[j] + ops[j] @ ops[i])
            cov[i, j] = np.trace(rho_region @ sym).real - mean[i] * mean[j]
    return mean, cov


def normalization_ratio(spec: LatticeSpec, t: float, t_ref: float) -> float:
    """``N(t) / N(t_ref)`` from ``d ln N / dt = -1/2 int dx G(0; t)``.

    The time integral of the equal-point kernel is done by quadrature, so
    this is independent of any closed form for the single-mode propagator.
    """
    limit = math.pi / float(np.max(mode_frequencies(spec)))
    if not (0 < t < limit and 0 < t_ref < limit):
        raise CausticError(f"times must lie in (0, {limit:.6g}) before the first caustic")
    length = spec.length

    def g00(s):
        return build_kernel(spec, "G", s).entries[0, 0]

    integral, _ = integrate.quad(g00, t_ref, t, epsabs=1e-13, epsrel=1e-13, limit=200)
    return math.exp(-0.5 * length * integral)


def position_propagator(spec: LatticeSpec, grid: np.ndarray, columns=None,
                        band: float = 0.5, edge: float = 0.05):
    """Single-mode evolution on a uniform position grid (sinc-DVR kinetic energy).

    Returns ``evolve(t)``, the block ``<phi_i| exp(-iHt) |phi_j> / h`` for
    ``i, j`` in ``columns`` (all grid points by default). The grid delta is
    smoothed by a momentum window that is flat below ``band`` times the grid
    Nyquist momentum and falls off over ``edge`` times it; a hard cutoff
    would leave an endpoint term of order ``1 / (t p_max)`` in the kernel.
    Pass ``band=None`` for the raw grid delta.
    """
    if spec.n_sites != 1:
        raise ValueError("position_propagator handles a single mode only")
    a = spec.spacing
    omega = float(mode_frequencies(spec)[0])
    h = grid[1] - grid[0]
    size = grid.size
    k = np.arange(size)
    diff = k[:, None] - k[None, :]
    safe = np.where(diff == 0, 1, diff)
    kin = np.where(diff == 0, math.pi**2 / 3.0, 2.0 * (-1.0) ** diff / safe**2)
    ham = kin / (2.0 * a * h**2) + np.diag(0.5 * a * omega**2 * grid**2)
    energies, vecs = eigh(ham)

    cols = np.arange(size) if columns is None else np.asarray(columns)
    deltas = np.eye(size)[:, cols]
    if band is not None:
        p = 2.0 * math.pi * np.fft.fftfreq(size, d=h)
        nyq = math.pi / h
        window = 0.5 * special.erfc((np.abs(p) - band * nyq) / (edge * nyq))
        deltas = np.fft.ifft(np.fft.fft(deltas, axis=0) * window[:, None], axis=0).real
    proj = vecs.T @ deltas

    def evolve(t: float) -> np.ndarray:
        return (proj.T * np.exp(-1j * energies * t)) @ proj / h

    return evolve


@dataclass(frozen=True)
class NormalizationReport:
    times: np.ndarray
    max_relative_deviation: float
    """Max over (t, phi, phi_1) of ``|K_oracle - N(t) e^{iS}| / |N(t)|``."""
    modulus_deviation: float
    """Max over t of ``| |K_oracle(0,0;t)| / |N(t)| - 1 |``."""
    oracle_modulus: np.ndarray
    formula_modulus: np.ndarray
    constant: complex


def normalization_check(fl, times, t_ref: float | None = None, grid_spacing: float = 0.05,
                        window: float = 2.0, box: float | None = None,
                        band: float = 0.5) -> NormalizationReport:
    """Compare the exact single-mode propagator with ``N(t) exp(iS(phi, phi_1; t))``.

    ``N(t)`` comes from :func:`normalization_ratio`; its overall constant is
    fixed by matching at ``t_ref`` (the first time by default) at
    ``phi = phi_1 = 0``. The default box holds every classical orbit the
    retained grid momenta can reach, so nothing reflects off the walls.
    """
    spec = fl.spec if isinstance(fl, FockLattice) else fl
    if spec.n_sites != 1:
        raise ValueError("normalization_check is a single-mode test")
    omega = float(mode_frequencies(spec)[0])
    a = spec.spacing
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(times <= 0) or np.any(times >= math.pi / omega):
        raise CausticError("all times must lie strictly before the first caustic pi/omega")
    t_ref = float(times[0]) if t_ref is None else float(t_ref)
    if box is None:
        p_keep = (band + 0.2) * math.pi / grid_spacing
        box = window + 1.1 * p_keep / (a * omega)

    half = int(round(box / grid_spacing))
    grid = np.arange(-half, half + 1) * grid_spacing
    cols = np.flatnonzero(np.abs(grid) <= window + 1e-12)
    centre = int(np.searchsorted(cols, half))
    evolve = position_propagator(spec, grid, cols, band=band)
    x = grid[cols]

    def action(t):
        cot = omega / math.tan(omega * t)
        csc = omega / math.sin(omega * t)
        return a * (0.5 * cot * (x[:, None] ** 2 + x[None, :] ** 2) - csc * np.outer(x, x))

    constant = complex(evolve(t_ref)[centre, centre])
    worst = 0.0
    mod_oracle, mod_formula = [], []
    for t in times:
        ratio = normalization_ratio(spec, t, t_ref) if t != t_ref else 1.0
        kern = evolve(t)
        model = constant * ratio * np.exp(1j * action(t))
        worst = max(worst, float(np.max(np.abs(kern - model)) / abs(constant * ratio)))
        mod_oracle.append(abs(kern[centre, centre]))
        mod_formula.append(abs(constant) * ratio)
    mod_oracle, mod_formula = np.array(mod_oracle), np.array(mod_formula)
    modulus_dev = float(np.max(np.abs(mod_oracle / mod_formula - 1.0)))
    return NormalizationReport(times, worst, modulus_dev, mod_oracle, mod_formula, constant)


def compare_with_engine(fl: FockLattice, phi_class=None, pi_class=None, t: float = 0.0) -> list[dict]:
    """Evolve a coherent state exactly and compare its moments with the Gaussian engine.

    Returns report records ``{quantity, oracle_value, engine_value, cutoff, residual}``
    for the mean and the covariance (``residual`` is the max absolute entry difference).
    """
    from .gaussian import coherent, evolve

    n = fl.spec.n_sites
    phi_class = np.zeros(n) if phi_class is None else np.asarray(phi_class, dtype=float)
    pi_class = np.zeros(n) if pi_class is None else np.asarray(pi_class, dtype=float)
    psi = evolve_exact(fl, coherent_state_vector(fl, phi_class, pi_class), t)
    o_mean, o_cov = state_moments(fl, psi)
    engine = evolve(coherent(fl.spec, phi_class, pi_class), t)
    return [
        {"quantity": "mean", "oracle_value": o_mean.tolist(), "engine_value": engine.mean.tolist(),
         "cutoff": fl.cutoff, "residual": float(np.max(np.abs(o_mean - engine.mean)))},
        {"quantity": "covariance", "oracle_value": o_cov.tolist(),
         "engine_value": engine.covariance.tolist(), "cutoff": fl.cutoff,
         "residual": float(np.max(np.abs(o_cov - engine.covariance)))},
    ]
