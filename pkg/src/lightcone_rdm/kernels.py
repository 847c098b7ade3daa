"""Propagator kernels of the free scalar field on a periodic 1-D lattice.

Every kernel here depends on ``x - y`` only, so on a ring of ``n`` sites it
is a real symmetric circulant matrix

    K[x, y] = 1/(n * spacing) * sum_k w(omega_k, t) * exp(i k (x - y))

with a mode weight ``w`` that fixes the role:

    ========  ======================  ==============
    role      weight                  omega -> 0
    ========  ======================  ==============
    G         omega cot(omega t)      1/t
    g         omega / sin(omega t)    1/t
    gInv      sin(omega t) / omega    t
    E         omega                   (mass > 0)
    dG_dt     -omega^2 / sin^2        -1/t^2
    dg_dt     -omega^2 cos / sin^2    -1/t^2
    dgInv_dt  cos(omega t)            1
    ========  ======================  ==============

Momentum integrals become ``1/(n*spacing) * sum_k`` and a spatial integral
``int dy`` becomes ``spacing * sum_y``; a delta function is ``I/spacing``.
Units are hbar = c = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import circulant

from .errors import CausticError, MasslessVacuumError, PeriodicWrapError

__all__ = [
    "CAUSTIC_EPS",
    "LatticeSpec",
    "KernelMatrix",
    "LightconeProfile",
    "ROLES",
    "IDENTITIES",
    "dispersion",
    "mode_frequencies",
    "circulant_from_weights",
    "mode_weights",
    "build_kernel",
    "quadratic_form",
    "verify_identity",
    "lightcone_profile",
]

CAUSTIC_EPS = 1e-6

ROLES = ("G", "g", "gInv", "E", "dG_dt", "dg_dt", "dgInv_dt")
_SINGULAR_ROLES = frozenset({"G", "g", "dG_dt", "dg_dt"})
IDENTITIES = ("gg", "gG1", "gG2", "GG_appendix")


@dataclass(frozen=True)
class LatticeSpec:
    """Discretisation of the free field: a ring of ``n_sites`` sites.

    ``dispersion`` is ``"lattice"`` for the nearest-neighbour Laplacian,
    ``omega^2 = m^2 + (2/a)^2 sin^2(k a / 2)``, or ``"continuum"`` for the
    continuum relation ``omega^2 = m^2 + k^2`` sampled at the lattice
    momenta (``k`` folded into the first Brillouin zone).
    """

    n_sites: int
    spacing: float = 1.0
    mass: float = 1.0
    dispersion: str = "lattice"

    def __post_init__(self):
        if int(self.n_sites) != self.n_sites or self.n_sites < 1:
            raise ValueError(f"n_sites must be a positive integer, got {self.n_sites!r}")
        if not self.spacing > 0:
            raise ValueError(f"spacing must be positive, got {self.spacing!r}")
        if not self.mass >= 0:
            raise ValueError(f"mass must be non-negative, got {self.mass!r}")
        if self.dispersion not in ("lattice", "continuum"):
            raise ValueError(f"unknown dispersion {self.dispersion!r}")
        object.__setattr__(self, "n_sites", int(self.n_sites))
        object.__setattr__(self, "spacing", float(self.spacing))
        object.__setattr__(self, "mass", float(self.mass))

    @property
    def length(self) -> float:
        return self.n_sites * self.spacing

    def wavenumbers(self) -> np.ndarray:
        """Signed lattice momenta ``2 pi j / L`` with ``j`` folded to ``[-n/2, n/2]``."""
        j = np.arange(self.n_sites)
        j = np.where(j <= self.n_sites // 2, j, j - self.n_sites)
        return 2.0 * np.pi * j / self.length

    def frequencies(self) -> np.ndarray:
        return mode_frequencies(self).copy()

    def to_dict(self) -> dict:
        return {
            "n_sites": self.n_sites,
            "spacing": self.spacing,
            "mass": self.mass,
            "dispersion": self.dispersion,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LatticeSpec":
        unknown = set(data) - {"n_sites", "spacing", "mass", "dispersion"}
        if unknown:
            raise ValueError(f"unknown LatticeSpec keys: {sorted(unknown)}")
        return cls(**data)


@lru_cache(maxsize=256)
def _frequencies(spec: LatticeSpec) -> np.ndarray:
    k = spec.wavenumbers()
    if spec.dispersion == "lattice":
        a = spec.spacing
        omega2 = spec.mass**2 + (2.0 / a * np.sin(k * a / 2.0)) ** 2
    else:
        omega2 = spec.mass**2 + k**2
    omega = np.sqrt(omega2)
    omega.setflags(write=False)
    return omega


def mode_frequencies(spec: LatticeSpec) -> np.ndarray:
    """All ``omega_k`` in FFT order (read-only array)."""
    return _frequencies(spec)


def dispersion(spec: LatticeSpec, mode_index: int) -> float:
    if not 0 <= mode_index < spec.n_sites:
        raise IndexError(f"mode_index {mode_index} outside [0, {spec.n_sites})")
    return float(mode_frequencies(spec)[mode_index])


def circulant_from_weights(weights: np.ndarray, spacing: float = 1.0) -> np.ndarray:
    """Real symmetric circulant ``1/(n a) sum_k w_k exp(i k (x-y))``.

    ``weights`` must be even under ``k -> -k``; the first column is
    symmetrised explicitly so the result is exactly symmetric.
    """
    col = np.fft.ifft(np.asarray(weights, dtype=float)).real
    col = 0.5 * (col + np.roll(col[::-1], 1))
    return circulant(col) / spacing


def _check_caustic(omega: np.ndarray, t: float, role: str) -> None:
    s = np.abs(np.sin(omega * t))
    # the zero mode's weights have 1/t limits, guard on |t| instead
    s = np.where(omega > 0, s, abs(t))
    worst = int(np.argmin(s))
    if s[worst] <= CAUSTIC_EPS:
        raise CausticError(
            f"role {role} at t={t!r}: |sin(omega t)| = {s[worst]:.3g} <= {CAUSTIC_EPS} "
            f"for mode {worst} (omega={omega[worst]:.6g})"
        )


def mode_weights(spec: LatticeSpec, role: str, t: float | None = None) -> np.ndarray:
    """Mode-space weight of a kernel, with the stated ``omega -> 0`` limits."""
    if role not in ROLES:
        raise ValueError(f"unknown kernel role {role!r}; expected one of {ROLES}")
    omega = mode_frequencies(spec)
    if role == "E":
        if spec.mass <= 0:
            raise MasslessVacuumError("the E kernel needs mass > 0 (zero mode has no ground state)")
        return omega.copy()
    if t is None:
        raise ValueError(f"role {role} needs a time")
    t = float(t)
    if role in _SINGULAR_ROLES:
        _check_caustic(omega, t, role)
    zero = omega == 0
    w = np.where(zero, 1.0, omega)  # placeholder avoids 0/0 warnings
    s, c = np.sin(w * t), np.cos(w * t)
    if role == "G":
        out, lim = w * c / s, 1.0 / t if t else np.inf
    elif role == "g":
        out, lim = w / s, 1.0 / t if t else np.inf
    elif role == "gInv":
        out, lim = s / w, t
    elif role == "dG_dt":
        out, lim = -(w**2) / s**2, -1.0 / t**2 if t else -np.inf
    elif role == "dg_dt":
        out, lim = -(w**2) * c / s**2, -1.0 / t**2 if t else -np.inf
    else:  # dgInv_dt
        out, lim = c, 1.0
    return np.where(zero, lim, out)


@dataclass(frozen=True)
class KernelMatrix:
    role: str
    time: float | None
    entries: np.ndarray = field(repr=False)
    spec: LatticeSpec | None = None

    def __post_init__(self):
        self.entries.setflags(write=False)

    def row(self) -> np.ndarray:
        """Kernel as a function of the lattice displacement ``x - 0``."""
        return np.asarray(self.entries[:, 0])


def build_kernel(spec: LatticeSpec, role: str, t: float | None = None) -> KernelMatrix:
    weights = mode_weights(spec, role, t)
    entries = circulant_from_weights(weights, spec.spacing)
    return KernelMatrix(role=role, time=None if role == "E" else float(t), entries=entries, spec=spec)


def quadratic_form(spec: LatticeSpec) -> np.ndarray:
    """The matrix ``M^2 = -Laplacian + m^2`` whose eigenvalues are ``omega_k^2``.

    For the lattice dispersion this is the nearest-neighbour stencil; for the
    continuum one it is the (non-local) circulant with the same spectrum.
    """
    return circulant_from_weights(mode_frequencies(spec) ** 2)


def _kernel(spec, role, t):
    return build_kernel(spec, role, t).entries


def _ddt(spec, role, t, dt):
    """Centred difference of a kernel in time.

    ``G`` and ``g`` both behave like ``I / (a t)`` at small ``t``; that part is
    differentiated exactly and only the smooth remainder is differenced.
    """
    if role in ("G", "g"):
        eye = np.eye(spec.n_sites) / spec.spacing

        def smooth(s):
            return _kernel(spec, role, s) - eye / s

        return (smooth(t + dt) - smooth(t - dt)) / (2.0 * dt) - eye / t**2
    return (_kernel(spec, role, t + dt) - _kernel(spec, role, t - dt)) / (2.0 * dt)


def verify_identity(spec: LatticeSpec, which: str, t: float, dt: float = 1e-4) -> float:
    """Max-norm residual of one of the kernel identities.

    ``gg``          int g^-1 g = delta
    ``gG1``         int g^-1 G = d/dt g^-1
    ``gG2``         int (d/dt g^-1) G = g + d^2/dt^2 g^-1
    ``GG_appendix`` int G G = -dG/dt + (lap - m^2) delta,
                    int G g = -dg/dt,  int g g = -dG/dt   (max of the three)

    Time derivatives are centred differences with step ``dt``. The second
    derivative of ``g^-1`` differences the analytic ``dgInv_dt`` kernel so
    that the error stays O(dt^2) instead of being swamped by cancellation.
    """
    a = spec.spacing
    eye = np.eye(spec.n_sites)
    if which == "gg":
        lhs = a * _kernel(spec, "gInv", t) @ _kernel(spec, "g", t)
        rhs = eye / a
    elif which == "gG1":
        lhs = a * _kernel(spec, "gInv", t) @ _kernel(spec, "G", t)
        rhs = _ddt(spec, "gInv", t, dt)
    elif which == "gG2":
        lhs = a * _ddt(spec, "gInv", t, dt) @ _kernel(spec, "G", t)
        rhs = _kernel(spec, "g", t) + _ddt(spec, "dgInv_dt", t, dt)
    elif which == "GG_appendix":
        G, g = _kernel(spec, "G", t), _kernel(spec, "g", t)
        dG, dg = _ddt(spec, "G", t, dt), _ddt(spec, "g", t, dt)
        laplace_minus_m2 = -quadratic_form(spec) / a
        return max(
            float(np.max(np.abs(a * G @ G - (-dG + laplace_minus_m2)))),
            float(np.max(np.abs(a * G @ g + dg))),
            float(np.max(np.abs(a * g @ g + dG))),
        )
    else:
        raise ValueError(f"unknown identity {which!r}; expected one of {IDENTITIES}")
    return float(np.max(np.abs(lhs - rhs)))


@dataclass(frozen=True)
class LightconeProfile:
    time: float
    distance: np.ndarray
    magnitude: np.ndarray
    tail_slope: float
    """Fitted d log|g^-1| / d distance outside the cone (negative for a decaying tail)."""

    def magnitude_at(self, distance: float) -> float:
        i = int(np.argmin(np.abs(self.distance - distance)))
        return float(self.magnitude[i])


def _commutator_row(spec: LatticeSpec, t: float) -> np.ndarray:
    """``g^-1(j a; t)`` for ``j = 0..n/2`` by a direct cosine sum in extended precision.

    The tail outside the cone falls far below double-precision roundoff of an
    FFT, so the sum is carried out in ``np.longdouble``.
    """
    n = spec.n_sites
    ld = np.longdouble
    pi = ld("3.14159265358979323846264338327950288")
    a = ld(spec.spacing)
    j = np.arange(n)
    j = np.where(j <= n // 2, j, j - n).astype(ld)
    k = 2 * pi * j / (n * a)
    if spec.dispersion == "lattice":
        omega = np.sqrt(ld(spec.mass) ** 2 + (2 / a * np.sin(k * a / 2)) ** 2)
    else:
        omega = np.sqrt(ld(spec.mass) ** 2 + k**2)
    tt = ld(t)
    safe = np.where(omega > 0, omega, 1)
    w = np.where(omega > 0, np.sin(safe * tt) / safe, tt)
    x = np.arange(n // 2 + 1, dtype=np.longdouble) * np.longdouble(spec.spacing)
    row = np.cos(np.outer(x, k)) @ w / (n * a)
    return row


def lightcone_profile(spec: LatticeSpec, t: float, margin: float | None = None,
                      floor: float = 1e-16) -> LightconeProfile:
    """``|g^-1(x; t)|`` against ``|x|`` plus an exponential fit of the tail.

    The fit uses every site strictly outside the cone whose magnitude is
    above ``floor`` times the peak (below that the values are roundoff).
    """
    if not t > 0:
        raise ValueError("lightcone_profile needs t > 0")
    if margin is None:
        margin = 10 * spec.spacing
    if spec.length <= 2 * t + margin:
        raise PeriodicWrapError(
            f"ring length {spec.length} <= 2t + margin = {2 * t + margin}: the cone wraps"
        )
    magnitude = np.abs(_commutator_row(spec, t)).astype(float)
    distance = np.arange(magnitude.size) * spec.spacing
    outside = (distance > t) & (magnitude > floor * magnitude.max())
    if np.count_nonzero(outside) >= 2:
        slope = float(np.polyfit(distance[outside], np.log(magnitude[outside]), 1)[0])
    else:
        slope = math.nan
    return LightconeProfile(float(t), distance, magnitude, slope)
