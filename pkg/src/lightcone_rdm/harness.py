"""Perturb in ``a``, evolve, and check that nothing changed outside the cone.

The geometry: region ``a`` is an interval, ``b`` is ``a`` widened by the
distance light travels in time ``t`` (one site per unit time at spacing 1),
and ``B`` is everything else. A margin pushes ``B`` further out by extra
sites. On a lattice the exact zero of the continuum becomes an exponential
tail, so every check has a tolerance and reports the cone-edge deviation
next to it to show the run was not vacuous.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import platform
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np
import scipy
from scipy.linalg import expm

from . import __version__
from .errors import PeriodicWrapError, PreconditionError, RegionError
from .gaussian import (
    GaussianState,
    Region,
    apply_local_displacement,
    apply_local_symplectic,
    descriptor_distance,
    evolve,
    find_local_gaussian_unitary,
    restrict,
    state_distance,
    symplectic_form,
    vacuum,
)
from .kernels import LatticeSpec
from .superposition import Branch, CoherentSuperposition, vacuum_witness

__all__ = [
    "Displacement",
    "LocalSymplectic",
    "CatPair",
    "ScenarioConfig",
    "CausalityReport",
    "KickReport",
    "CatReport",
    "squeeze_symplectic",
    "random_local_symplectic",
    "region_geometry",
    "perturb",
    "run_causality_check",
    "confinement_demo",
    "kick_equivalence_check",
    "lightcone_sweep",
    "sweep_to_csv",
    "cat_scenario",
    "make_manifest",
]

CSV_COLUMNS = ("t", "margin", "max_B_deviation", "cone_edge_deviation")
INITIAL_TOL = 1e-12
RECONSTRUCTION_TOL = 1e-8
RESPONSIVENESS = 1e3
NOISE = 0.1


# -- perturbations ---------------------------------------------------------


@dataclass(frozen=True)
class Displacement:
    """Shift ``(phi, pi)`` on region ``a``; scalars are broadcast over ``a``."""
    dphi: object = 1.0
    dpi: object = 0.0
    kind = "displacement"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "dphi": _jsonable(self.dphi), "dpi": _jsonable(self.dpi)}


@dataclass(frozen=True)
class LocalSymplectic:
    """A symplectic map on ``(phi_a, pi_a)``.

    ``matrix=None`` means a single-mode squeeze of strength ``squeeze`` on
    every site of ``a`` (see :func:`squeeze_symplectic`).
    """
    matrix: object = None
    squeeze: float = 1.0
    kind = "local_symplectic"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "matrix": _jsonable(self.matrix), "squeeze": self.squeeze}


@dataclass(frozen=True)
class CatPair:
    """Equal-weight (by default) superposition of a displacement and its negation."""
    dphi: object = 1.0
    dpi: object = 0.0
    amplitudes: tuple = (1.0, 1.0)
    kind = "cat_pair"

    def to_dict(self) -> dict:
        amps = [[complex(c).real, complex(c).imag] for c in self.amplitudes]
        return {"kind": self.kind, "dphi": _jsonable(self.dphi), "dpi": _jsonable(self.dpi),
                "amplitudes": amps}


_PERTURBATIONS = {cls.kind: cls for cls in (Displacement, LocalSymplectic, CatPair)}


def _jsonable(x):
    if x is None or isinstance(x, (int, float)):
        return x
    return np.asarray(x, dtype=float).tolist()


def _perturbation_from_dict(data: dict):
    data = dict(data)
    kind = data.pop("kind", None)
    if kind not in _PERTURBATIONS:
        raise PreconditionError(f"unknown perturbation kind {kind!r}; expected one of {sorted(_PERTURBATIONS)}")
    cls = _PERTURBATIONS[kind]
    allowed = set(cls.__dataclass_fields__)
    unknown = set(data) - allowed
    if unknown:
        raise PreconditionError(f"unknown keys for {kind}: {sorted(unknown)}")
    if kind == "cat_pair" and "amplitudes" in data:
        data["amplitudes"] = tuple(complex(*c) if isinstance(c, (list, tuple)) else complex(c)
                                   for c in data["amplitudes"])
    return cls(**data)


# -- configuration ---------------------------------------------------------


@dataclass(frozen=True)
class ScenarioConfig:
    spec: LatticeSpec
    region_a: Region
    time: float
    perturbation: object = field(default_factory=Displacement)
    margins: tuple = (20,)
    tolerance: float = 1e-8
    seed: int = 0
    edge_threshold: float = 1e-2
    witness_threshold: float = 1e-3
    base: GaussianState | None = None

    def __post_init__(self):
        if self.region_a.n_sites != self.spec.n_sites:
            raise RegionError("region_a belongs to a different lattice")
        if not _is_interval(self.region_a):
            raise RegionError("region_a must be a contiguous interval")
        if not (math.isfinite(self.time) and self.time >= 0):
            raise PreconditionError(f"time must be a non-negative finite number, got {self.time}")
        margins = tuple(int(m) for m in self.margins)
        if not margins or min(margins) < 0:
            raise PreconditionError("margins must be a non-empty list of non-negative integers")
        object.__setattr__(self, "margins", margins)
        if not self.tolerance > 0:
            raise PreconditionError("tolerance must be positive")
        if self.base is not None and self.base.spec != self.spec:
            raise PreconditionError("base state lives on a different lattice")
        region_geometry(self.region_a, self.time, self.spec, max(margins))

    def to_dict(self) -> dict:
        out = {
            "spec": self.spec.to_dict(),
            "region_a": self.region_a.to_dict(),
            "time": self.time,
            "perturbation": self.perturbation.to_dict(),
            "margins": list(self.margins),
            "tolerance": self.tolerance,
            "seed": self.seed,
            "edge_threshold": self.edge_threshold,
            "witness_threshold": self.witness_threshold,
        }
        if self.base is not None:
            out["base"] = self.base.to_dict()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        allowed = {"spec", "region_a", "time", "perturbation", "margins", "tolerance",
                   "seed", "edge_threshold", "witness_threshold", "base"}
        unknown = set(data) - allowed
        if unknown:
            raise PreconditionError(f"unknown scenario keys: {sorted(unknown)}")
        try:
            spec = LatticeSpec.from_dict(data["spec"])
            region = data["region_a"]
            if isinstance(region, dict) and "start" in region:
                region = Region.interval(int(region["start"]), int(region["length"]), spec.n_sites)
            else:
                region = Region.from_dict(region)
            kwargs = {"spec": spec, "region_a": region, "time": float(data["time"])}
        except KeyError as exc:
            raise PreconditionError(f"missing scenario key {exc}") from None
        if "perturbation" in data:
            kwargs["perturbation"] = _perturbation_from_dict(data["perturbation"])
        for key in ("margins", "tolerance", "seed", "edge_threshold", "witness_threshold"):
            if key in data:
                kwargs[key] = data[key]
        if "base" in data:
            kwargs["base"] = GaussianState.from_dict(data["base"])
        return cls(**kwargs)

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _is_interval(region: Region) -> bool:
    sites, n = region.sites, region.n_sites
    if len(sites) in (0, n):
        return len(sites) > 0
    gaps = sum(1 for s in sites if (s + 1) % n not in region)
    return gaps == 1


def make_manifest(config: ScenarioConfig, started: datetime | None = None) -> dict:
    started = started or datetime.now(timezone.utc)
    return {
        "config": config.to_dict(),
        "config_hash": config.config_hash(),
        "artifact_version": __version__,
        "versions": {"python": platform.python_version(), "numpy": np.__version__,
                     "scipy": scipy.__version__},
        "seed": config.seed,
        "timestamps": {"started": started.isoformat(),
                       "finished": datetime.now(timezone.utc).isoformat()},
    }


# -- geometry --------------------------------------------------------------


def _cone_sites(t: float, spacing: float) -> int:
    # the small slack keeps t = 5.0 at exactly 5 sites despite roundoff in t/spacing
    return int(math.ceil(t / spacing - 1e-9)) if t > 0 else 0


def region_geometry(region_a: Region, t: float, spec: LatticeSpec, margin: int = 0):
    """``(b, B)``: ``a`` widened by the light-cone reach and its complement.

    ``margin`` widens ``b`` by extra sites, which shrinks ``B``.

    Raises
    ------
    PeriodicWrapError
        If the widened region meets itself around the ring.
    """
    reach = _cone_sites(t, spec.spacing) + int(margin)
    if len(region_a) + 2 * reach >= spec.n_sites:
        raise PeriodicWrapError(
            f"the cone of a ({len(region_a)} sites) plus margin reaches {2 * reach} extra sites on a "
            f"ring of {spec.n_sites}: it wraps"
        )
    b = region_a.dilate(reach)
    return b, b.complement()


def _broadcast(values, region: Region, n: int) -> np.ndarray:
    out = np.zeros(n)
    out[list(region.sites)] = np.broadcast_to(np.asarray(values, dtype=float), (len(region),))
    return out


def squeeze_symplectic(n_region: int, squeeze: float) -> np.ndarray:
    """Single-site squeeze ``phi -> e^r phi``, ``pi -> e^-r pi`` on every site."""
    return np.diag(np.concatenate([np.full(n_region, math.exp(squeeze)),
                                   np.full(n_region, math.exp(-squeeze))]))


def random_local_symplectic(n_region: int, rng: np.random.Generator, strength: float = 0.3) -> np.ndarray:
    """``expm(J H)`` for a random symmetric ``H`` of norm about ``strength``."""
    h = rng.standard_normal((2 * n_region, 2 * n_region))
    h = 0.5 * (h + h.T)
    h *= strength / max(np.linalg.norm(h, 2), 1e-300)
    return expm(symplectic_form(n_region) @ h)


def perturb(state: GaussianState, region: Region, perturbation) -> GaussianState:
    """Apply a displacement or local-symplectic kick supported in ``region``."""
    n = state.n_sites
    if isinstance(perturbation, Displacement):
        return apply_local_displacement(state, region, _broadcast(perturbation.dphi, region, n),
                                        _broadcast(perturbation.dpi, region, n))
    if isinstance(perturbation, LocalSymplectic):
        mat = perturbation.matrix
        if mat is None:
            mat = squeeze_symplectic(len(region), perturbation.squeeze)
        return apply_local_symplectic(state, region, mat)
    raise PreconditionError(f"{type(perturbation).__name__} does not act on a Gaussian state")


# -- reports ---------------------------------------------------------------


@dataclass(frozen=True)
class CausalityReport:
    """Outcome of one perturb-evolve-compare run.

    ``profile[x]`` is the descriptor deviation of the single site ``x``.
    ``max_B_deviation[i]`` belongs to ``margins[i]``.
    """
    profile: np.ndarray
    margins: tuple
    max_B_deviation: tuple
    cone_edge_deviation: float
    tolerance: float
    passed: bool
    responsive: bool
    monotone: bool
    manifest: dict

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "responsive": self.responsive,
            "monotone": self.monotone,
            "tolerance": self.tolerance,
            "margins": list(self.margins),
            "max_B_deviation": list(self.max_B_deviation),
            "cone_edge_deviation": self.cone_edge_deviation,
            "profile": self.profile.tolist(),
            "manifest": self.manifest,
        }


def _site_profile(s1: GaussianState, s2: GaussianState) -> np.ndarray:
    n = s1.n_sites
    dm = np.abs(s1.mean - s2.mean)
    dc = np.abs(s1.covariance - s2.covariance)
    prof = np.empty(n)
    for x in range(n):
        idx = [x, n + x]
        prof[x] = max(dm[idx].max(), dc[np.ix_(idx, idx)].max())
    return prof


def _edge_deviation(profile: np.ndarray, b: Region, region_a: Region) -> float:
    """Largest single-site deviation on the outermost site of ``b`` on either side."""
    far = max(b.sites, key=region_a.distance_to)
    reach = region_a.distance_to(far)
    edge = [x for x in b.sites if region_a.distance_to(x) == reach]
    return float(profile[edge].max())


def _compare(config: ScenarioConfig, ref_t: GaussianState, pert_t: GaussianState,
             started: datetime) -> CausalityReport:
    spec, a, t = config.spec, config.region_a, config.time
    profile = _site_profile(ref_t, pert_t)
    devs = []
    for m in config.margins:
        _, big_b = region_geometry(a, t, spec, m)
        devs.append(descriptor_distance(restrict(ref_t, big_b), restrict(pert_t, big_b)))
    b, _ = region_geometry(a, t, spec)
    edge = _edge_deviation(profile, b, a)
    order = np.argsort(config.margins, kind="stable")
    sorted_devs = [devs[i] for i in order]
    monotone = all(later <= (1 + NOISE) * earlier + 1e-300
                   for earlier, later in zip(sorted_devs, sorted_devs[1:]))
    worst = max(devs)
    return CausalityReport(
        profile=profile,
        margins=config.margins,
        max_B_deviation=tuple(float(d) for d in devs),
        cone_edge_deviation=edge,
        tolerance=config.tolerance,
        passed=bool(worst <= config.tolerance),
        responsive=bool(edge >= config.edge_threshold and edge >= RESPONSIVENESS * worst),
        monotone=monotone,
        manifest=make_manifest(config, started),
    )


def run_causality_check(config: ScenarioConfig) -> CausalityReport:
    """Evolve a base state and its ``a``-perturbed copy; compare them on ``B``.

    Raises
    ------
    PreconditionError
        If the two states already differ outside ``a`` at ``t = 0``.
    """
    started = datetime.now(timezone.utc)
    base = config.base if config.base is not None else vacuum(config.spec)
    kicked = perturb(base, config.region_a, config.perturbation)
    outside = config.region_a.complement()
    if len(outside):
        gap = descriptor_distance(restrict(base, outside), restrict(kicked, outside))
        if gap > INITIAL_TOL:
            raise PreconditionError(f"states differ outside a at t=0 by {gap:.3g}")
    return _compare(config, evolve(base, config.time), evolve(kicked, config.time), started)


def confinement_demo(config: ScenarioConfig) -> CausalityReport:
    """Excite the vacuum inside ``a`` and compare the evolved state with the vacuum on ``B``.

    Unlike :func:`run_causality_check` the reference is the vacuum itself,
    not an evolved copy: outside the cone the excitation must be
    indistinguishable from no excitation at all.
    """
    started = datetime.now(timezone.utc)
    vac = vacuum(config.spec)
    excited = perturb(vac, config.region_a, config.perturbation)
    return _compare(config, vac, evolve(excited, config.time), started)


@dataclass(frozen=True)
class KickReport:
    operation: object
    reconstruction_residual: float
    passed: bool

    def to_dict(self) -> dict:
        op = self.operation
        return {"reconstruction_residual": self.reconstruction_residual, "passed": self.passed,
                "operation_residual": op.residual, "region": op.region.to_dict()}


def kick_equivalence_check(s1, s2=None, region: Region | None = None,
                           tol: float = RECONSTRUCTION_TOL) -> KickReport:
    """Recover the local Gaussian unitary that turns ``s1`` into ``s2``.

    Call either with two states and a region, or with a
    :class:`ScenarioConfig` (the pair is then the base state and its kick).
    """
    if isinstance(s1, ScenarioConfig):
        config = s1
        base = config.base if config.base is not None else vacuum(config.spec)
        s1, s2, region = base, perturb(base, config.region_a, config.perturbation), config.region_a
    op = find_local_gaussian_unitary(s1, s2, region)
    residual = state_distance(op.apply(s1), s2)
    return KickReport(op, residual, bool(residual <= tol))


# -- sweeps ----------------------------------------------------------------


def _threads() -> int:
    raw = os.environ.get("LIGHTCONE_RDM_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def lightcone_sweep(config: ScenarioConfig, times, margins=None) -> list[tuple]:
    """Rows ``(t, margin, max_B_deviation, cone_edge_deviation)`` sorted by ``(t, margin)``.

    Each time is an independent job; ``LIGHTCONE_RDM_THREADS`` caps how many
    run at once. The output does not depend on the number of threads.
    """
    margins = tuple(sorted(set(int(m) for m in (margins if margins is not None else config.margins))))
    times = tuple(sorted(set(float(t) for t in times)))
    base = config.base if config.base is not None else vacuum(config.spec)
    kicked = perturb(base, config.region_a, config.perturbation)
    for t in times:
        region_geometry(config.region_a, t, config.spec, max(margins))

    def job(t):
        ref, pert = evolve(base, t), evolve(kicked, t)
        profile = _site_profile(ref, pert)
        b, _ = region_geometry(config.region_a, t, config.spec)
        edge = _edge_deviation(profile, b, config.region_a)
        rows = []
        for m in margins:
            _, big_b = region_geometry(config.region_a, t, config.spec, m)
            dev = descriptor_distance(restrict(ref, big_b), restrict(pert, big_b))
            rows.append((t, m, float(dev), edge))
        return rows

    workers = min(_threads(), len(times))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            chunks = list(pool.map(job, times))
    else:
        chunks = [job(t) for t in times]
    return [row for chunk in chunks for row in chunk]


def sweep_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for t, m, dev, edge in rows:
        writer.writerow([repr(float(t)), int(m), repr(float(dev)), repr(float(edge))])
    return buf.getvalue()


# -- superpositions --------------------------------------------------------


@dataclass(frozen=True)
class CatReport:
    branch_witnesses: tuple
    witness: float
    threshold: float
    passed: bool
    witness_region: Region
    distance_profile: tuple
    """``(distance, witness)`` for single sites at growing distance from ``a``."""

    def to_dict(self) -> dict:
        return {
            "branch_witnesses": list(self.branch_witnesses),
            "witness": self.witness,
            "threshold": self.threshold,
            "passed": self.passed,
            "witness_region": self.witness_region.to_dict(),
            "distance_profile": [list(p) for p in self.distance_profile],
        }


def _evolved_branch(spec: LatticeSpec, branch: Branch, t: float) -> Branch:
    # the branch phase convention exp(i P.q / 2) is not conserved; fold the change into the amplitude
    if t == 0:
        return branch
    n, a = spec.n_sites, spec.spacing
    moved = evolve(GaussianState(spec, np.concatenate([branch.phi_class, branch.pi_class]),
                                 vacuum(spec).covariance), t).mean
    phi_t, pi_t = moved[:n], moved[n:]
    shift = 0.5 * a * (branch.pi_class @ branch.phi_class - pi_t @ phi_t)
    return Branch(branch.amplitude * np.exp(1j * shift), phi_t, pi_t)


def cat_scenario(config: ScenarioConfig, threshold: float | None = None) -> CatReport:
    """Each branch looks like the vacuum on ``B``; their superposition does not.

    The witness region is ``B`` for the configured time and smallest margin.
    Use ``time = 0`` and margin 0 for the static statement, where ``B`` is
    the whole complement of ``a``.
    """
    pert = config.perturbation
    if not isinstance(pert, CatPair):
        raise PreconditionError("cat_scenario needs a cat_pair perturbation")
    threshold = config.witness_threshold if threshold is None else threshold
    spec, a, n = config.spec, config.region_a, config.spec.n_sites
    phi = _broadcast(pert.dphi, a, n)
    pi = _broadcast(pert.dpi, a, n)
    branches = [Branch(pert.amplitudes[0], phi, pi), Branch(pert.amplitudes[1], -phi, -pi)]
    branches = [_evolved_branch(spec, b, config.time) for b in branches]
    _, big_b = region_geometry(a, config.time, spec, min(config.margins))

    singles = tuple(vacuum_witness(CoherentSuperposition(spec, (Branch(1.0, b.phi_class, b.pi_class),)), big_b)
                    for b in branches)
    sup = CoherentSuperposition(spec, tuple(branches))
    witness = vacuum_witness(sup, big_b)

    profile = []
    for site in sorted(big_b.sites, key=a.distance_to):
        d = a.distance_to(site)
        if profile and profile[-1][0] == d:
            continue
        profile.append((d, vacuum_witness(sup, Region((site,), n))))
    passed = bool(max(singles) <= 1e-10 and witness >= threshold)
    return CatReport(singles, witness, threshold, passed, big_b, tuple(profile))
