import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lightcone_rdm.errors import BranchNotVacuumEquivalent, MasslessVacuumError
from lightcone_rdm.gaussian import Region, coherent, restrict, vacuum
from lightcone_rdm.kernels import LatticeSpec
from lightcone_rdm.oracle import FockLattice, coherent_state_vector, partial_trace, reduced_moments
from lightcone_rdm.superposition import (
    Branch,
    CoherentSuperposition,
    cat_state,
    gram_matrix,
    local_moments,
    moments,
    overlap,
    vacuum_witness,
)

ONE = LatticeSpec(1, 1.0, 1.0)


def _delta(n, site, value=1.0):
    v = np.zeros(n)
    v[site] = value
    return v


# -- frozen values ---------------------------------------------------------


def test_identical_branches_overlap_to_one():
    b = Branch(1.0, [0.3], [-0.2])
    assert overlap(ONE, b, b) == pytest.approx(1.0, abs=1e-15)


def test_single_mode_overlap_with_vacuum():
    z = overlap(ONE, Branch(1, [1.0], [0.0]), Branch(1, [0.0], [0.0]))
    assert abs(z) ** 2 == pytest.approx(math.exp(-0.5), abs=1e-15)
    assert abs(z) ** 2 == pytest.approx(0.6065306597126334, abs=1e-15)


def test_overlap_matches_truncated_fock_space():
    fl = FockLattice(ONE, 30, 1.0)
    for (p1, q1), (p2, q2) in [((1.0, 0.0), (0.0, 0.0)), ((0.4, -0.3), (-0.2, 0.5))]:
        v1 = coherent_state_vector(fl, [p1], [q1])
        v2 = coherent_state_vector(fl, [p2], [q2])
        engine = overlap(ONE, Branch(1, [p1], [q1]), Branch(1, [p2], [q2]))
        assert np.vdot(v1, v2) == pytest.approx(engine, abs=1e-10)


def test_n16_cat_witness_benchmark():
    spec = LatticeSpec(16, 1.0, 1.0)
    a = Region((7,), 16)
    sup = cat_state(spec, _delta(16, 7))
    w = vacuum_witness(sup, a.complement())
    assert w > 1e-3
    assert w == pytest.approx(0.014477967313323977, rel=1e-9)


def test_cat_witness_matches_fock_oracle_on_three_sites():
    spec = LatticeSpec(3, 1.0, 1.0)
    big_a = Region((1, 2), 3)
    sup = cat_state(spec, _delta(3, 0))
    engine = vacuum_witness(sup, big_a)
    fl = FockLattice(spec, 8)
    psi = coherent_state_vector(fl, _delta(3, 0), np.zeros(3)) + \
        coherent_state_vector(fl, -_delta(3, 0), np.zeros(3))
    psi /= np.linalg.norm(psi)
    rho = partial_trace(np.outer(psi, psi.conj()), fl, big_a)
    mean, cov = reduced_moments(rho, fl, big_a)
    idx = big_a.phase_indices()
    oracle = max(np.max(np.abs(mean)), np.max(np.abs(cov - vacuum(spec).covariance[np.ix_(idx, idx)])))
    assert engine == pytest.approx(0.017652122764546113, rel=1e-9)
    assert abs(engine - oracle) <= 0.1 * engine


def test_cat_changes_momentum_fluctuations_off_support():
    spec = LatticeSpec(3, 1.0, 1.0)
    big_a = Region((1, 2), 3)
    mean, cov = local_moments(cat_state(spec, _delta(3, 0)), big_a)
    diff = cov - restrict(vacuum(spec), big_a).cov_block
    assert np.max(np.abs(mean)) == 0.0
    # field block untouched; the momentum block drops by a rank-one amount
    assert np.max(np.abs(diff[:2, :])) <= 1e-15
    eig = np.linalg.eigvalsh(diff[2:, 2:])
    assert eig[-1] <= 1e-15
    assert -eig[0] == pytest.approx(2 * 0.017652122764546113, rel=1e-9)


def test_witness_decays_with_distance():
    spec = LatticeSpec(32, 1.0, 1.0)
    sup = cat_state(spec, _delta(32, 0))
    w = [vacuum_witness(sup, Region((d,), 32)) for d in range(1, 9)]
    assert all(later < earlier for earlier, later in zip(w, w[1:]))
    assert w[-1] < 1e-6 * w[0]


def test_single_branch_witness_vanishes():
    spec = LatticeSpec(16, 1.0, 1.0)
    sup = CoherentSuperposition(spec, (Branch(1.0, _delta(16, 3), _delta(16, 3, 0.5)),))
    assert vacuum_witness(sup, Region((3,), 16).complement()) <= 1e-10


def test_single_branch_moments_match_coherent_state():
    spec = LatticeSpec(8, 0.5, 0.7)
    rng = np.random.default_rng(0)
    phi, pi = rng.normal(size=8), rng.normal(size=8)
    mean, cov = moments(CoherentSuperposition(spec, (Branch(0.3 - 0.4j, phi, pi),)))
    ref = coherent(spec, phi, pi)
    assert np.max(np.abs(mean - ref.mean)) <= 1e-12
    assert np.max(np.abs(cov - ref.covariance)) <= 1e-12


def test_far_apart_branches_are_a_mixture():
    spec = LatticeSpec(4, 1.0, 1.0)
    f = 20.0 * np.ones(4)
    sup = cat_state(spec, f)
    assert abs(gram_matrix(sup)[0, 1]) <= 1e-15
    mean, cov = moments(sup)
    vac = vacuum(spec).covariance
    mix = vac.copy()
    mix[:4, :4] += np.outer(f, f)
    assert np.max(np.abs(mean)) <= 1e-12
    assert np.allclose(cov, mix, atol=1e-10)


# -- errors and IO ---------------------------------------------------------


def test_branch_visible_on_the_region_is_refused():
    spec = LatticeSpec(8, 1.0, 1.0)
    with pytest.raises(BranchNotVacuumEquivalent):
        vacuum_witness(cat_state(spec, _delta(8, 2)), Region((2, 3), 8))


def test_massless_superposition_is_refused():
    with pytest.raises(MasslessVacuumError):
        gram_matrix(cat_state(LatticeSpec(4, 1.0, 0.0), _delta(4, 0)))


def test_json_round_trip_and_schema():
    sup = cat_state(LatticeSpec(4, 1.0, 1.0), _delta(4, 1), amplitudes=(1.0, 0.5j))
    back = CoherentSuperposition.from_dict(sup.to_dict())
    assert back.branches[1].amplitude == 0.5j
    assert np.array_equal(back.branches[0].phi_class, sup.branches[0].phi_class)
    bad = sup.to_dict()
    bad["branches"][0]["weight"] = 1
    with pytest.raises(ValueError):
        CoherentSuperposition.from_dict(bad)


# -- properties ------------------------------------------------------------

amps = st.complex_numbers(max_magnitude=2.0, min_magnitude=0.1, allow_nan=False, allow_infinity=False)


def _random_sup(seed, k, n=6):
    rng = np.random.default_rng(seed)
    spec = LatticeSpec(n, 1.0, 0.8)
    branches = tuple(Branch(complex(*rng.normal(size=2)), rng.normal(size=n), rng.normal(size=n))
                     for _ in range(k))
    return CoherentSuperposition(spec, branches)


@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_gram_is_positive_semidefinite(seed, k):
    g = gram_matrix(_random_sup(seed, k))
    assert np.allclose(g, g.conj().T, atol=1e-15)
    assert np.linalg.eigvalsh(g)[0] >= -1e-12


@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_norm_is_real_and_positive(seed, k):
    sup = _random_sup(seed, k)
    c = np.array([b.amplitude for b in sup.branches])
    n2 = c.conj() @ gram_matrix(sup) @ c
    assert abs(n2.imag) <= 1e-10 * max(1.0, abs(n2))
    assert n2.real > 0
    assert sup.norm == pytest.approx(math.sqrt(n2.real))


@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.floats(0, 2 * math.pi))
def test_moments_ignore_a_global_phase(seed, k, theta):
    sup = _random_sup(seed, k)
    rot = CoherentSuperposition(sup.spec, tuple(Branch(b.amplitude * np.exp(1j * theta), b.phi_class,
                                                       b.pi_class) for b in sup.branches))
    m1, c1 = moments(sup)
    m2, c2 = moments(rot)
    assert np.allclose(m1, m2, atol=1e-10) and np.allclose(c1, c2, atol=1e-10)


@given(st.integers(0, 2**32 - 1), st.permutations(range(3)))
def test_witness_ignores_branch_order(seed, perm):
    rng = np.random.default_rng(seed)
    spec = LatticeSpec(10, 1.0, 1.0)
    a = Region((4, 5), 10)
    branches = []
    for _ in range(3):
        phi, pi = np.zeros(10), np.zeros(10)
        phi[[4, 5]], pi[[4, 5]] = rng.normal(size=2), rng.normal(size=2)
        branches.append(Branch(complex(*rng.normal(size=2)), phi, pi))
    w1 = vacuum_witness(CoherentSuperposition(spec, tuple(branches)), a.complement())
    w2 = vacuum_witness(CoherentSuperposition(spec, tuple(branches[i] for i in perm)), a.complement())
    assert w1 == pytest.approx(w2, abs=1e-12)


@given(amps, st.integers(1, 3))
def test_identical_branches_have_no_witness(c, k):
    spec = LatticeSpec(8, 1.0, 1.0)
    b = Branch(c, _delta(8, 0), _delta(8, 0, -0.3))
    sup = CoherentSuperposition(spec, (b,) * k)
    assert vacuum_witness(sup, Region((0,), 8).complement()) <= 1e-10
