import math
import warnings

import numpy as np
import pytest

from qworklab import schemes as sch
from qworklab.errors import (
    DecompositionMismatch,
    DegenerateRhoWarning,
    NotPositive,
    TrajectoryBudgetExceeded,
)
from qworklab.linalg import max_abs, projector, random_density, random_unitary
from qworklab.scenario import DrivingProtocol, Scenario, mean_energy_change, time_reversed

from conftest import H01, HADAMARD, PLUS, SX, SZ, haar_unitary_np, random_density_np

RNG = np.random.default_rng(20240817)


def random_scenario(dim, rng, diagonal_rho=False):
    # oracle-side construction: numpy eigh only
    def herm(spread=1.0):
        g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        return (g + g.conj().T) / 2.0 * spread

    h, hf = herm(), herm()
    u = haar_unitary_np(dim, rng)
    if diagonal_rho:
        vecs = np.linalg.eigh(h)[1]
        probs = np.arange(1.0, dim + 1.0) + rng.random(dim)
        probs /= probs.sum()
        rho = (vecs * probs) @ vecs.conj().T
    else:
        rho = random_density_np(dim, rng)
    return Scenario(dim=dim, h_initial=h, h_final=hf, evolution=u, rho=rho)


def tpm_brute_force(s):
    """Independent TPM oracle: numpy eigh, explicit (i, j) enumeration."""
    e_i, v_i = np.linalg.eigh(s.h_initial)
    e_f, v_f = np.linalg.eigh(s.h_final)
    u = s.unitary()
    atoms = {}
    for i in range(s.dim):
        p_i = float((v_i[:, i].conj() @ s.rho @ v_i[:, i]).real)
        for j in range(s.dim):
            amp = v_f[:, j].conj() @ u @ v_i[:, i]
            w = e_f[j] - e_i[i]
            key = round(w, 9)
            atoms[key] = atoms.get(key, 0.0) + p_i * float(np.abs(amp) ** 2)
    return atoms


def assert_matches_atoms(dist, oracle_atoms, atol=1e-10):
    for key, weight in oracle_atoms.items():
        assert abs(dist.weight_at(key, tol=1e-8) - weight) <= atol


# --- work distribution container -------------------------------------------------

def test_merge_atoms_chains_and_sums():
    w, p = sch.merge_atoms([0.0, 9e-10, 1.8e-9, 1.0], [0.2, 0.3, 0.1, 0.4])
    np.testing.assert_allclose(w, [9e-10, 1.0])
    np.testing.assert_allclose(p, [0.6, 0.4])


def test_distribution_rejects_bad_normalization():
    with pytest.raises(ValueError):
        sch.WorkDistribution.from_atoms([0.0], [0.5], sch.SchemeId.TPM, False)
    with pytest.raises(ValueError):
        sch.WorkDistribution.from_atoms([0.0, 1.0], [1.5, -0.5], sch.SchemeId.TPM, False)


def test_tv_distance_merges_supports():
    a = sch.WorkDistribution.from_atoms([0.0, 1.0], [0.5, 0.5], sch.SchemeId.TPM, False)
    b = sch.WorkDistribution.from_atoms([1e-10, 1.0], [0.5, 0.5], sch.SchemeId.TPM, False)
    assert a.tv_distance(b) <= 1e-15


# --- TPM --------------------------------------------------------------------------

def test_tpm_identity_evolution():
    rho = random_density(3, 5)
    h = np.diag([0.0, 1.0, 2.0]).astype(complex)
    s = Scenario(dim=3, h_initial=h, h_final=h, evolution=np.eye(3, dtype=complex), rho=rho)
    dist, _ = sch.tpm(s)
    assert dist.atoms == [(0.0, pytest.approx(1.0))]


def test_tpm_hadamard_quarters(hadamard_scenario):
    dist, table = sch.tpm(hadamard_scenario)
    assert dist.weight_at(-2.0) == pytest.approx(0.25)
    assert dist.weight_at(0.0) == pytest.approx(0.5)
    assert dist.weight_at(2.0) == pytest.approx(0.25)
    np.testing.assert_allclose(table.weights.sum(), 1.0)


def test_tpm_commuting_case_is_deterministic_zero():
    rho = np.diag([0.3, 0.7]).astype(complex)
    u = np.diag([1.0, np.exp(0.7j)]).astype(complex)
    s = Scenario(dim=2, h_initial=SZ, h_final=SZ, evolution=u, rho=rho)
    assert sch.tpm(s)[0].atoms == [(0.0, pytest.approx(1.0))]


def test_tpm_against_brute_force_oracle():
    rng = np.random.default_rng(100)
    for dim in (2, 3, 4):
        for _ in range(25):
            s = random_scenario(dim, rng)
            assert_matches_atoms(sch.tpm(s)[0], tpm_brute_force(s))


def test_tpm_degenerate_initial_spectrum_uses_projectors():
    h = np.diag([0.0, 0.0, 1.0]).astype(complex)
    rng = np.random.default_rng(3)
    s = random_scenario(3, rng)
    s = Scenario(dim=3, h_initial=h, h_final=s.h_final, evolution=s.evolution, rho=s.rho)
    dist, table = sch.tpm(s)
    assert table.weights.shape[0] == 2  # two eigenspaces
    assert abs(sum(p for _, p in dist.atoms) - 1.0) <= 1e-9


# --- operator of work ----------------------------------------------------------

def test_work_operator_identity_and_hadamard(hadamard_scenario):
    h = np.diag([0.0, 1.0]).astype(complex)
    s0 = Scenario(dim=2, h_initial=h, h_final=h, evolution=np.eye(2, dtype=complex),
                  rho=PLUS)
    w_op, dist = sch.work_operator(s0)
    assert max_abs(w_op) <= 1e-12
    assert dist.atoms == [(0.0, pytest.approx(1.0))]

    w_op, dist = sch.work_operator(hadamard_scenario)
    np.testing.assert_allclose(w_op, SX - SZ, atol=1e-12)
    np.testing.assert_allclose(dist.works, [-math.sqrt(2), math.sqrt(2)], atol=1e-9)


def test_work_operator_mean_matches_energy_change_500_scenarios():
    rng = np.random.default_rng(42)
    for _ in range(500):
        s = random_scenario(2, rng)
        _, dist = sch.work_operator(s)
        assert abs(dist.mean() - mean_energy_change(s)) <= 1e-9


# --- FCS ------------------------------------------------------------------------

def fcs_brute_force(s):
    e_i, v_i = np.linalg.eigh(s.h_initial)
    e_f, v_f = np.linalg.eigh(s.h_final)
    u = s.unitary()
    atoms = {}
    for n in range(s.dim):
        for n2 in range(s.dim):
            rho_el = v_i[:, n].conj() @ s.rho @ v_i[:, n2]
            for m in range(s.dim):
                ket = np.outer(v_i[:, n], v_i[:, n2].conj())
                proj_m = np.outer(v_f[:, m], v_f[:, m].conj())
                kernel = np.trace(ket @ u.conj().T @ proj_m @ u)
                w = e_f[m] - (e_i[n] + e_i[n2]) / 2.0
                key = round(w, 9)
                atoms[key] = atoms.get(key, 0.0) + (rho_el * kernel).real
    return atoms


def test_fcs_against_brute_force():
    rng = np.random.default_rng(7)
    for dim in (2, 3):
        for _ in range(15):
            s = random_scenario(dim, rng)
            assert_matches_atoms(sch.fcs_quasiprob(s), fcs_brute_force(s))


def test_fcs_equals_tpm_for_diagonal_states():
    rng = np.random.default_rng(8)
    for _ in range(50):
        s = random_scenario(3, rng, diagonal_rho=True)
        assert sch.fcs_quasiprob(s).tv_distance(sch.tpm(s)[0]) <= 1e-10


def test_fcs_mean_is_energy_change():
    rng = np.random.default_rng(9)
    for _ in range(100):
        s = random_scenario(3, rng)
        assert abs(sch.fcs_quasiprob(s).mean() - mean_energy_change(s)) <= 1e-10


def test_fcs_negativity_instance_exists():
    s = Scenario(dim=2, h_initial=H01, h_final=H01, evolution=HADAMARD, rho=PLUS)
    dist = sch.fcs_quasiprob(s)
    assert dist.is_quasi
    assert dist.min_weight() == pytest.approx(-0.5, abs=1e-12)
    assert dist.weight_at(0.5) == pytest.approx(-0.5, abs=1e-12)


def test_fcs_characteristic_function():
    rng = np.random.default_rng(10)
    s = random_scenario(3, rng)
    q = sch.fcs_quasiprob(s)
    assert sch.fcs_characteristic(s, 0.0) == pytest.approx(1.0, abs=1e-12)
    for u_var in (0.1, 0.5, 1.0, 1.7, 2.4, 3.0):
        direct = sum(p * np.exp(1j * u_var * w) for w, p in q.atoms)
        assert abs(sch.fcs_characteristic(s, u_var) - direct) <= 1e-9
    # derivative at zero: central difference vs i * mean
    h = 1e-4
    deriv = (sch.fcs_characteristic(s, h) - sch.fcs_characteristic(s, -h)) / (2 * h)
    assert abs(deriv - 1j * q.mean()) <= 1e-5


# --- Margenau-Hill ---------------------------------------------------------------

def mh_brute_force_table(s):
    e_i, v_i = np.linalg.eigh(s.h_initial)
    e_f, v_f = np.linalg.eigh(s.h_final)
    u = s.unitary()
    table = np.zeros((s.dim, s.dim))
    for k in range(s.dim):
        pk = np.outer(v_i[:, k], v_i[:, k].conj())
        for m in range(s.dim):
            qm = np.outer(v_f[:, m], v_f[:, m].conj())
            table[k, m] = np.trace(s.rho @ pk @ u.conj().T @ qm @ u).real
    return table


def test_mh_against_brute_force_and_marginals():
    rng = np.random.default_rng(12)
    for _ in range(25):
        s = random_scenario(3, rng)
        table, dist = sch.margenau_hill(s)
        np.testing.assert_allclose(table.weights, mh_brute_force_table(s), atol=1e-11)
        e_i, v_i = np.linalg.eigh(s.h_initial)
        pops = [float((v_i[:, k].conj() @ s.rho @ v_i[:, k]).real) for k in range(3)]
        np.testing.assert_allclose(table.initial_marginal(), pops, atol=1e-10)
        evolved = s.unitary() @ s.rho @ s.unitary().conj().T
        e_f, v_f = np.linalg.eigh(s.h_final)
        pops_f = [float((v_f[:, m].conj() @ evolved @ v_f[:, m]).real) for m in range(3)]
        np.testing.assert_allclose(table.final_marginal(), pops_f, atol=1e-10)
        assert abs(dist.mean() - mean_energy_change(s)) <= 1e-10


def test_mh_diagonal_states_recover_tpm():
    rng = np.random.default_rng(13)
    for _ in range(50):
        s = random_scenario(3, rng, diagonal_rho=True)
        assert sch.margenau_hill(s)[1].tv_distance(sch.tpm(s)[0]) <= 1e-10


def test_mh_extremal_negative_joint_value():
    a, b = math.pi / 3.0, 2.0 * math.pi / 3.0
    psi = np.array([math.cos(b), math.sin(b)], dtype=complex)
    u = np.array([[math.cos(a), math.sin(a)], [-math.sin(a), math.cos(a)]], dtype=complex)
    s = Scenario(dim=2, h_initial=H01, h_final=H01, evolution=u, rho=projector(psi))
    table, _ = sch.margenau_hill(s)
    assert table.weights.min() == pytest.approx(-0.125, abs=1e-12)


# --- consistent histories ----------------------------------------------------------

def make_ramp(rho, h0=SZ, h1=SZ + 0.7 * SX, tau=1.0, steps=64):
    proto = DrivingProtocol(((0.0, h0), (tau, h1)), steps)
    return Scenario(dim=2, h_initial=h0, h_final=h1, evolution=proto, rho=rho)


def test_ch_constant_driving_is_delta_at_zero():
    proto = DrivingProtocol(((0.0, SZ), (1.0, SZ)))
    s = Scenario(dim=2, h_initial=SZ, h_final=SZ, evolution=proto, rho=PLUS)
    assert sch.consistent_histories(s, 8).atoms == [(0.0, pytest.approx(1.0))]


def test_ch_requires_protocol_and_budget():
    s = Scenario(dim=2, h_initial=SZ, h_final=SZ, evolution=HADAMARD, rho=PLUS)
    with pytest.raises(ValueError):
        sch.consistent_histories(s, 4)
    ramp = make_ramp(PLUS)
    with pytest.raises(TrajectoryBudgetExceeded):
        sch.consistent_histories(ramp, 25)


def test_ch_time_reversal_symmetry():
    rho = 0.6 * PLUS + 0.4 * np.diag([0.8, 0.2]).astype(complex)
    s = make_ramp(rho)
    K = 8
    fwd = sch.consistent_histories(s, K)
    rev = sch.consistent_histories(time_reversed(s), K)
    mirrored = sch.WorkDistribution.from_atoms(
        -rev.works, rev.weights, sch.SchemeId.CONSISTENT_HISTORIES, True)
    assert fwd.tv_distance(mirrored) <= 1e-10


def test_ch_moments_converge_to_work_operator():
    rho = 0.6 * PLUS + 0.4 * np.diag([0.8, 0.2]).astype(complex)
    s = make_ramp(rho)
    w_op, _ = sch.work_operator(s)
    targets = [np.trace(rho @ w_op).real, np.trace(rho @ w_op @ w_op).real]
    for k_moment, target in enumerate(targets, start=1):
        errs = [abs(sch.consistent_histories(s, K).moment(k_moment) - target)
                for K in (4, 8, 16)]
        assert errs[1] <= 0.6 * errs[0]
        assert errs[2] <= 0.6 * errs[1]


def test_ch_negativity_instance():
    h0 = -2.0 * SX
    h1 = 2.0 * SZ
    psi = np.array([math.cos(1.1), np.exp(0.5j) * math.sin(1.1)])
    proto = DrivingProtocol(((0.0, h0), (2.0, h1)), 32)
    s = Scenario(dim=2, h_initial=h0, h_final=h1, evolution=proto, rho=projector(psi))
    dist = sch.consistent_histories(s, 6)
    assert dist.min_weight() < -0.25


# --- state-dependent scheme -----------------------------------------------------

def test_state_dependent_matches_tpm_on_diagonal_states():
    rng = np.random.default_rng(14)
    for _ in range(50):
        s = random_scenario(3, rng, diagonal_rho=True)
        assert sch.state_dependent(s).tv_distance(sch.tpm(s)[0]) <= 1e-9


def test_state_dependent_mean_and_nonconvexity():
    rng = np.random.default_rng(15)
    for _ in range(100):
        s = random_scenario(3, rng)
        assert abs(sch.state_dependent(s).mean() - mean_energy_change(s)) <= 1e-10
    rho1 = np.diag([1.0, 0.0]).astype(complex)
    rho2 = PLUS
    mk = lambda r: Scenario(dim=2, h_initial=H01, h_final=H01,
                            evolution=np.eye(2, dtype=complex), rho=r)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateRhoWarning)
        d1, d2 = sch.state_dependent(mk(rho1)), sch.state_dependent(mk(rho2))
    d_mix = sch.state_dependent(mk(0.5 * rho1 + 0.5 * rho2))
    blend = sch.WorkDistribution.from_atoms(
        np.concatenate([d1.works, d2.works]),
        np.concatenate([0.5 * d1.weights, 0.5 * d2.weights]),
        sch.SchemeId.STATE_DEPENDENT, True)
    assert d_mix.tv_distance(blend) > 1e-3


def test_state_dependent_warns_on_degenerate_rho():
    s = Scenario(dim=2, h_initial=SZ, h_final=SZ, evolution=HADAMARD,
                 rho=np.eye(2, dtype=complex) / 2.0)
    with pytest.warns(DegenerateRhoWarning):
        sch.state_dependent(s)


# --- sub-ensemble ----------------------------------------------------------------

def test_sub_ensemble_energy_eigenstate_decomposition():
    h = np.diag([0.0, 1.0]).astype(complex)
    rho = np.diag([0.4, 0.6]).astype(complex)
    s = Scenario(dim=2, h_initial=h, h_final=h, evolution=np.eye(2, dtype=complex), rho=rho)
    dist = sch.sub_ensemble(s, sch.spectral_pure_decomposition(rho))
    assert dist.atoms == [(0.0, pytest.approx(1.0))]


def test_sub_ensemble_mean_is_decomposition_independent():
    rng = np.random.default_rng(16)
    for trial in range(50):
        s = random_scenario(3, rng)
        target = mean_energy_change(s)
        spec = sch.sub_ensemble(s, sch.spectral_pure_decomposition(s.rho))
        rand = sch.sub_ensemble(s, sch.random_pure_decomposition(s.rho, 5, trial))
        assert abs(spec.mean() - target) <= 1e-10
        assert abs(rand.mean() - target) <= 1e-10


def test_sub_ensemble_distributions_depend_on_decomposition():
    u = np.array([[math.cos(math.pi / 8), -math.sin(math.pi / 8)],
                  [math.sin(math.pi / 8), math.cos(math.pi / 8)]], dtype=complex)
    s = Scenario(dim=2, h_initial=SZ, h_final=SZ, evolution=u,
                 rho=np.eye(2, dtype=complex) / 2.0)
    dz = sch.sub_ensemble(s, sch.PureDecomposition(
        np.array([0.5, 0.5]), np.eye(2, dtype=complex)))
    dx = sch.sub_ensemble(s, sch.PureDecomposition(
        np.array([0.5, 0.5]), np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)))
    assert dz.tv_distance(dx) > 0.5


def test_sub_ensemble_rejects_wrong_decomposition():
    s = Scenario(dim=2, h_initial=SZ, h_final=SZ, evolution=HADAMARD, rho=PLUS)
    bad = sch.PureDecomposition(np.array([1.0]), np.array([[1.0, 0.0]], dtype=complex))
    with pytest.raises(DecompositionMismatch):
        sch.sub_ensemble(s, bad)


def test_random_decomposition_reconstructs():
    rng = np.random.default_rng(18)
    for trial in range(20):
        rho = random_density_np(3, rng)
        decomp = sch.random_pure_decomposition(rho, 6, trial)
        assert max_abs(decomp.reconstruct() - rho) <= 1e-12


# --- collective two-copy ----------------------------------------------------------

def test_collective_lambda_zero_is_tpm(hadamard_scenario):
    _, dist = sch.collective_two_copy(hadamard_scenario, 0.0)
    assert dist.tv_distance(sch.tpm(hadamard_scenario)[0]) <= 1e-12


def test_collective_diagonal_unitary_reproduces_tpm_any_lambda():
    u = np.diag([1.0, np.exp(1.3j)]).astype(complex)
    s = Scenario(dim=2, h_initial=SZ, h_final=np.diag([0.2, 1.9]).astype(complex),
                 evolution=u, rho=PLUS)
    assert sch.lambda_max(s) == 1.0
    for lam in (0.0, 0.37, 1.0):
        _, dist = sch.collective_two_copy(s, lam)
        assert dist.tv_distance(sch.tpm(s)[0]) <= 1e-12


def test_lambda_max_is_positivity_boundary():
    rng = np.random.default_rng(19)
    found_interior = 0
    for _ in range(40):
        s = random_scenario(2, rng)
        lam = sch.lambda_max(s)
        assert lam >= 0.0
        sch.collective_two_copy(s, max(lam - 1e-6, 0.0))[0].check(eig_tol=1e-8)
        if lam < 1.0:
            found_interior += 1
            with pytest.raises(NotPositive):
                sch.collective_two_copy(s, min(1.0, lam + 1e-3))
    assert found_interior > 0


def test_collective_hadamard_improves_first_law_gap(hadamard_scenario):
    target = mean_energy_change(hadamard_scenario)
    gap_tpm = abs(sch.tpm(hadamard_scenario)[0].mean() - target)
    povm, dist = sch.collective_two_copy(hadamard_scenario, "auto")
    povm.check()
    assert len(povm.elements) == 4
    assert abs(dist.mean() - target) < gap_tpm
    assert gap_tpm == pytest.approx(1.0, abs=1e-12)


def test_collective_povm_on_two_copies_completeness():
    rng = np.random.default_rng(22)
    s = random_scenario(3, rng)
    povm, _ = sch.collective_two_copy(s, "auto")
    total = sum(op for _, op in povm.elements)
    assert max_abs(total - np.eye(9)) <= 1e-10


def test_collective_any_lambda_matches_tpm_on_diagonal_states():
    rng = np.random.default_rng(23)
    for _ in range(20):
        s = random_scenario(3, rng, diagonal_rho=True)
        for lam in (0.0, 0.5 * sch.lambda_max(s), sch.lambda_max(s)):
            _, dist = sch.collective_two_copy(s, lam)
            assert dist.tv_distance(sch.tpm(s)[0]) <= 1e-9


# --- shared invariants ---------------------------------------------------------------

def test_linear_schemes_are_exactly_convex():
    rng = np.random.default_rng(24)
    mk = None
    for _ in range(25):
        base = random_scenario(3, rng)
        rho1, rho2 = random_density_np(3, rng), random_density_np(3, rng)
        lam = float(rng.uniform(0.1, 0.9))
        scenarios = [Scenario(dim=3, h_initial=base.h_initial, h_final=base.h_final,
                              evolution=base.evolution, rho=r)
                     for r in (lam * rho1 + (1 - lam) * rho2, rho1, rho2)]
        for fn in (lambda s: sch.tpm(s)[0],
                   lambda s: sch.work_operator(s)[1],
                   sch.fcs_quasiprob,
                   lambda s: sch.margenau_hill(s)[1]):
            d_mix, d1, d2 = (fn(s) for s in scenarios)
            blend = sch.WorkDistribution.from_atoms(
                np.concatenate([d1.works, d2.works]),
                np.concatenate([lam * d1.weights, (1 - lam) * d2.weights]),
                d_mix.scheme, True)
            assert d_mix.tv_distance(blend) <= 1e-10


def test_every_scheme_normalizes_to_one():
    rng = np.random.default_rng(25)
    s = random_scenario(3, rng)
    dists = [
        sch.tpm(s)[0],
        sch.work_operator(s)[1],
        sch.fcs_quasiprob(s),
        sch.margenau_hill(s)[1],
        sch.state_dependent(s),
        sch.sub_ensemble(s, sch.spectral_pure_decomposition(s.rho)),
        sch.collective_two_copy(s, "auto")[1],
    ]
    ramp = make_ramp(PLUS)
    dists.append(sch.consistent_histories(ramp, 6))
    for dist in dists:
        assert abs(float(dist.weights.sum()) - 1.0) <= 1e-9
