import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qworklab import linalg as la
from qworklab.errors import DimensionMismatch, NonConvergence, ValidationError

from conftest import haar_unitary_np, random_density_np, random_hermitian_np


# --- eigensolver -----------------------------------------------------------

def test_eig_diagonal_is_identity_basis():
    dec = la.eig_hermitian(np.diag([0.0, 1.0]).astype(complex))
    np.testing.assert_array_equal(dec.eigenvalues, [0.0, 1.0])
    np.testing.assert_array_equal(dec.eigenvectors, np.eye(2))


def test_eig_pauli_x():
    dec = la.eig_hermitian(np.array([[0, 1], [1, 0]], dtype=complex))
    np.testing.assert_allclose(dec.eigenvalues, [-1.0, 1.0], atol=1e-12)


def test_eig_rank_one():
    dec = la.eig_hermitian(np.ones((2, 2), dtype=complex))
    np.testing.assert_allclose(dec.eigenvalues, [0.0, 2.0], atol=1e-12)


@given(dim=st.integers(2, 8), seed=st.integers(0, 10_000))
@settings(max_examples=60, deadline=None)
def test_eig_reconstruction_property(dim, seed):
    rng = np.random.default_rng(seed)
    h = random_hermitian_np(dim, rng)
    dec = la.eig_hermitian(h)
    assert la.max_abs(dec.reconstruct() - h) <= 1e-8
    gram = dec.eigenvectors.conj().T @ dec.eigenvectors
    assert la.max_abs(gram - np.eye(dim)) <= 1e-9
    assert np.all(np.diff(dec.eigenvalues) >= 0)


def test_eig_matches_numpy_up_to_dim_64():
    rng = np.random.default_rng(7)
    for dim in (3, 16, 64):
        h = random_hermitian_np(dim, rng)
        dec = la.eig_hermitian(h)
        np.testing.assert_allclose(dec.eigenvalues, np.linalg.eigvalsh(h), atol=1e-9)


def test_eig_deterministic():
    rng = np.random.default_rng(3)
    h = random_hermitian_np(5, rng)
    a = la.eig_hermitian(h)
    la._EIG_CACHE.clear()
    b = la.eig_hermitian(h)
    assert np.array_equal(a.eigenvalues, b.eigenvalues)
    assert np.array_equal(a.eigenvectors, b.eigenvectors)


def test_eig_nonconvergence_guard():
    rng = np.random.default_rng(0)
    h = random_hermitian_np(6, rng)
    with pytest.raises(NonConvergence):
        la.eig_hermitian(h, max_sweeps=0)


def test_eig_rejects_non_hermitian():
    with pytest.raises(ValidationError):
        la.eig_hermitian(np.array([[0, 1], [0, 0]], dtype=complex))
    with pytest.raises(ValidationError):
        la.eig_hermitian(np.array([[np.nan, 0], [0, 0]], dtype=complex))


def test_projectors_cluster_degenerate_eigenvalues():
    h = np.diag([1.0, 1.0 + 1e-12, 3.0]).astype(complex)
    projs = la.eig_hermitian(h).projectors()
    assert len(projs) == 2
    assert abs(np.trace(projs[0][1]).real - 2.0) < 1e-12


# --- tensor / partial trace --------------------------------------------------

def test_tensor_identities():
    np.testing.assert_array_equal(la.tensor(np.eye(2), np.eye(2)), np.eye(4))
    got = la.tensor(np.diag([1.0, 2.0]), np.diag([3.0, 4.0]))
    np.testing.assert_array_equal(got, np.diag([3.0, 4.0, 6.0, 8.0]))


def test_tensor_of_unitaries_is_unitary():
    rng = np.random.default_rng(11)
    u = la.tensor(haar_unitary_np(2, rng), haar_unitary_np(3, rng))
    assert la.max_abs(u.conj().T @ u - np.eye(6)) <= la.UNITARITY_TOL


def brute_partial_trace(m, da, db, keep):
    m = m.reshape(da, db, da, db)
    if keep == "A":
        out = np.zeros((da, da), dtype=complex)
        for i in range(da):
            for j in range(da):
                for b in range(db):
                    out[i, j] += m[i, b, j, b]
    else:
        out = np.zeros((db, db), dtype=complex)
        for i in range(db):
            for j in range(db):
                for a in range(da):
                    out[i, j] += m[a, i, a, j]
    return out


@given(da=st.integers(2, 4), db=st.integers(2, 4), seed=st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_partial_trace_against_brute_force(da, db, seed):
    rng = np.random.default_rng(seed)
    m = rng.standard_normal((da * db, da * db)) + 1j * rng.standard_normal((da * db, da * db))
    for keep in ("A", "B"):
        got = la.partial_trace(m, (da, db), keep)
        np.testing.assert_allclose(got, brute_partial_trace(m, da, db, keep), atol=1e-12)
        assert abs(np.trace(got) - np.trace(m)) <= 1e-12


def test_partial_trace_product_state():
    rng = np.random.default_rng(4)
    rho_a = random_density_np(2, rng)
    rho_b = random_density_np(3, rng)
    got = la.partial_trace(la.tensor(rho_a, rho_b), (2, 3), "A")
    np.testing.assert_allclose(got, rho_a, atol=1e-12)
    got = la.partial_trace(np.eye(4) / 4.0, (2, 2), "A")
    np.testing.assert_allclose(got, np.eye(2) / 2.0, atol=1e-15)


def test_partial_trace_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        la.partial_trace(np.eye(5), (2, 2), "A")


# --- dephasing ----------------------------------------------------------------

def test_dephase_fixes_diagonal_states():
    h = np.diag([0.0, 1.0, 2.5]).astype(complex)
    rho = np.diag([0.2, 0.3, 0.5]).astype(complex)
    np.testing.assert_allclose(la.dephase(rho, la.eig_hermitian(h)), rho, atol=1e-14)


def test_dephase_plus_state():
    basis = la.eig_hermitian(np.diag([0.0, 1.0]).astype(complex))
    plus = np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex)
    np.testing.assert_allclose(la.dephase(plus, basis), np.eye(2) / 2.0, atol=1e-14)


def test_dephase_preserves_populations():
    rng = np.random.default_rng(9)
    for _ in range(30):
        h = random_hermitian_np(4, rng)
        rho = random_density_np(4, rng)
        dec = la.eig_hermitian(h)
        out = la.dephase(rho, dec)
        vecs = np.linalg.eigh(h)[1]
        before = np.diag(vecs.conj().T @ rho @ vecs).real
        after = np.diag(vecs.conj().T @ out @ vecs).real
        np.testing.assert_allclose(np.sort(before), np.sort(after), atol=1e-10)


# --- entropies ------------------------------------------------------------------

def test_entropy_pure_and_mixed():
    assert la.von_neumann_entropy(np.diag([1.0, 0.0]).astype(complex)) <= 1e-12
    for d in (2, 3, 5):
        s = la.von_neumann_entropy(np.eye(d, dtype=complex) / d)
        assert abs(s - math.log(d)) <= 1e-12
    expected = -(0.25 * math.log(0.25) + 0.75 * math.log(0.75))
    assert abs(la.von_neumann_entropy(np.diag([0.25, 0.75]).astype(complex)) - expected) <= 1e-12


def test_entropy_unitary_invariance():
    rng = np.random.default_rng(21)
    for _ in range(50):
        rho = random_density_np(3, rng)
        u = haar_unitary_np(3, rng)
        s1 = la.von_neumann_entropy(rho)
        s2 = la.von_neumann_entropy(u @ rho @ u.conj().T)
        assert abs(s1 - s2) <= 1e-10


def test_relative_entropy_examples():
    rho = random_density_np(3, np.random.default_rng(5))
    assert abs(la.relative_entropy(rho, rho)) <= 1e-10
    ket0 = np.diag([1.0, 0.0]).astype(complex)
    assert abs(la.relative_entropy(ket0, np.eye(2) / 2.0) - math.log(2)) <= 1e-12
    assert la.relative_entropy(ket0, np.diag([0.0, 1.0]).astype(complex)) == math.inf


def test_relative_entropy_nonnegative_1000_pairs():
    rng = np.random.default_rng(17)
    worst = 0.0
    for _ in range(1000):
        dim = int(rng.integers(2, 5))
        a = random_density_np(dim, rng)
        b = random_density_np(dim, rng)
        worst = min(worst, la.relative_entropy(a, b))
    assert worst >= -1e-10


# --- validated random sampling ---------------------------------------------------

def test_random_unitary_invariant_1000_seeds():
    for seed in range(1000):
        u = la.random_unitary(2, seed)
        assert la.max_abs(u.conj().T @ u - np.eye(2)) <= la.UNITARITY_TOL


def test_random_density_invariant_1000_seeds():
    for seed in range(1000):
        rho = la.random_density(3, seed)
        assert abs(np.trace(rho).real - 1.0) <= 1e-10
        assert np.linalg.eigvalsh(rho)[0] >= -1e-10


def test_random_reproducibility():
    for fn in (la.random_unitary, la.random_density, la.random_pure):
        a = fn(4, 123)
        b = fn(4, 123)
        assert np.array_equal(a, b)


def test_random_requires_dim_two():
    with pytest.raises(ValueError):
        la.random_unitary(1, 0)


# --- validators --------------------------------------------------------------------

def test_density_validator_rejects_bad_trace_and_negativity():
    with pytest.raises(ValidationError):
        la.require_density(np.diag([0.45, 0.45]).astype(complex))
    with pytest.raises(ValidationError):
        la.require_density(np.diag([1.5, -0.5]).astype(complex))


def test_unitary_validator():
    with pytest.raises(ValidationError):
        la.require_unitary(np.diag([1.0, 0.5]).astype(complex))
