import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qsolchain.errors import DimensionMismatch, NotHermitian, NotPSD
from qsolchain.numcore import (as_density_matrix, evolve_unitary, hermitian_eigensystem,
                               partial_trace, psd_sqrt, tensor_product)


def random_hermitian(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return a + a.conj().T


def random_density(rng, n, rank=None):
    a = rng.normal(size=(n, rank or n)) + 1j * rng.normal(size=(n, rank or n))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def test_identity_and_diagonal():
    evals, v = hermitian_eigensystem(np.eye(4))
    assert np.allclose(evals, 1)
    assert np.allclose(v.conj().T @ v, np.eye(4))
    evals, _ = hermitian_eigensystem(np.diag([3.0, -1.0]))
    assert np.allclose(evals, [-1, 3])


def test_pauli_x_by_hand():
    evals, v = hermitian_eigensystem(np.array([[0, 1], [1, 0]]))
    assert np.allclose(evals, [-1, 1], atol=1e-15)
    # columns are (1, -1)/sqrt2 and (1, 1)/sqrt2 up to phase
    assert abs(abs(np.vdot(v[:, 0], [1, -1])) / np.sqrt(2) - 1) < 1e-14
    assert abs(abs(np.vdot(v[:, 1], [1, 1])) / np.sqrt(2) - 1) < 1e-14


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 64), st.integers(0, 2**32 - 1))
def test_reconstruction(n, seed):
    rng = np.random.default_rng(seed)
    m = random_hermitian(rng, n)
    evals, v = hermitian_eigensystem(m)
    scale = np.abs(m).max()
    assert np.abs((v * evals) @ v.conj().T - m).max() <= 1e-9 * scale
    assert np.abs(v.conj().T @ v - np.eye(n)).max() <= 1e-10
    assert np.all(np.diff(evals) >= 0)


def test_against_lapack():
    rng = np.random.default_rng(1)
    m = random_hermitian(rng, 40)
    assert np.allclose(hermitian_eigensystem(m)[0], np.linalg.eigvalsh(m), atol=1e-11)


def test_not_hermitian():
    with pytest.raises(NotHermitian):
        hermitian_eigensystem(np.array([[0, 1], [0, 0]]))
    with pytest.raises(DimensionMismatch):
        hermitian_eigensystem(np.zeros((2, 3)))


def test_evolve_trivial_cases():
    assert np.allclose(evolve_unitary(np.zeros((3, 3)), 1.7), np.eye(3))
    assert np.allclose(evolve_unitary(np.diag([1.0, -1.0]), np.pi), -np.eye(2), atol=1e-15)


def test_evolve_matches_series():
    rng = np.random.default_rng(7)
    h = random_hermitian(rng, 6)
    term = np.eye(6, dtype=complex)
    series = term.copy()
    for k in range(1, 60):
        term = term @ (-1j * 0.37 * h) / k
        series += term
    assert np.abs(evolve_unitary(h, 0.37) - series).max() <= 1e-9


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 12), st.floats(-5, 5), st.floats(-5, 5), st.integers(0, 2**32 - 1))
def test_group_property_and_unitarity(n, t1, t2, seed):
    h = random_hermitian(np.random.default_rng(seed), n)
    u1, u2 = evolve_unitary(h, t1), evolve_unitary(h, t2)
    assert np.abs(u1 @ u2 - evolve_unitary(h, t1 + t2)).max() <= 1e-9
    assert np.abs(u1.conj().T @ u1 - np.eye(n)).max() <= 1e-10


def test_psd_sqrt_examples():
    assert np.allclose(psd_sqrt(np.diag([0.5, 0.5])), np.eye(2) / np.sqrt(2))
    psi = np.array([1, 1j, 0]) / np.sqrt(2)
    proj = np.outer(psi, psi.conj())
    assert np.allclose(psd_sqrt(proj), proj, atol=1e-12)
    assert np.allclose(psd_sqrt(np.diag([0.64, 0.36])), np.diag([0.8, 0.6]), atol=1e-14)


def test_psd_sqrt_squares_back():
    rho = random_density(np.random.default_rng(3), 8, rank=3)
    r = psd_sqrt(rho)
    assert np.abs(r @ r - rho).max() <= 1e-9
    assert np.abs(r - r.conj().T).max() <= 1e-12


def test_psd_sqrt_rejects_negative():
    with pytest.raises(NotPSD):
        psd_sqrt(np.diag([1.1, -0.1]))
    # tiny round-off negatives are clipped
    psd_sqrt(np.diag([1.0, -1e-12]))


def test_partial_trace_examples():
    rng = np.random.default_rng(5)
    ra, rb = random_density(rng, 2), random_density(rng, 3)
    assert np.abs(partial_trace(np.kron(ra, rb), [2, 3], [0]) - ra).max() <= 1e-12
    assert np.abs(partial_trace(np.kron(ra, rb), [2, 3], [1]) - rb).max() <= 1e-12
    phi = np.array([1, 0, 0, 1]) / np.sqrt(2)
    assert np.allclose(partial_trace(np.outer(phi, phi), [2, 2], [0]), np.eye(2) / 2)
    rho = random_density(rng, 12)
    assert np.allclose(partial_trace(rho, [2, 3, 2], [0, 1, 2]), rho)


def test_partial_trace_middle_by_summation():
    rho = random_density(np.random.default_rng(9), 12)
    r = rho.reshape(2, 3, 2, 2, 3, 2)
    expect = np.zeros((4, 4), dtype=complex)
    for a in range(2):
        for b in range(2):
            for a2 in range(2):
                for b2 in range(2):
                    expect[2 * a + b, 2 * a2 + b2] = sum(r[a, s, b, a2, s, b2] for s in range(3))
    assert np.abs(partial_trace(rho, [2, 3, 2], [0, 2]) - expect).max() <= 1e-14


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_partial_trace_properties(da, db, seed):
    rng = np.random.default_rng(seed)
    a = random_hermitian(rng, da)
    b = random_hermitian(rng, db)
    ab = np.kron(a, b)
    assert np.abs(partial_trace(ab, [da, db], [0]) - np.trace(b) * a).max() <= 1e-12 * max(1, np.abs(ab).max())
    assert np.abs(partial_trace(ab, [da, db], [1]) - np.trace(a) * b).max() <= 1e-12 * max(1, np.abs(ab).max())
    rho = random_density(rng, da * db)
    assert abs(np.trace(partial_trace(rho, [da, db], [1])) - 1) <= 1e-12


def test_partial_trace_errors():
    with pytest.raises(DimensionMismatch):
        partial_trace(np.eye(4), [2, 3], [0])
    with pytest.raises(DimensionMismatch):
        partial_trace(np.eye(4), [2, 2], [])
    with pytest.raises(DimensionMismatch):
        partial_trace(np.eye(4), [2, 2], [2])


def test_tensor_product():
    assert np.allclose(tensor_product(np.eye(2), np.eye(3)), np.eye(6))
    assert np.allclose(tensor_product(np.diag([1, 2]), np.diag([3, 4])), np.diag([3, 4, 6, 8]))
    a = np.arange(6).reshape(2, 3)
    assert np.allclose(tensor_product(a, np.array([[1]])), a)
    b, c = np.eye(2) * 2, np.array([[0, 1], [1, 0]])
    assert np.allclose(tensor_product(tensor_product(a, b), c), tensor_product(a, tensor_product(b, c)))
    # index convention: (A x B)[i rB + k, j cB + l] = A[i, j] B[k, l]
    x = np.arange(4).reshape(2, 2) + 1
    y = np.arange(6).reshape(2, 3) + 1
    t = tensor_product(x, y)
    assert t[1 * 2 + 1, 0 * 3 + 2] == x[1, 0] * y[1, 2]


def test_as_density_matrix():
    rho = random_density(np.random.default_rng(2), 4)
    assert np.allclose(as_density_matrix(rho), rho)
    assert np.allclose(np.trace(as_density_matrix(3 * rho, normalize=True)), 1)
    with pytest.raises(NotPSD):
        as_density_matrix(2 * rho)
    with pytest.raises(NotPSD):
        as_density_matrix(np.diag([1.2, -0.2]))
