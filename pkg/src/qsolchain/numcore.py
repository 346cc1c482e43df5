"""Dense complex linear algebra used by every quantum-state computation.

Matrices are plain ``numpy`` arrays of ``complex128``.  Composite spaces are
always ordered with the leftmost factor as the slowest-varying index, i.e. the
same convention as ``numpy.kron``.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

from .errors import DimensionMismatch, NoConvergence, NotHermitian, NotPSD

HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-10
JACOBI_TOL = 1e-13
JACOBI_MAX_SWEEPS = 100


@njit(cache=True)
def _jacobi_sweeps(a, v, tol, max_sweeps):
    # In-place cyclic Jacobi on a Hermitian matrix; returns sweeps used or -1.
    n = a.shape[0]
    fro = 0.0
    for i in range(n):
        for j in range(n):
            fro += a[i, j].real ** 2 + a[i, j].imag ** 2
    fro = math.sqrt(fro)
    if fro == 0.0:
        return 0
    for sweep in range(max_sweeps + 1):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off += a[p, q].real ** 2 + a[p, q].imag ** 2
        if math.sqrt(2.0 * off) <= tol * fro:
            return sweep
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag == 0.0:
                    continue
                ph = apq / mag
                cph = ph.conjugate()
                app = a[p, p].real
                aqq = a[q, q].real
                theta = (aqq - app) / (2.0 * mag)
                if theta >= 0.0:
                    t = 1.0 / (theta + math.sqrt(theta * theta + 1.0))
                else:
                    t = -1.0 / (-theta + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                # A <- A U, V <- V U with U = diag(1, conj(ph)) . [[c, s], [-s, c]]
                for r in range(n):
                    arp = a[r, p]
                    arq = a[r, q]
                    a[r, p] = c * arp - s * cph * arq
                    a[r, q] = s * arp + c * cph * arq
                    vrp = v[r, p]
                    vrq = v[r, q]
                    v[r, p] = c * vrp - s * cph * vrq
                    v[r, q] = s * vrp + c * cph * vrq
                # A <- U^dagger A
                for r in range(n):
                    apr = a[p, r]
                    aqr = a[q, r]
                    a[p, r] = c * apr - s * ph * aqr
                    a[q, r] = s * apr + c * ph * aqr
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
    return -1


def check_hermitian(m, tol=HERMITIAN_TOL):
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NotHermitian("matrix has non-finite entries")
    scale = max(1.0, float(np.abs(m).max(initial=0.0)))
    dev = float(np.abs(m - m.conj().T).max(initial=0.0))
    if dev > tol * scale:
        raise NotHermitian(f"max |M - M^H| = {dev:.3e}")
    return m


def hermitian_eigensystem(m):
    """Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Returns ``(eigenvalues, V)`` with eigenvalues ascending and the
    eigenvectors as the columns of the unitary ``V``.
    """
    m = check_hermitian(m)
    a = 0.5 * (m + m.conj().T)
    v = np.eye(a.shape[0], dtype=np.complex128)
    sweeps = _jacobi_sweeps(a, v, JACOBI_TOL, JACOBI_MAX_SWEEPS)
    if sweeps < 0:
        raise NoConvergence(f"Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps")
    evals = a.diagonal().real.copy()
    order = np.argsort(evals, kind="stable")
    return evals[order], v[:, order]


class Propagator:
    """``exp(-i H t)`` for many ``t`` from a single eigen-decomposition."""

    def __init__(self, h):
        self.energies, self.vectors = hermitian_eigensystem(h)
        self._vinv = self.vectors.conj().T

    def __call__(self, t):
        phases = np.exp(-1j * self.energies * t)
        return (self.vectors * phases) @ self._vinv

    def apply(self, psi, times):
        """Evolve the state vector ``psi`` to every time in ``times``.

        Returns an array of shape ``(len(times), dim)``.
        """
        psi = np.asarray(psi, dtype=np.complex128)
        times = np.asarray(times, dtype=float).reshape(-1)
        phases = np.exp(-1j * np.outer(times, self.energies))
        out = (phases * (self._vinv @ psi)) @ self.vectors.T
        out[times == 0.0] = psi  # exact at zero elapsed time, not V V^dagger psi
        return out


def evolve_unitary(h, t):
    """Return ``U = exp(-i H t)`` for Hermitian ``H`` (times in (JS)^-1)."""
    return Propagator(h)(t)


def psd_sqrt(rho, rank_floor=0.0):
    """Principal square root of a PSD matrix.

    Eigenvalues below ``rank_floor * max_eigenvalue`` are treated as zero;
    with the default of 0 only negative round-off is clipped.
    """
    evals, v = hermitian_eigensystem(rho)
    if evals.size and evals[0] < -PSD_TOL:
        raise NotPSD(f"smallest eigenvalue {evals[0]:.3e}")
    cut = rank_floor * max(evals[-1], 0.0) if evals.size else 0.0
    root = np.sqrt(np.where(evals > cut, evals, 0.0))
    return (v * root) @ v.conj().T


def tensor_product(*ops):
    """Kronecker product, leftmost factor slowest."""
    out = np.ones((1, 1), dtype=np.complex128)
    for op in ops:
        out = np.kron(out, np.asarray(op, dtype=np.complex128))
    return out


def partial_trace(rho, dims, keep):
    """Trace out every subsystem whose index is not in ``keep``.

    ``dims`` lists the subsystem dimensions in tensor order; the result keeps
    the surviving subsystems in their original order.
    """
    rho = np.asarray(rho, dtype=np.complex128)
    dims = [int(d) for d in dims]
    keep = sorted(set(int(k) for k in keep))
    total = int(np.prod(dims))
    if rho.shape != (total, total):
        raise DimensionMismatch(f"dims {dims} do not match matrix shape {rho.shape}")
    if not keep or keep[0] < 0 or keep[-1] >= len(dims):
        raise DimensionMismatch(f"invalid subsystem selection {keep}")
    n = len(dims)
    letters = "abcdefghijklmnopqrstuvwxyz"
    if 2 * n > len(letters):
        raise DimensionMismatch("too many subsystems")
    row = list(letters[:n])
    col = list(letters[n:2 * n])
    for i in range(n):
        if i not in keep:
            col[i] = row[i]
    out = "".join(row[i] for i in keep) + "".join(col[i] for i in keep)
    reduced = np.einsum("".join(row) + "".join(col) + "->" + out,
                        rho.reshape(dims + dims))
    d = int(np.prod([dims[i] for i in keep]))
    return reduced.reshape(d, d)


def as_density_matrix(rho, normalize=False, tol=PSD_TOL):
    """Validate (and optionally renormalize) a density matrix.

    The result is exactly Hermitian.  Raises :class:`NotPSD` when an
    eigenvalue falls below ``-tol``.
    """
    rho = check_hermitian(rho)
    rho = 0.5 * (rho + rho.conj().T)
    tr = np.trace(rho).real
    if normalize:
        rho = rho / tr
    elif abs(tr - 1.0) > tol:
        raise NotPSD(f"trace {tr:.12f} differs from 1")
    evals, _ = hermitian_eigensystem(rho)
    if evals[0] < -tol:
        raise NotPSD(f"smallest eigenvalue {evals[0]:.3e}")
    return rho
