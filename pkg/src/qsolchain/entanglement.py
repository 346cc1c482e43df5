"""Entanglement measures: von Neumann entropy and Wootters concurrence."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NotPSD
from .numcore import PSD_TOL, hermitian_eigensystem, psd_sqrt

# Eigenvalues this far below the largest are round-off: their square roots
# (~1e-8) would otherwise leak into mu for rank-deficient states.  Applied to
# both rho and sqrt(rho) rho~ sqrt(rho).
RANK_FLOOR = 1e-14

_SIGMA_YY = np.kron(np.array([[0, -1j], [1j, 0]]), np.array([[0, -1j], [1j, 0]]))


def von_neumann_entropy(rho, base_dim):
    """``-sum_i p_i log_base p_i`` over the spectrum of ``rho / Tr rho``, ``0 log 0 = 0``."""
    if base_dim < 2:
        raise ValueError(f"base_dim must be >= 2, got {base_dim}")
    evals, _ = hermitian_eigensystem(rho)
    if evals[0] < -PSD_TOL:
        raise NotPSD(f"smallest eigenvalue {evals[0]:.3e}")
    p = np.clip(evals, 0.0, None)
    p = p[p > 0.0] / p.sum()
    return max(0.0, float(-np.sum(p * np.log(p)) / math.log(base_dim)))


@dataclass(frozen=True)
class ConcurrenceResult:
    concurrence: float
    mu: tuple

    def __iter__(self):
        return iter((self.concurrence, self.mu))


def spin_flip(rho):
    return _SIGMA_YY @ np.asarray(rho).conj() @ _SIGMA_YY


def wootters_concurrence(rho):
    """Two-qubit concurrence from the spectrum of ``sqrt(rho) rho~ sqrt(rho)``.

    ``mu`` holds the square roots of that spectrum in descending order.
    """
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.shape != (4, 4):
        raise DimensionMismatch(f"concurrence needs a 4x4 matrix, got {rho.shape}")
    root = psd_sqrt(rho, RANK_FLOOR)
    r = root @ spin_flip(rho) @ root
    r = 0.5 * (r + r.conj().T)
    evals, _ = hermitian_eigensystem(r)
    if evals[0] < -PSD_TOL:
        raise NotPSD(f"sqrt(rho) rho~ sqrt(rho) eigenvalue {evals[0]:.3e}")
    cut = RANK_FLOOR * max(evals[-1], 0.0)
    mu = np.sqrt(np.where(evals > cut, evals, 0.0))[::-1]
    c = max(0.0, mu[0] - mu[1] - mu[2] - mu[3])
    return ConcurrenceResult(float(c), tuple(float(m) for m in mu))
