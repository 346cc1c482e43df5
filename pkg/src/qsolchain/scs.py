"""Spin coherent states of a single spin S.

Vectors over the spin space are indexed by ``i = m + S`` so that index 0 is
``m = -S`` and the last index is ``m = S``.  The coherent state ``|Omega>``
has components ``<m|Omega>`` carrying the phase ``exp(i (S - m) phi)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvalidGridSize


@dataclass(frozen=True)
class SphereDirection:
    """A point on the unit sphere; theta is clamped, phi reduced mod 2 pi."""

    theta: float
    phi: float

    def __post_init__(self):
        theta = min(max(float(self.theta), 0.0), math.pi)
        phi = float(self.phi) % (2.0 * math.pi)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "phi", phi)

    def unit_vector(self):
        st = math.sin(self.theta)
        return np.array([st * math.cos(self.phi), st * math.sin(self.phi), math.cos(self.theta)])

    @classmethod
    def from_vector(cls, v):
        x, y, z = (float(c) for c in v)
        r = math.sqrt(x * x + y * y + z * z)
        return cls(math.acos(max(-1.0, min(1.0, z / r))), math.atan2(y, x))


@dataclass(frozen=True)
class SpinMagnitude:
    """Spin quantum number stored as the integer ``two_s = 2S``."""

    two_s: int

    def __post_init__(self):
        if int(self.two_s) != self.two_s or self.two_s < 1:
            raise DomainError(f"two_s must be a positive integer, got {self.two_s}")
        object.__setattr__(self, "two_s", int(self.two_s))

    @property
    def s(self):
        return self.two_s / 2

    @property
    def dim(self):
        return self.two_s + 1

    @property
    def m_values(self):
        return np.arange(self.dim) - self.s


def spin_matrices(spin):
    """Return ``(Sx, Sy, Sz)`` in the ascending-m basis."""
    s = spin.s
    m = spin.m_values
    # S+ |m> = sqrt(S(S+1) - m(m+1)) |m+1>
    up = np.sqrt(s * (s + 1) - m[:-1] * (m[:-1] + 1))
    splus = np.diag(up, k=-1).astype(np.complex128)
    sminus = splus.conj().T
    sx = 0.5 * (splus + sminus)
    sy = -0.5j * (splus - sminus)
    sz = np.diag(m).astype(np.complex128)
    return sx, sy, sz


def _sqrt_binomials(two_s):
    k = np.arange(two_s + 1)
    lg = np.array([math.lgamma(two_s + 1) - math.lgamma(i + 1) - math.lgamma(two_s - i + 1)
                   for i in k])
    return np.exp(0.5 * lg)


def amplitude_matrix(theta, phi, spin):
    """Vectorised ``<m|Omega>`` for arrays of angles; shape ``theta.shape + (dim,)``."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    two_s = spin.two_s
    i = np.arange(two_s + 1)
    c = np.cos(0.5 * theta)[..., None]
    s = np.sin(0.5 * theta)[..., None]
    mag = _sqrt_binomials(two_s) * c ** i * s ** (two_s - i)
    return mag * np.exp(1j * (two_s - i) * phi[..., None])


def scs_amplitudes(omega, spin):
    return amplitude_matrix(omega.theta, omega.phi, spin)


def overlap_base(theta_a, phi_a, theta_b, phi_b):
    """``<Omega_a|Omega_b>`` for spin 1/2; the spin-S overlap is its power 2S."""
    ca, sa = np.cos(0.5 * np.asarray(theta_a)), np.sin(0.5 * np.asarray(theta_a))
    cb, sb = np.cos(0.5 * np.asarray(theta_b)), np.sin(0.5 * np.asarray(theta_b))
    return cb * ca + sb * sa * np.exp(1j * (np.asarray(phi_b) - np.asarray(phi_a)))


def scs_overlap(omega_a, omega_b, spin):
    """``<Omega_a|Omega_b>``: bra on the first argument."""
    base = overlap_base(omega_a.theta, omega_a.phi, omega_b.theta, omega_b.phi)
    return complex(base ** spin.two_s)


def scs_expectation(omega, spin):
    return spin.s * omega.unit_vector()


@dataclass(frozen=True)
class QuadratureGrid:
    """Product Gauss-Legendre (in cos theta) x uniform-phi sphere grid.

    Nodes are stored theta-major; weights sum to ``2S + 1`` so that
    ``sum_k w_k |Omega_k><Omega_k|`` approximates the identity.
    """

    theta: np.ndarray
    phi: np.ndarray
    weights: np.ndarray
    spin: SpinMagnitude
    n_theta: int
    n_phi: int

    def __len__(self):
        return self.theta.size

    @property
    def nodes(self):
        return [(SphereDirection(t, p), w) for t, p, w in zip(self.theta, self.phi, self.weights)]

    def amplitudes(self):
        return amplitude_matrix(self.theta, self.phi, self.spin)

    def with_spin(self, spin):
        return build_quadrature(self.n_theta, self.n_phi, spin)


def build_quadrature(n_theta, n_phi, spin):
    if int(n_theta) < 2 or int(n_phi) < 2:
        raise InvalidGridSize(f"grid {n_theta}x{n_phi}: both sizes must be >= 2")
    n_theta, n_phi = int(n_theta), int(n_phi)
    x, wx = np.polynomial.legendre.leggauss(n_theta)
    x, wx = x[::-1], wx[::-1]  # ascending theta
    phis = 2.0 * np.pi * np.arange(n_phi) / n_phi
    theta = np.repeat(np.arccos(x), n_phi)
    phi = np.tile(phis, n_theta)
    weights = spin.dim * np.repeat(wx, n_phi) * (2.0 * np.pi / n_phi) / (4.0 * np.pi)
    return QuadratureGrid(theta, phi, weights, spin, n_theta, n_phi)


def identity_residual(grid):
    """Max-entry deviation of ``sum_k w_k |Omega_k><Omega_k|`` from the identity."""
    amp = grid.amplitudes()
    resolved = (amp.T * grid.weights) @ amp.conj()
    return float(np.abs(resolved - np.eye(grid.spin.dim)).max())
