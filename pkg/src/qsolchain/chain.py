"""Classical Heisenberg chain: Tjon-Wright solitons and equation-of-motion integration.

Units: lattice spacing d = 1 and JS = 1, so times are in (JS)^-1 and the
Zeeman field ``h`` is dimensionless.  Boundary conditions are periodic.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ChainTooShort, DomainError, NonFinite, NoSoliton, StepTooLarge
from .scs import SphereDirection

log = logging.getLogger(__name__)

MAX_DT = 0.05
DEFAULT_DT = 0.01
NORM_BOUND = 1.0 + 1e-9


@dataclass(frozen=True)
class ChainConfig:
    """Directions of the N classical unit spins, site index n = 0..N-1."""

    theta: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        theta = np.clip(np.asarray(self.theta, dtype=float), 0.0, np.pi)
        phi = np.mod(np.asarray(self.phi, dtype=float), 2.0 * np.pi)
        if theta.shape != phi.shape or theta.ndim != 1:
            raise ValueError("theta and phi must be 1-d arrays of equal length")
        theta.setflags(write=False)
        phi.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "phi", phi)

    def __len__(self):
        return self.theta.size

    def __getitem__(self, n):
        return SphereDirection(self.theta[n], self.phi[n])

    def vectors(self):
        st = np.sin(self.theta)
        return np.stack([st * np.cos(self.phi), st * np.sin(self.phi), np.cos(self.theta)], axis=1)

    @classmethod
    def from_vectors(cls, vec):
        vec = np.asarray(vec, dtype=float)
        return cls(*vectors_to_angles(vec))

    @classmethod
    def aligned(cls, n_sites):
        return cls(np.zeros(n_sites), np.zeros(n_sites))

    def replace_site(self, n, omega):
        theta = self.theta.copy()
        phi = self.phi.copy()
        theta[n] = omega.theta
        phi[n] = omega.phi
        return ChainConfig(theta, phi)

    def one_minus_cos(self):
        return 1.0 - np.cos(self.theta)


def vectors_to_angles(vec):
    """Polar angles of (..., 3) vectors; atan2 keeps theta accurate near the poles."""
    rho = np.hypot(vec[..., 0], vec[..., 1])
    return np.arctan2(rho, vec[..., 2]), np.mod(np.arctan2(vec[..., 1], vec[..., 0]), 2.0 * np.pi)


@dataclass(frozen=True)
class SolitonParams:
    beta: float
    h: float
    phi0: float = 0.0

    @property
    def length(self):
        return 1.0 / (math.sqrt(self.h) * math.sin(self.beta))

    @property
    def velocity(self):
        return 2.0 * math.sqrt(self.h) * math.cos(self.beta)

    @property
    def tau(self):
        return 1.0 / (self.h * math.sin(2.0 * self.beta))

    @property
    def energy(self):
        """Soliton energy in units of JS^2."""
        return 8.0 * math.sqrt(self.h) * math.sin(self.beta)

    @property
    def continuum_valid(self):
        return self.length >= 3.0


def soliton_derived_params(beta, h, phi0=0.0):
    if not 0.0 < beta < math.pi / 2:
        raise DomainError(f"beta={beta} outside (0, pi/2)")
    if not h > 0.0:
        raise DomainError(f"h={h} must be positive")
    params = SolitonParams(float(beta), float(h), float(phi0))
    if not params.continuum_valid:
        log.warning("soliton length %.3g < 3 sites: continuum profile is only approximate",
                    params.length)
    return params


def field_for_length(beta, length):
    """Zeeman field giving a soliton of the requested length at amplitude beta."""
    if not 0.0 < beta < math.pi / 2:
        raise DomainError(f"beta={beta} outside (0, pi/2)")
    if not length > 0.0:
        raise DomainError(f"soliton length {length} must be positive")
    return 1.0 / (length * math.sin(beta)) ** 2


def tw_soliton_config(params, t, n_sites, center_offset):
    """Tjon-Wright one-soliton profile sampled on the lattice.

    The soliton centre sits at ``center_offset + v t``; site displacements are
    taken as minimum images on the periodic chain.
    """
    if n_sites < 8 * params.length:
        raise ChainTooShort(f"N={n_sites} < 8 * soliton length ({params.length:.3g})")
    n = np.arange(n_sites, dtype=float)
    x = n - center_offset - params.velocity * t
    x = x - n_sites * np.round(x / n_sites)
    xi = x / params.length
    sb = math.sin(params.beta)
    theta = 2.0 * np.arcsin(sb / np.cosh(xi))
    phi = params.phi0 + xi / math.tan(params.beta) + np.arctan(math.tan(params.beta) * np.tanh(xi))
    return ChainConfig(theta, phi)


# -- integrator kernels -------------------------------------------------------
# Spins live in padded arrays of length N + 2 whose first and last entries are
# periodic images; the unsigned indices let LLVM vectorise the site loops.

@njit(cache=True, nogil=True, inline="always")
def _ghost(x, y, z, n):
    x[0] = x[n]
    y[0] = y[n]
    z[0] = z[n]
    x[n + 1] = x[1]
    y[n + 1] = y[1]
    z[n + 1] = z[1]


@njit(cache=True, nogil=True, fastmath={"contract"})
def _stage(tx, ty, tz, sx, sy, sz, ax, ay, az, ox, oy, oz, h, wacc, cnext, first, n):
    # k = t x (t[n+1] + t[n-1] + h z);  acc (+)= wacc k;  out = s + cnext k
    one = np.uint64(1)
    if first:
        for ii in range(1, n + 1):
            i = np.uint64(ii)
            bx = tx[i + one] + tx[i - one]
            by = ty[i + one] + ty[i - one]
            bz = tz[i + one] + tz[i - one] + h
            kx = ty[i] * bz - tz[i] * by
            ky = tz[i] * bx - tx[i] * bz
            kz = tx[i] * by - ty[i] * bx
            ax[i] = sx[i] + wacc * kx
            ay[i] = sy[i] + wacc * ky
            az[i] = sz[i] + wacc * kz
            ox[i] = sx[i] + cnext * kx
            oy[i] = sy[i] + cnext * ky
            oz[i] = sz[i] + cnext * kz
    else:
        for ii in range(1, n + 1):
            i = np.uint64(ii)
            bx = tx[i + one] + tx[i - one]
            by = ty[i + one] + ty[i - one]
            bz = tz[i + one] + tz[i - one] + h
            kx = ty[i] * bz - tz[i] * by
            ky = tz[i] * bx - tx[i] * bz
            kz = tx[i] * by - ty[i] * bx
            ax[i] += wacc * kx
            ay[i] += wacc * ky
            az[i] += wacc * kz
            ox[i] = sx[i] + cnext * kx
            oy[i] = sy[i] + cnext * ky
            oz[i] = sz[i] + cnext * kz


@njit(cache=True, nogil=True)
def _renormalize(sx, sy, sz, ax, ay, az, n, bound):
    bad = False
    for ii in range(1, n + 1):
        i = np.uint64(ii)
        x = ax[i]
        y = ay[i]
        z = az[i]
        bad = bad | (abs(x) > bound) | (abs(y) > bound) | (abs(z) > bound) | (x != x) | (y != y) | (z != z)
        r = 1.0 / math.sqrt(x * x + y * y + z * z)
        sx[i] = x * r
        sy[i] = y * r
        sz[i] = z * r
    return bad


@njit(cache=True, nogil=True)
def _rk4_steps(sx, sy, sz, h, dt, nsteps):
    """Advance padded unit vectors (length N + 2) in place; False on a bad step."""
    n = sx.size - 2
    ax = np.empty_like(sx)
    ay = np.empty_like(sx)
    az = np.empty_like(sx)
    px = np.empty_like(sx)
    py = np.empty_like(sx)
    pz = np.empty_like(sx)
    qx = np.empty_like(sx)
    qy = np.empty_like(sx)
    qz = np.empty_like(sx)
    h6 = dt / 6.0
    h3 = dt / 3.0
    h2 = 0.5 * dt
    for _ in range(nsteps):
        _ghost(sx, sy, sz, n)
        _stage(sx, sy, sz, sx, sy, sz, ax, ay, az, px, py, pz, h, h6, h2, True, n)
        _ghost(px, py, pz, n)
        _stage(px, py, pz, sx, sy, sz, ax, ay, az, qx, qy, qz, h, h3, h2, False, n)
        _ghost(qx, qy, qz, n)
        _stage(qx, qy, qz, sx, sy, sz, ax, ay, az, px, py, pz, h, h3, dt, False, n)
        _ghost(px, py, pz, n)
        _stage(px, py, pz, sx, sy, sz, ax, ay, az, qx, qy, qz, h, h6, 0.0, False, n)
        if _renormalize(sx, sy, sz, ax, ay, az, n, NORM_BOUND):
            return False
    return True


def _split_time(tau, dt):
    """Number of whole steps and leftover time needed to reach ``tau``."""
    k = tau / dt
    whole = int(round(k))
    if abs(k - whole) > 1e-9 * max(1.0, k):
        whole = int(math.floor(k))
    rest = tau - whole * dt
    if abs(rest) <= 1e-12 * max(1.0, tau):
        rest = 0.0
    return whole, rest


def check_step(dt):
    if not 0.0 < dt <= MAX_DT:
        raise StepTooLarge(f"dt={dt} must lie in (0, {MAX_DT}]")


def integrate_vectors(vec0, h, dt, times):
    """Integrate unit vectors ``vec0`` (N, 3) and sample at sorted ``times``.

    Returns an array of shape ``(len(times), N, 3)``.  A time that is not a
    multiple of ``dt`` is reached by one shorter step taken off the regular
    grid, so samples never depend on which other times were requested.
    """
    check_step(dt)
    times = np.asarray(times, dtype=float)
    if times.size and (np.any(np.diff(times) < 0) or times[0] < 0):
        raise ValueError("sample times must be sorted and non-negative")
    vec0 = np.asarray(vec0, dtype=float)
    n = vec0.shape[0]
    s = [np.empty(n + 2) for _ in range(3)]
    for c in range(3):
        s[c][1:n + 1] = vec0[:, c]
    out = np.empty((times.size, n, 3))
    done = 0
    for i, tau in enumerate(times):
        whole, rest = _split_time(tau, dt)
        if whole > done:
            if not _rk4_steps(s[0], s[1], s[2], h, dt, whole - done):
                raise NonFinite(f"spin component left [-1, 1] before t={tau}")
            done = whole
        if rest > 0.0:
            tmp = [a.copy() for a in s]
            if not _rk4_steps(tmp[0], tmp[1], tmp[2], h, rest, 1):
                raise NonFinite(f"spin component left [-1, 1] at t={tau}")
            out[i] = np.stack([a[1:n + 1] for a in tmp], axis=1)
        else:
            out[i] = np.stack([a[1:n + 1] for a in s], axis=1)
    return out


class Trajectory:
    """Lazily integrated chain trajectory, sampled on request.

    Calling the object with a time (or a sequence of times) in ``[0, t_span]``
    returns the corresponding :class:`ChainConfig` (or list of them).
    """

    def __init__(self, config, h, dt, t_span):
        check_step(dt)
        self.config = config
        self.h = float(h)
        self.dt = float(dt)
        self.t_span = float(t_span)

    def vectors(self, times):
        times = np.atleast_1d(np.asarray(times, dtype=float))
        if np.any(times < 0) or np.any(times > self.t_span + 1e-12):
            raise ValueError(f"sample times must lie in [0, {self.t_span}]")
        order = np.argsort(times, kind="stable")
        out = np.empty((times.size, len(self.config), 3))
        out[order] = integrate_vectors(self.config.vectors(), self.h, self.dt, times[order])
        return out

    def __call__(self, times):
        scalar = np.ndim(times) == 0
        configs = [ChainConfig.from_vectors(v) for v in self.vectors(times)]
        return configs[0] if scalar else configs


def integrate_eom(config, h, dt, t_span):
    return Trajectory(config, h, dt, t_span)


# -- diagnostics --------------------------------------------------------------

def chain_energy(config, h):
    """Energy per JS^2: ``-sum_n [s_n . s_{n+1} + h s_n^z]`` with periodic wrap."""
    s = config.vectors()
    return float(-(np.sum(s * np.roll(s, -1, axis=0)) + h * np.sum(s[:, 2])))


def total_sz(config):
    return float(np.sum(np.cos(config.theta)))


def soliton_center(config, min_height=0.05):
    """Fractional site of the maximum of ``1 - cos(theta)`` (parabolic fit)."""
    prof = config.one_minus_cos()
    k = int(np.argmax(prof))
    if prof[k] <= min_height:
        raise NoSoliton(f"profile maximum {prof[k]:.3g} <= {min_height}")
    n = prof.size
    ym, y0, yp = prof[(k - 1) % n], prof[k], prof[(k + 1) % n]
    denom = ym - 2.0 * y0 + yp
    shift = 0.0 if denom == 0.0 else 0.5 * (ym - yp) / denom
    return (k + shift) % n


def write_config_csv(path, config):
    """Snapshot CSV with columns ``n, theta, phi, one_minus_cos_theta``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "theta", "phi", "one_minus_cos_theta"])
        for n, (th, ph, d) in enumerate(zip(config.theta, config.phi, config.one_minus_cos())):
            w.writerow([n, f"{th:.17g}", f"{ph:.17g}", f"{d:.17g}"])
