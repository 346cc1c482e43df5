"""Three-stage entanglement generation between two qubits through a spin chain.

Stage 1 couples qubit A to the chain spin at ``n_A`` and evolves the pair
exactly.  Stage 2 lets the chain carry the resulting superposition away, each
quadrature node of the spin-coherent-state expansion following its own
classical trajectory.  Stage 3 couples qubit B to the spin at ``n_B`` and
evolves (A, spin n_B, B) exactly; the A-B concurrence is read off.

Composite spaces are ordered qubit (x) spin for stage 1 and
A (x) S_B (x) B for stage 3.  The qubit basis is (up, down), i.e. sigma = +1
first.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np
from numba import njit

from . import chain
from .entanglement import von_neumann_entropy, wootters_concurrence
from .errors import (ChainTooShort, DimensionMismatch, DomainError, NonNormalizable,
                     NoSoliton, ValidationError)
from .numcore import Propagator, as_density_matrix, partial_trace, tensor_product
from .scs import (SpinMagnitude, amplitude_matrix, build_quadrature, scs_amplitudes,
                  spin_matrices)

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
SIGMA_VALUES = np.array([1.0, -1.0])

TIMESCALE_WARN = 0.1
SAMPLE_TOL = 1e-9
TIE_TOL = 1e-12
MIN_TRACE = 1e-12


def _qubit(value, key):
    v = np.asarray(value, dtype=np.complex128).ravel()
    if v.shape != (2,) or not np.all(np.isfinite(v)):
        raise ValidationError(key, "expected two finite complex amplitudes")
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise ValidationError(key, "qubit state must be nonzero")
    return tuple(complex(x) for x in v / norm)


@dataclass(frozen=True)
class ProtocolConfig:
    """Physical and numerical parameters of one run.

    Field names double as configuration-file keys.  ``h`` is derived from
    ``lambda_beta`` (default 10) when not given, and vice versa.  ``t0``
    defaults to ``n_A / v``; ``t1`` and ``t2`` stay ``None`` until resolved
    by :func:`select_t1` / :func:`select_t2`.
    """

    two_s: int = 10
    N: int = 256
    n_A: int = 40
    n_B: int = 200
    g: float = 1.0
    h_A: float = 0.25
    h_B: float = 0.25
    beta: float = math.pi / 4
    lambda_beta: float | None = None
    h: float | None = None
    phi0: float = 0.0
    t0: float | None = None
    t1: float | None = None
    t1_window: float = 50.0
    t1_step: float = 0.01
    t2: float | None = None
    t3_window: float = 20.0
    t3_step: float = 0.01
    dt: float = chain.DEFAULT_DT
    n_theta: int = 24
    n_phi: int = 24
    qubit_A: tuple = (1.0, 0.0)
    qubit_B: tuple = (1.0, 0.0)

    def __post_init__(self):
        def put(key, value):
            object.__setattr__(self, key, value)

        for key in ("two_s", "N", "n_A", "n_B", "n_theta", "n_phi"):
            value = getattr(self, key)
            if isinstance(value, bool) or int(value) != value:
                raise ValidationError(key, f"expected an integer, got {value!r}")
            put(key, int(value))
        for key in ("g", "h_A", "h_B", "beta", "lambda_beta", "phi0", "t1_window", "t1_step",
                    "t3_window", "t3_step", "dt", "h", "t0", "t1", "t2"):
            value = getattr(self, key)
            if value is None:
                continue
            value = float(value)
            if not math.isfinite(value):
                raise ValidationError(key, "must be finite")
            put(key, value)
        put("qubit_A", _qubit(self.qubit_A, "qubit_A"))
        put("qubit_B", _qubit(self.qubit_B, "qubit_B"))

        if self.two_s < 1:
            raise ValidationError("two_s", "must be >= 1")
        if not 0 <= self.n_A < self.N:
            raise ValidationError("n_A", f"must lie in [0, N={self.N})")
        if not self.n_A < self.n_B < self.N:
            raise ValidationError("n_B", f"must lie in (n_A={self.n_A}, N={self.N})")
        if self.g < 0.0:
            raise ValidationError("g", "must be >= 0")
        if not 0.0 < self.beta < math.pi / 2:
            raise ValidationError("beta", "must lie in (0, pi/2)")
        if self.lambda_beta is not None and not self.lambda_beta > 0.0:
            raise ValidationError("lambda_beta", "must be positive")
        if self.h is None:
            put("h", chain.field_for_length(self.beta, self.lambda_beta or 10.0))
        elif not self.h > 0.0:
            raise ValidationError("h", "must be positive")
        length = 1.0 / (math.sqrt(self.h) * math.sin(self.beta))
        if self.lambda_beta is not None and abs(length - self.lambda_beta) > 1e-9 * length:
            raise ValidationError("h", f"inconsistent with lambda_beta={self.lambda_beta}")
        put("lambda_beta", length)
        if self.N < 8 * self.lambda_beta:
            raise ValidationError("N", f"chain shorter than 8 soliton lengths ({self.lambda_beta:.4g})")
        if not 0.0 < self.dt <= chain.MAX_DT:
            raise ValidationError("dt", f"must lie in (0, {chain.MAX_DT}]")
        for key in ("t1_window", "t1_step", "t3_window", "t3_step"):
            if not getattr(self, key) > 0.0:
                raise ValidationError(key, "must be positive")
        for key in ("n_theta", "n_phi"):
            if getattr(self, key) < 2:
                raise ValidationError(key, "must be >= 2")
        if self.t0 is None:
            put("t0", self.n_A / self.soliton.velocity)
        if self.t1 is not None and self.t1 < self.t0:
            raise ValidationError("t1", f"must be >= t0={self.t0}")
        if self.t2 is not None:
            if self.t2 < (self.t1 if self.t1 is not None else self.t0):
                raise ValidationError("t2", "must be >= t1")

        ratio = self.timescale_ratio
        if ratio >= TIMESCALE_WARN:
            warnings.warn(f"qubit-spin dynamics not fast compared with the chain "
                          f"(ratio {ratio:.3g} >= {TIMESCALE_WARN})", RuntimeWarning, stacklevel=3)

    @property
    def spin(self):
        return SpinMagnitude(self.two_s)

    @property
    def soliton(self):
        return chain.SolitonParams(self.beta, self.h, self.phi0)

    @property
    def timescale_ratio(self):
        """``(J/g) h sin(2 beta)``; with JS = 1 this is ``h sin(2 beta) / (g S)``."""
        if self.g == 0.0:
            return math.inf
        return self.h * math.sin(2.0 * self.beta) / (self.g * self.spin.s)

    def grid(self, spin=None):
        return build_quadrature(self.n_theta, self.n_phi, spin or self.spin)

    def initial_chain(self):
        """Chain at ``t0``: soliton centred on ``n_A``, frozen until ``t1``."""
        try:
            return chain.tw_soliton_config(self.soliton, 0.0, self.N, self.n_A)
        except ChainTooShort as exc:
            raise ValidationError("N", str(exc)) from exc

    def initial_direction(self):
        return self.initial_chain()[self.n_A]

    def to_dict(self):
        d = asdict(self)
        for key in ("qubit_A", "qubit_B"):
            d[key] = [[z.real, z.imag] for z in d[key]]
        return d


def _scan_times(start, window, step):
    count = int(round(window / step))
    return start + step * np.arange(count + 1)


# -- stage 1 ------------------------------------------------------------------

def qubit_spin_hamiltonian(g, hq, spin):
    """``g S.sigma + hq sigma_z`` on qubit (x) spin."""
    sx, sy, sz = spin_matrices(spin)
    eye = np.eye(spin.dim)
    return g * (np.kron(SIGMA_X, sx) + np.kron(SIGMA_Y, sy) + np.kron(SIGMA_Z, sz)) \
        + hq * np.kron(SIGMA_Z, eye)


@dataclass(frozen=True)
class StageOneResult:
    c: np.ndarray  # (2, 2S+1): rows sigma = +1, -1; columns m ascending
    t: float

    @property
    def qubit_state(self):
        return self.c @ self.c.conj().T

    @property
    def entropy(self):
        return von_neumann_entropy(self.qubit_state, 2)

    def density_matrix(self):
        psi = self.c.ravel()
        return np.outer(psi, psi.conj())


def _stage1_psi0(cfg, spin, omega):
    omega = cfg.initial_direction() if omega is None else omega
    return np.kron(np.asarray(cfg.qubit_A), scs_amplitudes(omega, spin))


def stage1_scan(cfg, times, spin=None, omega=None):
    """Coefficients ``c`` at every absolute time; shape ``(T, 2, 2S+1)``.

    The chain spin starts in the coherent state ``omega``, by default the
    soliton direction at ``n_A``.
    """
    spin = spin or cfg.spin
    times = np.asarray(times, dtype=float)
    if np.any(times < cfg.t0):
        raise DomainError("stage-1 times must be >= t0")
    prop = Propagator(qubit_spin_hamiltonian(cfg.g, cfg.h_A, spin))
    return prop.apply(_stage1_psi0(cfg, spin, omega), times - cfg.t0).reshape(times.size, 2, spin.dim)


def stage1_evolve(cfg, t, spin=None, omega=None):
    return StageOneResult(stage1_scan(cfg, [t], spin, omega)[0], float(t))


def stage1_entropies(cfg, times, spin=None, omega=None):
    cs = stage1_scan(cfg, times, spin, omega)
    return np.array([von_neumann_entropy(c @ c.conj().T, 2) for c in cs])


def select_t1(cfg, window=None, step=None, spin=None, omega=None):
    """Scan time maximizing the qubit entropy; the earliest maximizer wins ties."""
    window = cfg.t1_window if window is None else window
    step = cfg.t1_step if step is None else step
    if not window > 0.0 or not step > 0.0:
        raise DomainError("window and step must be positive")
    times = _scan_times(cfg.t0, window, step)
    ent = stage1_entropies(cfg, times, spin, omega)
    best = int(np.flatnonzero(ent >= ent.max() - TIE_TOL)[0])
    return float(times[best])


@dataclass(frozen=True)
class FTable:
    grid: object
    values: np.ndarray  # (2, K)

    @property
    def weighted(self):
        return self.values * self.grid.weights

    def norm(self):
        return float(np.sum(self.grid.weights * np.sum(np.abs(self.values) ** 2, axis=0)))


def build_f_table(res, grid):
    """``f_sigma(Omega_k) = sum_m c[sigma, m] <Omega_k|m>``."""
    if res.c.shape[1] != grid.spin.dim:
        raise DimensionMismatch(f"stage-1 spin dim {res.c.shape[1]} != grid dim {grid.spin.dim}")
    return FTable(grid, res.c @ grid.amplitudes().conj().T)


def reconstruct_pair_state(ftable):
    """Qubit (x) spin state rebuilt from the coherent-state expansion."""
    psi = ftable.weighted @ ftable.grid.amplitudes()
    psi = psi.ravel()
    return np.outer(psi, psi.conj())


# -- stage 2: bundle of classical trajectories --------------------------------

@dataclass(frozen=True)
class BundleTrajectories:
    """Chain angles per quadrature node and sample; arrays are ``(K, T, N)``.

    Samples are stored by elapsed time since ``t1``; the trajectories do not
    depend on the spin magnitude, so one bundle serves every S.
    """

    node_theta: np.ndarray
    node_phi: np.ndarray
    elapsed: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    t1: float

    def rebased(self, t1):
        return replace(self, t1=float(t1))

    @property
    def times(self):
        return self.t1 + self.elapsed

    def sample_index(self, t):
        tau = t - self.t1
        i = int(np.argmin(np.abs(self.elapsed - tau))) if self.elapsed.size else -1
        if i < 0 or abs(self.elapsed[i] - tau) > SAMPLE_TOL * max(1.0, abs(tau)):
            raise DomainError(f"t={t} (elapsed {tau}) is not a bundle sample time")
        return i

    def angles(self, t):
        i = self.sample_index(t)
        return self.theta[:, i, :], self.phi[:, i, :]

    def node_config(self, k, t):
        i = self.sample_index(t)
        return chain.ChainConfig(self.theta[k, i], self.phi[k, i])

    def spread(self, t):
        """Per-site largest angle between a node's spin and the bundle-mean direction."""
        theta, phi = self.angles(t)
        st = np.sin(theta)
        vec = np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)
        mean = vec.mean(axis=0)
        mean /= np.linalg.norm(mean, axis=-1, keepdims=True)
        dots = np.clip(np.einsum("knc,nc->kn", vec, mean), -1.0, 1.0)
        return np.arccos(dots).max(axis=0)


def _run_parallel(fn, items, workers):
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def stage2_bundle(cfg, grid, sample_times, workers=1, t1=None):
    """Integrate one chain trajectory per grid node up to each sample time.

    Every node starts from the frozen ``t0`` chain with site ``n_A`` turned to
    the node direction.  Nodes are independent, so the result does not depend
    on ``workers``.
    """
    t1 = cfg.t1 if t1 is None else t1
    if t1 is None:
        raise DomainError("t1 must be resolved before stage 2")
    elapsed = np.unique(np.asarray(sample_times, dtype=float) - t1)
    if elapsed.size and elapsed[0] < -SAMPLE_TOL:
        raise DomainError("stage-2 sample times must be >= t1")
    elapsed = np.clip(elapsed, 0.0, None)
    base = cfg.initial_chain().vectors()
    h, dt, n_a = cfg.h, cfg.dt, cfg.n_A
    nodes = np.stack([np.sin(grid.theta) * np.cos(grid.phi),
                      np.sin(grid.theta) * np.sin(grid.phi), np.cos(grid.theta)], axis=1)

    def run(k):
        vec = base.copy()
        vec[n_a] = nodes[k]
        return chain.vectors_to_angles(chain.integrate_vectors(vec, h, dt, elapsed))

    results = _run_parallel(run, list(range(len(grid))), workers)
    theta = np.stack([r[0] for r in results])
    phi = np.stack([r[1] for r in results])
    return BundleTrajectories(grid.theta.copy(), grid.phi.copy(), elapsed, theta, phi, float(t1))


# Overlap products over all sites.  With c = cos(theta/2), u = sin(theta/2) e^{i phi}
# the single-site factor is b_l(j, k) = <Omega_l(k)|Omega_l(j)>^(1/2S)
# = c_j c_k + u_j conj(u_k).  Products are accumulated with explicit rescaling
# so long chains do not underflow, and returned as logarithms.

_RESCALE = 1e100
_LOG_RESCALE = math.log(_RESCALE)


@njit(cache=True, nogil=True)
def _log_product(c, u, j, k, skip):
    prod = 1.0 + 0.0j
    scale = 0
    for l in range(c.shape[1]):
        if l == skip:
            continue
        prod *= c[j, l] * c[k, l] + u[j, l] * u[k, l].conjugate()
        mag = abs(prod.real) + abs(prod.imag)
        if mag == 0.0:
            return complex(-np.inf, 0.0)
        if mag < 1.0 / _RESCALE:
            prod *= _RESCALE
            scale += 1
    return np.log(prod) - scale * _LOG_RESCALE


@njit(cache=True, nogil=True)
def _log_overlap_rows(c, u, rows, skip, total, out):
    # Upper triangle k > j for the given rows.  With ``total`` supplied, the
    # single excluded site is divided out instead of recomputing the product.
    use_total = total.shape[0] > 0
    for j in rows:
        for k in range(j + 1, c.shape[0]):
            if use_total:
                tot = total[j, k]
                b = c[j, skip] * c[k, skip] + u[j, skip] * u[k, skip].conjugate()
                if b != 0.0 and np.isfinite(tot.real):
                    out[j, k] = tot - np.log(b)
                    continue
            out[j, k] = _log_product(c, u, j, k, skip)


def _half_angles(theta, phi):
    return np.ascontiguousarray(np.cos(0.5 * theta)), \
        np.ascontiguousarray(np.sin(0.5 * theta) * np.exp(1j * phi))


def log_overlap_matrix(theta, phi, exclude=-1, total=None, workers=1):
    """``L[j, k] = log prod_{l != exclude} b_l(j, k)`` for angle arrays ``(K, N)``.

    ``exp(2S L)[j, k]`` is the product of spin-S overlaps
    ``<Omega_l(k)|Omega_l(j)>``; the matrix is Hermitian with zero diagonal.
    """
    c, u = _half_angles(theta, phi)
    k_nodes = c.shape[0]
    out = np.zeros((k_nodes, k_nodes), dtype=np.complex128)
    tot = np.zeros((0, 0), dtype=np.complex128) if total is None else total
    # Interleaved row blocks balance the triangular workload across workers.
    chunks = [np.arange(w, k_nodes, max(workers, 1), dtype=np.int64)
              for w in range(max(workers, 1))]
    _run_parallel(lambda rows: _log_overlap_rows(c, u, rows, exclude, tot, out), chunks, workers)
    upper = np.triu(out, 1)
    return upper + upper.conj().T


class SiteOverlaps:
    """Per-sample overlap logarithms, shared by every site and spin magnitude."""

    def __init__(self, bundle, t, workers=1):
        self.theta, self.phi = bundle.angles(t)
        self.workers = workers
        self.total = log_overlap_matrix(self.theta, self.phi, workers=workers)

    def excluding(self, n):
        return log_overlap_matrix(self.theta, self.phi, exclude=n, total=self.total,
                                  workers=self.workers)

    def products(self, n, spin):
        return np.exp(spin.two_s * self.excluding(n))


def pair_overlap_product(bundle, t, j, k, exclude, spin):
    """``prod_{l != exclude} <Omega_l(t, Omega_j)|Omega_l(t, Omega_k)>``.

    The bra sits on node ``j``; swapping ``j`` and ``k`` conjugates the result.
    The density-matrix kernels use the conjugate orientation (ket on ``j``).
    """
    if j == k:
        return 1.0 + 0.0j
    theta, phi = bundle.angles(t)
    c, u = _half_angles(theta, phi)
    return complex(np.exp(spin.two_s * _log_product(c, u, k, j, exclude)))


def _assemble_site(ftable, products, theta_n, phi_n):
    f = ftable.weighted
    w = f.T @ f.conj()  # sum over sigma: W[j, k] = sum_s F_s(j) conj(F_s(k))
    amp = amplitude_matrix(theta_n, phi_n, ftable.grid.spin)  # (K, d)
    rho = amp.T @ (w * products) @ amp.conj()
    return _normalized(rho)


def _normalized(rho):
    tr = np.trace(rho).real
    if not tr > MIN_TRACE:
        raise NonNormalizable(f"trace {tr:.3e} below {MIN_TRACE}")
    return as_density_matrix(rho / tr)


def site_density_matrix(cfg, ftable, bundle, n, t, overlaps=None):
    overlaps = overlaps or SiteOverlaps(bundle, t)
    return _assemble_site(ftable, overlaps.products(n, ftable.grid.spin),
                          overlaps.theta[:, n], overlaps.phi[:, n])


def site_entropy_profile(cfg, ftable, bundle, t, sites=None, workers=1):
    """``[(n, E_n)]`` with the entropy of each chain site in base ``2S+1``."""
    return site_entropy_profiles([ftable], bundle, t, sites, workers)[0]


def site_entropy_profiles(ftables, bundle, t, sites=None, workers=1):
    """Entropy profiles for several f-tables (e.g. several spins) at one sample.

    The overlap logarithms do not depend on the spin, so they are computed
    once per site and reused for every table.
    """
    overlaps = SiteOverlaps(bundle, t, workers)
    sites = range(overlaps.theta.shape[1]) if sites is None else sites
    out = [[] for _ in ftables]
    for n in sites:
        logs = overlaps.excluding(n)
        for i, ft in enumerate(ftables):
            spin = ft.grid.spin
            rho = _assemble_site(ft, np.exp(spin.two_s * logs),
                                 overlaps.theta[:, n], overlaps.phi[:, n])
            out[i].append((int(n), von_neumann_entropy(rho, spin.dim)))
    return out


# -- stage 3 ------------------------------------------------------------------

def qubit_b_state(cfg, t):
    """Qubit B after free precession in its field from ``t0`` to ``t``."""
    tau = t - cfg.t0
    phases = np.exp(-1j * cfg.h_B * SIGMA_VALUES * tau)
    return phases * np.asarray(cfg.qubit_B)


def pair_state_at_b(cfg, ftable, bundle, overlaps=None):
    """Normalized state of (qubit A, spin n_B) at ``t2``."""
    t2 = cfg.t2
    if t2 is None:
        raise DomainError("t2 must be resolved before stage 3")
    overlaps = overlaps or SiteOverlaps(bundle, t2)
    spin = ftable.grid.spin
    d = spin.dim
    n_b = cfg.n_B
    products = overlaps.products(n_b, spin)
    amp = amplitude_matrix(overlaps.theta[:, n_b], overlaps.phi[:, n_b], spin)  # (K, d)
    f = ftable.weighted
    x = (f[:, None, :] * amp.T[None, :, :]).reshape(2 * d, -1)  # columns F(j) (x) amp_j
    rho = x @ products @ x.conj().T
    sig = np.repeat(SIGMA_VALUES, d)
    tau = t2 - bundle.t1
    rho = rho * np.exp(-1j * cfg.h_A * tau * (sig[:, None] - sig[None, :]))
    return _normalized(rho)


def stage3_initial_state(cfg, ftable, bundle, overlaps=None):
    """``rho_{A,S_B}(t2) (x) |B(t2)><B(t2)|`` ordered A (x) S_B (x) B."""
    rho_as = pair_state_at_b(cfg, ftable, bundle, overlaps)
    b = qubit_b_state(cfg, cfg.t2)
    return tensor_product(rho_as, np.outer(b, b.conj()))


def stage3_hamiltonian(cfg, spin=None):
    spin = spin or cfg.spin
    sx, sy, sz = spin_matrices(spin)
    i2, i_s = np.eye(2), np.eye(spin.dim)
    h = cfg.h_A * tensor_product(SIGMA_Z, i_s, i2) + cfg.h_B * tensor_product(i2, i_s, SIGMA_Z)
    for s_op, sigma in ((sx, SIGMA_X), (sy, SIGMA_Y), (sz, SIGMA_Z)):
        h = h + cfg.g * tensor_product(i2, s_op, sigma)
    return h


def _spin_of(rho):
    dim = rho.shape[0]
    if dim % 4 or dim < 8:
        raise DimensionMismatch(f"dimension {dim} is not 4(2S+1)")
    return SpinMagnitude(dim // 4 - 1)


def stage3_evolve(rho0, cfg, t):
    if t < cfg.t2:
        raise DomainError("stage-3 times must be >= t2")
    u = Propagator(stage3_hamiltonian(cfg, _spin_of(rho0)))(t - cfg.t2)
    return u @ rho0 @ u.conj().T


def two_qubit_state(rho):
    rho = np.asarray(rho)
    spin = _spin_of(rho)
    return partial_trace(rho, [2, spin.dim, 2], [0, 2])


def concurrence_scan(cfg, rho0, times):
    """Concurrence and ``mu_1..mu_4`` at each absolute stage-3 time."""
    prop = Propagator(stage3_hamiltonian(cfg, _spin_of(rho0)))
    c = np.empty(len(times))
    mu = np.empty((len(times), 4))
    for i, t in enumerate(times):
        u = prop(t - cfg.t2)
        res = wootters_concurrence(two_qubit_state(u @ rho0 @ u.conj().T))
        c[i] = res.concurrence
        mu[i] = res.mu
    return c, mu


def stage3_times(cfg):
    return _scan_times(cfg.t2, cfg.t3_window, cfg.t3_step)


# -- soliton arrival ----------------------------------------------------------

def select_t2(cfg, t1=None, probe_step=1.0):
    """``t1`` plus the elapsed time at which the undeformed soliton reaches ``n_B``.

    The crossing is found on the measured soliton centre and rounded to the
    integrator step.
    """
    t1 = cfg.t1 if t1 is None else t1
    if t1 is None:
        raise DomainError("t1 must be resolved before t2")
    v = cfg.soliton.velocity
    distance = float(cfg.n_B - cfg.n_A)
    horizon = 2.0 * distance / v
    probes = probe_step * np.arange(1, int(math.ceil(horizon / probe_step)) + 1)
    n = cfg.N
    start = cfg.initial_chain()
    prev_t, prev_x = 0.0, float(cfg.n_A)
    last = chain.soliton_center(start)
    for vec, tau in zip(chain.integrate_vectors(start.vectors(), cfg.h, cfg.dt, probes), probes):
        centre = chain.soliton_center(chain.ChainConfig.from_vectors(vec))
        step = (centre - last + n / 2) % n - n / 2
        last = centre
        x = prev_x + step
        if x >= cfg.n_B:
            crossing = prev_t + (cfg.n_B - prev_x) / (x - prev_x) * (tau - prev_t)
            return t1 + round(crossing / cfg.dt) * cfg.dt
        prev_t, prev_x = tau, x
    raise NoSoliton(f"soliton did not reach n_B={cfg.n_B} within elapsed time {horizon:.4g}")


def resolve_times(cfg, spin=None):
    """Fill in ``t1`` (entropy maximum) and ``t2`` (arrival at ``n_B``) when unset."""
    if cfg.t1 is None:
        cfg = replace(cfg, t1=select_t1(cfg, spin=spin))
    if cfg.t2 is None:
        cfg = replace(cfg, t2=select_t2(cfg))
    return cfg
