"""Fast built-in oracle checks behind ``qsolchain selftest``."""
from __future__ import annotations

import logging
import math

import numpy as np

from . import chain, protocol
from .entanglement import von_neumann_entropy, wootters_concurrence
from .numcore import evolve_unitary, hermitian_eigensystem, partial_trace, psd_sqrt
from .scs import (SphereDirection, SpinMagnitude, build_quadrature, identity_residual,
                  scs_amplitudes, scs_overlap)

log = logging.getLogger("qsolchain.selftest")


def _close(a, b, tol):
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b)))) <= tol


def _random_hermitian(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return a + a.conj().T


def check_eigensystem(rng):
    m = _random_hermitian(rng, 12)
    evals, v = hermitian_eigensystem(m)
    return (_close((v * evals) @ v.conj().T, m, 1e-9 * np.abs(m).max())
            and _close(v.conj().T @ v, np.eye(12), 1e-10)
            and _close(hermitian_eigensystem(np.array([[0, 1], [1, 0]]))[0], [-1, 1], 1e-14))


def check_exponential(rng):
    h = _random_hermitian(rng, 6)
    term = np.eye(6, dtype=complex)
    series = term.copy()
    for k in range(1, 40):
        term = term @ (-1j * 0.37 * h) / k
        series += term
    return _close(evolve_unitary(h, 0.37), series, 1e-9)


def check_sqrt_and_trace():
    bell = np.zeros((4, 4))
    bell[np.ix_([0, 3], [0, 3])] = 0.5
    return (_close(psd_sqrt(np.diag([0.64, 0.36])), np.diag([0.8, 0.6]), 1e-12)
            and _close(partial_trace(bell, [2, 2], [0]), np.eye(2) / 2, 1e-12))


def check_overlaps(rng):
    for two_s in (2, 6, 10, 20):
        spin = SpinMagnitude(two_s)
        for _ in range(50):
            a = SphereDirection(math.acos(rng.uniform(-1, 1)), rng.uniform(0, 2 * math.pi))
            b = SphereDirection(math.acos(rng.uniform(-1, 1)), rng.uniform(0, 2 * math.pi))
            ov = scs_overlap(a, b, spin)
            law = ((1 + a.unit_vector() @ b.unit_vector()) / 2) ** two_s
            direct = np.vdot(scs_amplitudes(a, spin), scs_amplitudes(b, spin))
            if abs(abs(ov) ** 2 - law) > 1e-12 or abs(ov - direct) > 1e-12:
                return False
    return True


def check_quadrature():
    return identity_residual(build_quadrature(24, 24, SpinMagnitude(10))) <= 1e-8


def check_soliton():
    params = chain.soliton_derived_params(math.pi / 4, 0.02)
    cfg = chain.tw_soliton_config(params, 0.0, 256, 40.0)
    excess = chain.chain_energy(cfg, 0.02) + 256 * 1.02
    moved = chain.integrate_eom(cfg, 0.02, 0.01, 50.0)(50.0)
    shift = chain.soliton_center(moved) - chain.soliton_center(cfg)
    return (abs(params.velocity - 0.2) < 1e-12 and abs(params.tau - 50) < 1e-9
            and abs(excess / params.energy - 1) < 0.03 and abs(shift - 10.0) < 0.5)


def check_concurrence():
    phi = np.array([1, 0, 0, 1]) / math.sqrt(2)
    bell = np.outer(phi, phi)
    werner = 0.5 * bell + 0.5 * np.eye(4) / 4
    product = np.kron(np.diag([0.7, 0.3]), np.diag([0.4, 0.6]))
    return (abs(wootters_concurrence(bell).concurrence - 1) < 1e-10
            and abs(wootters_concurrence(werner).concurrence - 0.25) < 1e-8
            and wootters_concurrence(product).concurrence < 1e-10
            and abs(von_neumann_entropy(np.diag([0.75, 0.25]), 2) - 0.8112781244591328) < 1e-12)


def check_stage1_representation():
    cfg = protocol.ProtocolConfig()
    res = protocol.stage1_evolve(cfg, cfg.t0 + 5.0)
    ft = protocol.build_f_table(res, cfg.grid())
    return (_close(protocol.reconstruct_pair_state(ft), res.density_matrix(), 1e-6)
            and abs(ft.norm() - 1) < 1e-6
            and protocol.stage1_evolve(cfg, cfg.t0).entropy < 1e-12)


CHECKS = {
    "hermitian eigensystem": check_eigensystem,
    "unitary evolution vs series": check_exponential,
    "psd sqrt and partial trace": lambda rng: check_sqrt_and_trace(),
    "coherent-state overlaps": check_overlaps,
    "quadrature identity": lambda rng: check_quadrature(),
    "soliton parameters and motion": lambda rng: check_soliton(),
    "concurrence and entropy": lambda rng: check_concurrence(),
    "coherent-state expansion": lambda rng: check_stage1_representation(),
}


def run_selftest():
    rng = np.random.default_rng(20240601)
    ok = True
    for name, check in CHECKS.items():
        try:
            passed = bool(check(rng))
        except Exception as exc:  # a crash is a failure, reported not raised
            log.info("FAIL %s (%s: %s)", name, type(exc).__name__, exc)
            ok = False
            continue
        log.info("%s %s", "PASS" if passed else "FAIL", name)
        ok &= passed
    return ok
