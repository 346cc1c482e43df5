"""Qubit-qubit entanglement mediated by a soliton on a classical-limit spin chain."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .scs import (SphereDirection, SpinMagnitude, QuadratureGrid, build_quadrature,  # noqa: F401
                  identity_residual, scs_amplitudes, scs_expectation, scs_overlap)
from .chain import (ChainConfig, SolitonParams, chain_energy, integrate_eom,  # noqa: F401
                    soliton_center, soliton_derived_params, total_sz, tw_soliton_config)
from .entanglement import ConcurrenceResult, von_neumann_entropy, wootters_concurrence  # noqa: F401
from .protocol import ProtocolConfig  # noqa: F401
