"""Controllable non-Markovian dephasing of a two-qubit Bell pair.

Random sinusoidal fields are averaged over an ensemble to reproduce the
open dynamics, and non-Markovianity is quantified globally (quantum mutual
information) and locally (quantum Fisher information flow per channel).

Units: the library works in angular frequency (rad/μs) and time in μs.
The configuration layer (:mod:`nonmarkov.config`) accepts cyclic MHz and
converts with a factor 2π.
"""

from .errors import ConfigError, DomainError
from .quantum import (
    bell_dephased_state,
    eigh,
    partial_trace,
    trace_distance,
    von_neumann_entropy,
)
from .noise import (
    ModeAmplitudes,
    NoiseRealization,
    SpectralModel,
    field_value,
    integrated_field,
    mode_amplitudes,
    sample_realization,
)
from .dynamics import (
    ChannelConfig,
    EnsembleConfig,
    Trajectory,
    analytic_chi,
    analytic_chi_dot,
    bessel_f,
    dephasing_map,
    evolve,
    mc_coherence,
)
from .measures import (
    ChannelSpec,
    MeasureConfig,
    MeasureReport,
    blp_measure,
    channel_flow_decomposition,
    closed_form_qfi,
    fd_param_derivative,
    measure_report,
    n0_measure,
    qfi,
    qfi_flow,
    qmi,
    qmi_rate,
    rhp_measure,
    sld,
)

from .config import RunConfig, parse_config

__version__ = "0.1.0"
