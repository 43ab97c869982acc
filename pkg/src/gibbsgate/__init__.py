"""Exact stability analysis of diagonal quantum states.

Given a discrete spectrum and a diagonal state, decide whether the state is
Gibbs, certify instability against a three-mode oscillator environment when
it is not, and build the one- and two-mode configurations where no such
certificate exists.
"""
from .energy import NEG_INF, POS_INF, Basis, Energy, ratio
from .spectrum import (
    GrowthFamily,
    LogState,
    Spectrum,
    beta_profile,
    check_passivity,
    check_trace_class,
    gibbs_state,
    is_gibbs,
    partition_function,
)
from .oscillator import (
    InstabilityCertificate,
    attack_pair,
    choose_pq,
    multimode_spectrum,
    oscillator_spectrum,
    refute_gibbs,
)
from .constraints import (
    brute_force_oracle,
    build_ratio_graph,
    check_summability,
    degeneracy_classes,
    env_verdict,
    solve_env_state,
)
from .counterexamples import (
    coset_decomposition,
    commensurable_forcing,
    phi_table,
    single_mode_counterexample,
    two_mode_counterexample,
)
from .dynamics import (
    TruncatedSystem,
    evolve_expectation,
    first_order_stability_scan,
    marginal_stability_check,
)
from .report import render_report

__version__ = "0.1.0"
