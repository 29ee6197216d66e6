"""Exact upper densities, submeasure norms, and completeness certificates
on structured subsets of the naturals.

The package computes the pseudometric d_nu(A, B) = min{1, nu(A symdiff B)}
for upper densities and exhaustive submeasure norms on finitely presented
sets, builds limits of Cauchy sequences where the underlying measure admits
them, and constructs an explicit certified family showing that the upper
Banach density pseudometric is not complete. Every certificate is exact
rational data; transcendental comparisons go through outward-rounded
interval arithmetic.
"""

from .config import Config, DEFAULT_CONFIG, load_config
from .density import (
    FUNCTIONAL_NAMES,
    check_submeasure_axioms,
    check_upper_density_axioms,
    dom_membership,
    get_functional,
    lower_dual,
    prefix_profile,
    upper_asymptotic,
    upper_banach,
    upper_buck,
    weighted_upper,
    window_profile,
)
from .exceptions import DensitasError
from .exhaust import (
    LSCSM_NAMES,
    check_lscsm_axioms,
    exhaustive_norm,
    get_lscsm,
    lscsm_eval,
    tail_value,
)
from .limits import cauchy_to_limit, lscsm_limit, sigma_limit, sigma_union_oracle
from .metric import (
    SetSequence,
    cauchy_profile,
    check_pseudometric,
    dist,
    evaluate_measure,
    metric_equivalence_probe,
    topological_coconvergence_probe,
)
from .natset import (
    APTerm,
    APUnionSet,
    DyadicBlockSet,
    FillRule,
    FiniteSet,
    HorizonSet,
    NatSet,
    PeriodicSet,
    boolean_op,
    transform,
)
from .reports import AxiomReport, CheckRecord, format_fraction, to_payload
from .values import ExtValue, bracket, exact, infinite, observational
from .witness import (
    WitnessParams,
    banach_gap_certificate,
    build_witness,
    check_witness_invariants,
    derive_params,
    divergence_certificate,
    validate_params,
    witness_sequence,
)

__version__ = "0.1.0"
