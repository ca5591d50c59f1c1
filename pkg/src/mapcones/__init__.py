"""mapcones: decomposability of linear maps between matrix algebras.

A map phi : M_d -> M_h is tested for membership in the cone of maps of the
form sum_k psi_k o phi_k, where the psi_k are completely positive and the
phi_k form a fixed sequence of *-maps (the classical decomposable maps are
the special case phi = (id, t)). Verdicts are certified: feasibility by PSD
Choi matrices reproducing the target, infeasibility by a dual witness.
"""

from .decomp import (
    DecompositionCertificate,
    FeasibilityProblem,
    FeasibilityResult,
    InfeasibilityWitness,
    closedness_probe,
    conic_combine,
    export_sdpa,
    feasibility,
    left_compose,
    verify_certificate,
    verify_witness,
)
from .dilation import (
    BlockDilation,
    StinespringData,
    block_dilation,
    build_factor_map,
    cb_norm_cp,
    eta_reshuffle,
    stinespring,
    unitized_extension,
)
from .gamma import criterion_violation_search, gamma_membership, gamma_sample
from .seq import MapSequence, algebra_closure_check, canonical, kernel_condition, xi_embed
from .superop import (
    PrecompositionOperator,
    SuperOperator,
    build_precomposition,
    compose,
    is_ccp,
    is_cp,
    is_positive_heuristic,
    is_unital,
)

__version__ = "0.1.0"
