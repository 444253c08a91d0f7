"""Concatenated coding for short-molecule DNA storage over noisy sequencing channels.

Inner: random linear codes over Z_q with zero-undetected-error decoding.
Outer: Dirichlet-drawn, floor-quantised molecule histograms decoded by
minimum KL divergence.  Plus the erasure-exponent calculus that ties them.
"""
__version__ = "0.1.0"

from .channel import (
    Channel,
    SymmetryWitness,
    find_symmetry_witness,
    make_erasure_channel,
    make_identity_channel,
    make_qary_symmetric_channel,
    make_typewriter_channel,
    sequence_molecule,
    support_set,
    verify_symmetry,
)
from .exponents import e0_tilde, erasure_exponent, exponent_sweep, r_max, typewriter_c0u_lower_bound
from .inner import (
    LinearCode,
    ZueOutcome,
    encode,
    ensemble_erasure_prob,
    erasure_prob_exact,
    erasure_prob_mc,
    message_independence_check,
    sample_generator,
    theorem2_bound,
    zue_decode,
)
from .kernels import BACKEND
from .outer import (
    build_codebook,
    chi_square,
    kl_decode,
    kl_divergence,
    psi_lower_bound,
    quantize,
    sample_dirichlet_uniform,
    theorem3_codebook_size,
)
from .pipeline import SimulationConfig, run_experiment, run_trial
