"""Polar coding with list decoding, threshold-test error detection, and
Monte Carlo link simulation."""

from .channels import (
    ChannelObservation,
    SnrPoint,
    bec_observe,
    biawgn_observe,
    bpsk_modulate,
    codeword_loglik,
    frame_rng,
    snr_point,
    snr_to_sigma,
)
from .code import (
    PolarCode,
    encode,
    enumerate_codebook,
    load_code,
    mixing_factor,
    partition_subset,
    polar_transform,
    save_code,
)
from .construction import (
    ReliabilityProfile,
    bec_reliabilities,
    construct_constrained,
    construct_unconstrained,
    ga_reliabilities,
)
from .decode import (
    DecoderPath,
    ErrorClass,
    GsclOutcome,
    check_node_llr,
    codebook_output_logprob,
    forney_test,
    forney_threshold_log,
    gscl_decode,
    path_metric_of,
    sc_decode,
    scl_decode,
)
from .oracles import oracle_forney, oracle_ml, oracle_output_dist
from .sim import SimConfig, SimRecord, classify, run_point, run_sweep

__version__ = "0.1.0"
