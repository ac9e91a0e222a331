"""Link-level simulator for two-way relaying with network-coded LDPC decoding.

The relay of a two-source, no-direct-link exchange decodes the XOR of the
two transmitted codewords straight from the superimposed BPSK signal:
per-bit LLRs of the network-coded bit come from closed forms (or a
four-hypothesis reference, or an MMSE baseline), then ordinary sum-product
LDPC decoding recovers the XOR word. Sign convention throughout:
``LLR = log P(c=1)/P(c=0)``.
"""

from .channel import (
    ChannelParams,
    RngStream,
    bpsk_modulate,
    mac_awgn,
    mac_complex,
    p2p_awgn,
    sigma2_from_snr,
)
from .ldpc import (
    BpResult,
    Encoder,
    LdpcError,
    AlistFormatError,
    ParityCheckMatrix,
    bp_decode,
    bp_decode_many,
    construct_regular,
    derive_encoder,
    dump_alist,
    encode,
    gf2_rank,
    has_4cycles,
    load_alist,
    syndrome,
    syndrome_check,
)
from .pnc import (
    LLR_CLAMP,
    brute_force_llr_awgn,
    brute_force_llr_complex,
    jncld_llr_awgn,
    jncld_llr_complex,
    mmse_llr,
    p2p_bpsk_llr,
)
from .relay_sim import (
    BerRecord,
    CodeSpec,
    ConfigError,
    SimConfig,
    TrialResult,
    run_end_to_end_trial,
    run_mac_trial,
    sweep_snr,
)

__version__ = "0.1.0"

__all__ = [
    "AlistFormatError",
    "BerRecord",
    "BpResult",
    "ChannelParams",
    "CodeSpec",
    "ConfigError",
    "Encoder",
    "LLR_CLAMP",
    "LdpcError",
    "ParityCheckMatrix",
    "RngStream",
    "SimConfig",
    "TrialResult",
    "bp_decode",
    "bp_decode_many",
    "bpsk_modulate",
    "brute_force_llr_awgn",
    "brute_force_llr_complex",
    "construct_regular",
    "derive_encoder",
    "dump_alist",
    "encode",
    "gf2_rank",
    "has_4cycles",
    "jncld_llr_awgn",
    "jncld_llr_complex",
    "load_alist",
    "mac_awgn",
    "mac_complex",
    "mmse_llr",
    "p2p_awgn",
    "p2p_bpsk_llr",
    "run_end_to_end_trial",
    "run_mac_trial",
    "sigma2_from_snr",
    "sweep_snr",
    "syndrome",
    "syndrome_check",
]
