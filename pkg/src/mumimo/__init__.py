"""Link-level Monte Carlo simulator for the massive MU-MIMO uplink.

Flat Rayleigh fading, QPSK/OFDM block transmission, linear detection
(MRC/ZF/MMSE) with a genie matched-filter-bound reference, and
reproducible error-counting BER estimation.
"""

from .channel import (
    ChannelRealization,
    DimensionMismatch,
    LargeScaleProfile,
    apply_uplink,
    assemble_channel,
    dump_channel_csv,
    generate_small_scale,
)
from .config import (
    ConfigError,
    PowerScaling,
    RunConfig,
    StoppingRule,
    Violation,
    config_violations,
    dumps_config,
    load_config,
    loads_config,
    validate_config,
)
from .detectors import (
    DetectorKind,
    DetectorMatrix,
    DimensionError,
    EmptyCollection,
    SingularGram,
    build_detector,
    detect,
    empirical_mse,
    flop_estimate,
)
from .engine import (
    BerPoint,
    SweepResult,
    TrialSpec,
    ebno_db_to_rho,
    rho_to_ebno_db,
    run_point,
    run_power_scaling,
    run_sweep,
    run_trial,
    wilson_interval,
)
from .metrics import (
    FavorableStat,
    SumRate,
    ZeroLargeScale,
    awgn_qpsk_ber,
    favorable_deviation,
    mfb_receive,
    rayleigh_mrc_ber_analytic,
    sum_rate,
)
from .signal_chain import (
    LengthMismatch,
    OfdmParams,
    SymbolBlock,
    ofdm_demodulate,
    ofdm_modulate,
    qpsk_demap,
    qpsk_demap_symbols,
    qpsk_map,
    qpsk_map_bits,
    random_symbol_block,
)
from .streams import StreamKey, complex_normal, derive_stream, uniform_words, zeros_stream

__version__ = "0.1.0"
