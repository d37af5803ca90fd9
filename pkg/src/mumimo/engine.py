"""Monte Carlo harness: per-trial uplink pipeline, stopping rules, sweeps.

One trial is one coherence block: draw a channel realization, draw one OFDM
symbol of QPSK data for every user, push it through the uplink, detect,
slice, and count bit errors. A BER point accumulates trials in increasing
trial-index order until its stopping rule fires; because every trial's
randomness is keyed by (master_seed, purpose, trial_index) and the stop
decision walks trials in index order, the result is bit-identical for any
worker count.

Eb/N0 convention: the x-axis is per-user, per-receive-antenna Eb/N0. With
unit-energy QPSK symbols (2 bits each) and a unit noise floor, the uplink
power is rho = 2 * 10^(ebno_db/10), so array gain shows up in the curves,
not in the axis, and the K=1, M=1 MRC curve lands exactly on the textbook
single-branch Rayleigh reference.
"""

import math
import multiprocessing
import time
from dataclasses import dataclass, field

import numpy as np
import threadpoolctl
from scipy.special import ndtri

from .channel import LargeScaleProfile, apply_uplink, assemble_channel, generate_small_scale
from .config import RunConfig, validate_config
from .detectors import DetectorKind, build_detector, detect
from .metrics import mfb_receive
from .signal_chain import OfdmParams, qpsk_demap_symbols, random_symbol_block
from .streams import StreamKey, derive_stream

MFB = "MFB"


def ebno_db_to_rho(ebno_db: float) -> float:
    """Uplink power for a per-antenna Eb/N0: rho = Es/N0 = 2 * Eb/N0 (linear)."""
    return 2.0 * 10.0 ** (ebno_db / 10.0)


def rho_to_ebno_db(rho: float) -> float:
    return 10.0 * math.log10(rho / 2.0)


def wilson_interval(errors: int, bits: int, confidence: float = 0.95) -> tuple:
    """Wilson score interval for a binomial proportion.

    Chosen over the normal approximation because it stays calibrated at the
    low error counts BER estimation hits constantly (it is never empty and
    never extends past [0, 1]).
    """
    if bits <= 0:
        raise ValueError("bits must be positive")
    if errors < 0 or errors > bits:
        raise ValueError("errors must lie in [0, bits]")
    z = float(ndtri(0.5 + confidence / 2.0))
    p = errors / bits
    denom = 1.0 + z * z / bits
    center = (p + z * z / (2.0 * bits)) / denom
    half = z * math.sqrt(p * (1.0 - p) / bits + z * z / (4.0 * bits * bits)) / denom
    # the interval contains the point estimate by construction; the min/max
    # with p only guards the float rounding of center -/+ half
    return (min(p, max(0.0, center - half)), max(p, min(1.0, center + half)))


@dataclass(frozen=True)
class TrialSpec:
    """Everything one trial needs besides its index and the master seed."""

    detector: str
    num_users: int
    num_antennas: int
    rho: float
    ofdm: OfdmParams
    d: tuple


@dataclass(frozen=True)
class BerPoint:
    """One accumulated BER measurement with its Wilson confidence interval."""

    detector: str
    K: int
    M: int
    ebno_db: float
    bits: int
    errors: int
    ber: float
    ci_low: float
    ci_high: float
    trials: int
    seed: int
    converged: bool = True


@dataclass(frozen=True)
class PointFailure:
    detector: str
    M: int
    ebno_db: float
    error: str


@dataclass
class SweepResult:
    """All points of one sweep, in detector x antenna x Eb/N0 order."""

    config: RunConfig
    points: list = field(default_factory=list)
    wall_time_s: list = field(default_factory=list)
    failures: list = field(default_factory=list)


def run_trial(spec: TrialSpec, trial_index: int, master_seed: int) -> tuple:
    """Simulate one coherence block; return (bits_simulated, bit_errors).

    The channel, data, and noise substreams are derived independently per
    trial, so trials are exchangeable and detector variants sharing a seed
    see identical channels, symbols, and noise (paired comparisons).
    """
    channel_stream = derive_stream(StreamKey(master_seed, "channel", trial_index))
    data_stream = derive_stream(StreamKey(master_seed, "data", trial_index))
    noise_stream = derive_stream(StreamKey(master_seed, "noise", trial_index))

    G = generate_small_scale(spec.num_antennas, spec.num_users, channel_stream)
    channel = assemble_channel(G, LargeScaleProfile(np.asarray(spec.d)))
    block = random_symbol_block(spec.num_users, spec.ofdm.num_subcarriers, data_stream)

    if spec.detector == MFB:
        r = mfb_receive(channel, block.freq_symbols, spec.rho, noise_stream)
    else:
        y = apply_uplink(channel, block.freq_symbols, spec.rho, noise_stream)
        # One combining matrix per realization, reused on every subcarrier:
        # flat fading makes H identical across the OFDM symbol.
        det = build_detector(DetectorKind(spec.detector), channel.H,
                             noise_ratio=1.0 / spec.rho)
        r = detect(det, y)

    rx_bits = qpsk_demap_symbols(r)
    return block.bits.size, int(np.count_nonzero(rx_bits != block.bits))


def _trial_task(args):
    spec, trial_index, master_seed = args
    return run_trial(spec, trial_index, master_seed)


def _single_threaded_blas():
    """Pin BLAS to one thread for trial execution.

    Threaded BLAS loses badly at link-simulation matrix shapes (thread spin
    dwarfs the small per-subcarrier matmuls), and thread-count-dependent
    reduction orders would break bit determinism across worker counts, so
    trials always run single-threaded; parallelism lives at the trial level.
    """
    return threadpoolctl.threadpool_limits(limits=1)


def _accumulate_point(spec, cfg, ebno_db, pool):
    """Run trials in increasing index order until the stopping rule fires.

    Trials are dispatched in batches (possibly to a worker pool), but the
    stop decision replays each batch in index order and cuts at the first
    trial where the rule fires, so the accumulated counters do not depend on
    batch size or worker count. The batch schedule itself is fixed (growing
    8, 16, ..., 4096) for the same reason; growth just bounds dispatch
    overhead on long runs while keeping wasted post-stop trials small.
    """
    stop = cfg.stopping
    bits = errors = trials = 0
    batch_size = 8
    next_index = 0
    done = False
    with _single_threaded_blas():
        while not done:
            indices = range(next_index, next_index + batch_size)
            tasks = [(spec, i, cfg.master_seed) for i in indices]
            results = pool.map(_trial_task, tasks) if pool is not None else [
                _trial_task(t) for t in tasks
            ]
            for b, e in results:
                bits += b
                errors += e
                trials += 1
                if errors >= stop.min_bit_errors or bits >= stop.max_bits:
                    done = True
                    break
            next_index += batch_size
            batch_size = min(2 * batch_size, 4096)

    ci_low, ci_high = wilson_interval(errors, bits, stop.confidence_level)
    return BerPoint(
        detector=spec.detector,
        K=spec.num_users,
        M=spec.num_antennas,
        ebno_db=ebno_db,
        bits=bits,
        errors=errors,
        ber=errors / bits,
        ci_low=ci_low,
        ci_high=ci_high,
        trials=trials,
        seed=cfg.master_seed,
        converged=errors >= stop.min_bit_errors,
    )


def run_point(cfg: RunConfig, detector: str, num_antennas: int, ebno_db: float,
              workers: int = 1, rho: float = None, _pool=None) -> BerPoint:
    """Measure one (detector, M, Eb/N0) BER point under cfg's stopping rule."""
    if rho is None:
        rho = ebno_db_to_rho(ebno_db)
    spec = TrialSpec(
        detector=detector,
        num_users=cfg.num_users,
        num_antennas=num_antennas,
        rho=rho,
        ofdm=cfg.ofdm,
        d=tuple(cfg.d_vector()),
    )
    if _pool is not None or workers <= 1:
        return _accumulate_point(spec, cfg, ebno_db, _pool)
    with multiprocessing.Pool(workers, initializer=_single_threaded_blas) as pool:
        return _accumulate_point(spec, cfg, ebno_db, pool)


def _sweep(cfg, triples, workers):
    """Shared driver: measure every (detector, M, ebno, rho) triple in order."""
    result = SweepResult(config=cfg)
    pool = (multiprocessing.Pool(workers, initializer=_single_threaded_blas)
            if workers > 1 else None)
    try:
        for detector, m, ebno_db, rho in triples:
            started = time.perf_counter()
            try:
                point = run_point(cfg, detector, m, ebno_db,
                                  workers=workers, rho=rho, _pool=pool)
            except Exception as exc:  # keep sweeping; report at the end
                result.failures.append(PointFailure(detector, m, ebno_db, str(exc)))
            else:
                result.points.append(point)
                result.wall_time_s.append(time.perf_counter() - started)
    finally:
        if pool is not None:
            pool.close()
            pool.join()
    return result


def run_sweep(cfg: RunConfig, workers: int = 1) -> SweepResult:
    """Run the full Cartesian sweep detectors x antenna_list x ebno_grid."""
    validate_config(cfg)
    triples = [
        (detector, m, ebno_db, None)
        for detector in cfg.detectors
        for m in cfg.antenna_list
        for ebno_db in cfg.ebno_grid_db
    ]
    return _sweep(cfg, triples, workers)


def run_power_scaling(cfg: RunConfig, reference_power: float, antenna_list=None,
                      workers: int = 1) -> SweepResult:
    """Scale transmit power down as rho = reference_power / M and measure MRC BER.

    Holding rho * M fixed pins the post-combining average SNR per bit at
    reference_power / 2, so the curve isolates how channel hardening (not
    array gain) drives the BER toward the AWGN floor as M grows. Points are
    tagged with the per-antenna Eb/N0 implied by the scaled rho.
    """
    validate_config(cfg)
    if not reference_power > 0:
        raise ValueError("reference_power must be positive")
    if antenna_list is None:
        antenna_list = cfg.antenna_list
    if not antenna_list:
        raise ValueError("antenna_list must be non-empty")
    triples = [
        ("MRC", m, rho_to_ebno_db(reference_power / m), reference_power / m)
        for m in antenna_list
    ]
    return _sweep(cfg, triples, workers)
