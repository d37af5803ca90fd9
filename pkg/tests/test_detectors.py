import numpy as np
import pytest

from mumimo.channel import LargeScaleProfile, apply_uplink, assemble_channel, generate_small_scale
from mumimo.detectors import (
    DetectorKind,
    DimensionError,
    EmptyCollection,
    SingularGram,
    build_detector,
    detect,
    empirical_mse,
    flop_estimate,
)
from mumimo.signal_chain import qpsk_demap_symbols, qpsk_map_bits
from mumimo.streams import StreamKey, complex_normal, derive_stream


def random_H(M, K, seed=0, trial=0):
    return generate_small_scale(M, K, derive_stream(StreamKey(seed, "channel", trial)))


def test_zf_two_antenna_hand_solve():
    H = np.array([[1.0 + 0j], [1.0 + 0j]])
    det = build_detector(DetectorKind.ZF, H)
    assert np.allclose(det.A, [[0.5], [0.5]], atol=1e-12)


def test_mmse_scalar_hand_solve():
    det = build_detector(DetectorKind.MMSE, np.array([[1.0 + 0j]]), noise_ratio=1.0)
    assert np.allclose(det.A, [[0.5]], atol=1e-12)


def test_mrc_is_the_channel_matrix():
    H = random_H(8, 3)
    det = build_detector(DetectorKind.MRC, H)
    assert det.A is H or np.array_equal(det.A, H)


def test_mmse_degenerates_to_zf_at_zero_noise_ratio():
    H = random_H(16, 4, seed=1)
    zf = build_detector(DetectorKind.ZF, H)
    mmse = build_detector(DetectorKind.MMSE, H, noise_ratio=0.0)
    assert np.linalg.norm(mmse.A - zf.A) < 1e-10


def test_zf_identity_over_seeds():
    # interference nulling: ||A^H H - I||_F below 1e-9 * K for M >= 4K
    K = 8
    for seed in range(100):
        H = random_H(4 * K, K, seed=seed)
        det = build_detector(DetectorKind.ZF, H)
        assert np.linalg.norm(det.A.conj().T @ H - np.eye(K)) <= 1e-9 * K


def test_mmse_to_zf_limit():
    H = random_H(64, 8, seed=5)
    zf = build_detector(DetectorKind.ZF, H)
    mmse = build_detector(DetectorKind.MMSE, H, noise_ratio=1e-8)
    rel = np.linalg.norm(mmse.A - zf.A) / np.linalg.norm(zf.A)
    assert rel <= 1e-6


def test_mmse_to_mrc_limit_matrix_and_decisions():
    sigma = 1e6
    rng = np.random.default_rng(8)
    agree = 0
    total = 0
    for trial in range(50):
        H = random_H(64, 8, seed=17, trial=trial)
        mmse = build_detector(DetectorKind.MMSE, H, noise_ratio=sigma)
        # scaled MMSE collapses onto the matched filter
        rel = np.linalg.norm(sigma * mmse.A - H) / np.linalg.norm(H)
        assert rel <= 1e-3
        y = (rng.standard_normal((64, 20)) + 1j * rng.standard_normal((64, 20)))
        mrc = build_detector(DetectorKind.MRC, H)
        bits_mmse = qpsk_demap_symbols(detect(mmse, y))
        bits_mrc = qpsk_demap_symbols(detect(mrc, y))
        agree += np.count_nonzero(bits_mmse == bits_mrc)
        total += bits_mrc.size
    assert agree / total >= 0.999


def test_detect_zero_forcing_removes_interference():
    H = random_H(12, 4, seed=2)
    x = qpsk_map_bits(np.array([[0, 1, 1, 0, 1, 1, 0, 0]], dtype=np.uint8).reshape(4, 2))
    rho = 9.0
    y = np.sqrt(rho) * (H @ x)  # noise-free
    det = build_detector(DetectorKind.ZF, H)
    assert np.max(np.abs(detect(det, y) - np.sqrt(rho) * x)) < 1e-10


def test_mrc_on_exactly_orthogonal_columns():
    # power-of-two entries keep every float op exact, so equality is exact:
    # columns sqrt(M * d_k) e_k give r = sqrt(rho) * M * D * x
    M, K = 16, 2
    d = np.array([4.0, 16.0])
    H = np.zeros((M, K), dtype=complex)
    H[0, 0] = 8.0   # ||h_0||^2 = 64 = M * d_0
    H[1, 1] = 16.0  # ||h_1||^2 = 256 = M * d_1
    x = np.array([1 - 1j, -1 + 1j])
    rho = 4.0
    y = np.sqrt(rho) * (H @ x)
    r = detect(build_detector(DetectorKind.MRC, H), y)
    assert np.array_equal(r, np.sqrt(rho) * M * d * x)


def test_detect_zero_in_zero_out():
    det = build_detector(DetectorKind.MRC, random_H(6, 2))
    assert np.all(detect(det, np.zeros(6, dtype=complex)) == 0)


def test_detect_dimension_check():
    det = build_detector(DetectorKind.MRC, random_H(6, 2))
    with pytest.raises(DimensionError):
        detect(det, np.zeros(5, dtype=complex))


def test_zf_needs_enough_antennas():
    with pytest.raises(DimensionError):
        build_detector(DetectorKind.ZF, random_H(3, 5))


def test_singular_gram_detected():
    col = random_H(8, 1, seed=3)
    H = np.hstack([col, col])  # rank 1, condition effectively infinite
    with pytest.raises(SingularGram):
        build_detector(DetectorKind.ZF, H)


def test_empirical_mse_examples():
    H = random_H(12, 3, seed=4)
    zf = build_detector(DetectorKind.ZF, H)
    x = qpsk_map_bits(np.arange(6, dtype=np.uint8).reshape(3, 2) % 2)
    y = H @ x  # rho = 1, noise-free
    assert empirical_mse(zf, [(y, x)]) <= 1e-18
    assert empirical_mse(zf, [(y, x)] * 7) == pytest.approx(empirical_mse(zf, [(y, x)]))
    with pytest.raises(EmptyCollection):
        empirical_mse(zf, [])


def test_mmse_minimizes_empirical_mse():
    # paired trials, shared channel/noise draws per realization
    M, K, noise_ratio = 64, 8, 0.5
    rho = 1.0 / noise_ratio
    mse = {kind: 0.0 for kind in DetectorKind}
    n_trials = 200
    for trial in range(n_trials):
        H = random_H(M, K, seed=33, trial=trial)
        ch = assemble_channel(H, LargeScaleProfile.unit(K))
        data = derive_stream(StreamKey(33, "data", trial))
        x = qpsk_map_bits(data.integers(0, 2, size=(K, 2), dtype=np.uint8))[:, 0]
        y = apply_uplink(ch, x, rho, derive_stream(StreamKey(33, "noise", trial)))
        for kind in DetectorKind:
            det = build_detector(kind, ch.H, noise_ratio=noise_ratio)
            mse[kind] += empirical_mse(det, [(y, x)])
    for kind in mse:
        mse[kind] /= n_trials
    scale = 1e-12 * max(mse.values())
    assert mse[DetectorKind.MMSE] <= mse[DetectorKind.ZF] + scale
    assert mse[DetectorKind.MMSE] <= mse[DetectorKind.MRC] + scale


def test_flop_estimates():
    assert flop_estimate(DetectorKind.MRC, 100, 10) == 8000
    # Gram term dominates: doubling M at fixed K halves the leading-term ratio
    K = 4
    ratio = flop_estimate(DetectorKind.ZF, 1 << 20, K) / flop_estimate(DetectorKind.ZF, 1 << 21, K)
    assert abs(ratio - 0.5) < 1e-3
    for M in (2, 3, 10, 100):
        for K in range(2, M + 1):
            assert flop_estimate(DetectorKind.MRC, M, K) < flop_estimate(DetectorKind.ZF, M, K)
    assert flop_estimate(DetectorKind.ZF, 8, 2) == flop_estimate(DetectorKind.MMSE, 8, 2)


def test_noise_ratio_must_be_nonnegative():
    with pytest.raises(ValueError):
        build_detector(DetectorKind.MMSE, random_H(4, 2), noise_ratio=-0.1)


def test_detector_outputs_finite():
    for trial in range(20):
        H = random_H(32, 8, seed=41, trial=trial)
        y = complex_normal(derive_stream(StreamKey(41, "noise", trial)), (32, 4))
        for kind in DetectorKind:
            det = build_detector(kind, H, noise_ratio=0.25)
            assert np.all(np.isfinite(det.A))
            assert np.all(np.isfinite(detect(det, y)))
