"""Capacity and diagnostic metrics, plus the analytic BER reference curves.

Includes the favorable-propagation deviation (how far H^H H / M is from the
large-scale diagonal), the exact log-det sum rate next to its massive-MIMO
approximation, the genie matched-filter-bound receiver, and closed-form
Rayleigh/AWGN QPSK bit error rates used as independent oracles by the tests.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import erfc, gammaln, logsumexp

from .channel import ChannelRealization, DimensionMismatch
from .streams import complex_normal


class ZeroLargeScale(ValueError):
    pass


@dataclass(frozen=True)
class FavorableStat:
    """Relative Frobenius deviation of H^H H / M from the large-scale diagonal."""

    num_antennas: int
    num_users: int
    epsilon: float


def favorable_deviation(channel: ChannelRealization) -> FavorableStat:
    """How far this realization is from exact column orthogonality.

    epsilon = ||H^H H / M - D||_F / ||D||_F, zero exactly when the user
    channels are orthogonal with squared norms M * d_k. Concentrates like
    1/sqrt(M) for i.i.d. small-scale fading.
    """
    d = channel.profile.d
    d_norm = float(np.linalg.norm(d))
    if d_norm == 0.0:
        raise ZeroLargeScale("all large-scale gains are zero")
    gram = channel.H.conj().T @ channel.H
    eps = float(np.linalg.norm(gram / channel.num_antennas - np.diag(d))) / d_norm
    return FavorableStat(num_antennas=channel.num_antennas,
                         num_users=channel.num_users,
                         epsilon=eps)


class SumRate(NamedTuple):
    exact: float
    approx: float


def sum_rate(channel: ChannelRealization, rho: float) -> SumRate:
    """Uplink sum rate in bits/s/Hz: exact log-det and its orthogonal-columns approximation.

    exact  = log2 det(I + rho H^H H)
    approx = sum_k log2(1 + rho M d_k)

    The approximation assumes favorable propagation (H^H H ~ M D) and is only
    asymptotic in M, so both values are reported rather than conflated.
    """
    if not rho > 0:
        raise ValueError("rho must be positive")
    gram = channel.H.conj().T @ channel.H
    sign, logdet = np.linalg.slogdet(np.eye(channel.num_users) + rho * gram)
    exact = float(logdet / math.log(2.0))
    approx = float(np.sum(np.log2(1.0 + rho * channel.num_antennas * channel.profile.d)))
    return SumRate(exact=exact, approx=approx)


def mfb_receive(channel: ChannelRealization, x: np.ndarray, rho: float, noise_stream) -> np.ndarray:
    """Genie matched-filter-bound receiver: single-user MF with interferers removed.

    For each user i the genie signal y_i = sqrt(rho) h_i x_i + n contains no
    other user, and the receiver applies single-user MRC, r_i = h_i^H y_i.
    One noise draw is shared by all users within the call, so MFB results are
    exactly paired with the full multi-user pipeline on the same streams.
    ``x`` may be a length-K vector or a K x N matrix of subcarrier columns.
    """
    x = np.asarray(x)
    if x.shape[0] != channel.num_users:
        raise DimensionMismatch(
            f"x has leading dimension {x.shape[0]}, channel has {channel.num_users} users"
        )
    squeeze = x.ndim == 1
    X = x[:, np.newaxis] if squeeze else x
    if X.ndim != 2:
        raise DimensionMismatch("x must be a vector or a K x N matrix")

    noise_shape = (channel.num_antennas,) if squeeze else (channel.num_antennas, X.shape[1])
    n = complex_normal(noise_stream, noise_shape)
    N = n[:, np.newaxis] if squeeze else n

    # Per-user loop keeps the arithmetic identical to the multi-user MRC path
    # (K=1 is bit-for-bit the same given the same streams).
    r = np.empty_like(X)
    root_rho = np.sqrt(rho)
    for i in range(channel.num_users):
        h = channel.H[:, i : i + 1]
        y_i = root_rho * (h @ X[i : i + 1, :]) + N
        r[i, :] = (h.conj().T @ y_i)[0, :]
    return r[:, 0] if squeeze else r


def rayleigh_mrc_ber_analytic(num_branches: int, ebno_db: float) -> float:
    """Closed-form BER of Gray-coded QPSK with M-branch MRC in i.i.d. Rayleigh fading.

    With per-branch average SNR per bit gamma (linear Eb/N0), let
    mu = sqrt(gamma / (1 + gamma)) and p = (1 - mu) / 2. Then

        BER = p^M * sum_{k=0}^{M-1} C(M-1+k, k) * (1-p)^k

    The sum is evaluated in the log domain so it stays finite for large M.
    """
    if num_branches < 1:
        raise ValueError("need at least one diversity branch")
    gamma = 10.0 ** (ebno_db / 10.0)
    mu = math.sqrt(gamma / (1.0 + gamma))
    p = 0.5 * (1.0 - mu)
    if p <= 0.0:
        return 0.0
    k = np.arange(num_branches)
    log_terms = (
        gammaln(num_branches + k) - gammaln(k + 1) - gammaln(num_branches)
        + num_branches * math.log(p) + k * math.log1p(-p)
    )
    return float(np.exp(logsumexp(log_terms)))


def awgn_qpsk_ber(ebno_db: float) -> float:
    """Gray-coded QPSK bit error rate on the pure AWGN channel: Q(sqrt(2 Eb/N0))."""
    gamma = 10.0 ** (ebno_db / 10.0)
    return float(0.5 * erfc(math.sqrt(gamma)))
