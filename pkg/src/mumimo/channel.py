"""Flat Rayleigh fading channel model and the uplink input/output relation.

Each user-antenna link is a single complex tap: an i.i.d. zero-mean,
unit-variance complex Gaussian small-scale coefficient scaled by the square
root of the user's large-scale power gain. One realization is held constant
over one OFDM symbol (block fading) and redrawn independently per trial.
The received vector is y = sqrt(rho) * H x + n with unit-variance complex
Gaussian noise per antenna.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .streams import complex_normal


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True)
class LargeScaleProfile:
    """Per-user linear power gains (slow, position-dependent fading)."""

    d: np.ndarray

    def __post_init__(self):
        d = np.atleast_1d(np.asarray(self.d, dtype=float))
        if d.ndim != 1 or d.size < 1:
            raise DimensionMismatch("d must be a length-K vector")
        if not np.all(np.isfinite(d)) or np.any(d < 0):
            raise ValueError("large-scale gains must be finite and nonnegative")
        d = d.copy()
        d.setflags(write=False)
        object.__setattr__(self, "d", d)

    @classmethod
    def unit(cls, num_users: int) -> "LargeScaleProfile":
        """Perfect power control: every user received at unit gain."""
        return cls(np.ones(num_users))

    @property
    def num_users(self) -> int:
        return self.d.shape[0]


@dataclass(frozen=True)
class ChannelRealization:
    """One coherence block: small-scale matrix G, gains d, composite H = G*sqrt(d)."""

    G: np.ndarray
    profile: LargeScaleProfile
    H: np.ndarray

    def __post_init__(self):
        if self.G.shape != self.H.shape or self.G.shape[1] != self.profile.num_users:
            raise DimensionMismatch("G, H and the large-scale profile disagree in shape")
        if not (np.all(np.isfinite(self.G)) and np.all(np.isfinite(self.H))):
            raise ValueError("channel matrices must be finite")

    @property
    def num_antennas(self) -> int:
        return self.H.shape[0]

    @property
    def num_users(self) -> int:
        return self.H.shape[1]


def generate_small_scale(num_antennas: int, num_users: int, stream) -> np.ndarray:
    """Draw the M x K small-scale matrix: i.i.d. CN(0, 1) entries."""
    if num_antennas < 1 or num_users < 1:
        raise DimensionMismatch("need at least one antenna and one user")
    return complex_normal(stream, (num_antennas, num_users))


def assemble_channel(G: np.ndarray, profile: LargeScaleProfile) -> ChannelRealization:
    """Scale column k of G by sqrt(d_k) to form the composite channel."""
    G = np.asarray(G, dtype=complex)
    if G.ndim != 2 or G.shape[1] != profile.num_users:
        raise DimensionMismatch(
            f"G has shape {G.shape}, large-scale profile has {profile.num_users} users"
        )
    H = G * np.sqrt(profile.d)[np.newaxis, :]
    G = G.copy()
    G.setflags(write=False)
    H.setflags(write=False)
    return ChannelRealization(G=G, profile=profile, H=H)


def apply_uplink(channel: ChannelRealization, x: np.ndarray, rho: float, noise_stream) -> np.ndarray:
    """Received signal y = sqrt(rho) * H x + n, n i.i.d. CN(0, 1) per antenna.

    ``x`` may be a length-K vector or a K x N matrix (one column per
    subcarrier); noise is drawn to match. rho is the uplink transmit power
    relative to the unit noise floor.
    """
    x = np.asarray(x)
    if x.shape[0] != channel.num_users:
        raise DimensionMismatch(
            f"x has leading dimension {x.shape[0]}, channel has {channel.num_users} users"
        )
    if x.ndim not in (1, 2):
        raise DimensionMismatch("x must be a vector or a K x N matrix")
    if not rho >= 0:
        raise ValueError("rho must be nonnegative")
    noise_shape = (channel.num_antennas,) if x.ndim == 1 else (channel.num_antennas, x.shape[1])
    n = complex_normal(noise_stream, noise_shape)
    return np.sqrt(rho) * (channel.H @ x) + n


def dump_channel_csv(channel: ChannelRealization, path) -> None:
    """Debug dump of one realization, one row per (antenna, user) pair."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["m", "k", "re_g", "im_g", "d_k", "re_h", "im_h"])
        d = channel.profile.d
        fmt = lambda v: format(float(v), ".17g")
        for m in range(channel.num_antennas):
            for k in range(channel.num_users):
                g = channel.G[m, k]
                h = channel.H[m, k]
                writer.writerow([m, k, fmt(g.real), fmt(g.imag),
                                 fmt(d[k]), fmt(h.real), fmt(h.imag)])
