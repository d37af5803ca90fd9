"""QPSK bit mapping and the OFDM modulate/demodulate pair.

The Monte Carlo hot loop works per subcarrier in the frequency domain; the
time-domain OFDM chain is kept equivalent (unitary transforms, flat fading)
and exercised by the chain-equivalence tests.
"""

from dataclasses import dataclass

import numpy as np

_INV_SQRT2 = 2.0 ** -0.5


class LengthMismatch(ValueError):
    pass


@dataclass(frozen=True)
class OfdmParams:
    """OFDM block dimensions: FFT size and cyclic prefix length."""

    num_subcarriers: int = 2048
    cyclic_prefix: int = 128

    def violations(self):
        """Human-readable invariant violations (empty when valid)."""
        out = []
        n, cp = self.num_subcarriers, self.cyclic_prefix
        if not (isinstance(n, int) and n >= 1 and (n & (n - 1)) == 0):
            out.append("num_subcarriers must be a power of two >= 1")
        if not (isinstance(cp, int) and 0 <= cp < max(n, 1)):
            out.append("cyclic_prefix must satisfy 0 <= cyclic_prefix < num_subcarriers")
        return out


def qpsk_map(b0: int, b1: int) -> complex:
    """Gray-map a bit pair to a unit-energy QPSK point.

    First bit sets the sign of the real part, second bit the sign of the
    imaginary part: (0,0) -> (+1+j)/sqrt2, ..., (1,1) -> (-1-j)/sqrt2.
    """
    return complex((1 - 2 * int(b0)) * _INV_SQRT2, (1 - 2 * int(b1)) * _INV_SQRT2)


def qpsk_demap(r: complex) -> tuple:
    """Hard-decision slice back to the bit pair; ties at exactly 0 decode as 0."""
    r = complex(r)
    return (int(r.real < 0.0), int(r.imag < 0.0))


def qpsk_map_bits(bits: np.ndarray) -> np.ndarray:
    """Vectorized Gray map: (..., 2*S) bit array -> (..., S) QPSK symbols.

    Bits are consumed in consecutive pairs along the last axis.
    """
    bits = np.asarray(bits)
    if bits.shape[-1] % 2 != 0:
        raise LengthMismatch("bit array last axis must have even length")
    # float arithmetic: unsigned bit dtypes would wrap under 1 - 2*b
    b0 = bits[..., 0::2].astype(np.float64)
    b1 = bits[..., 1::2].astype(np.float64)
    return ((1.0 - 2.0 * b0) + 1j * (1.0 - 2.0 * b1)) * _INV_SQRT2


def qpsk_demap_symbols(symbols: np.ndarray) -> np.ndarray:
    """Vectorized hard slicer: (..., S) symbols -> (..., 2*S) bits."""
    symbols = np.asarray(symbols)
    bits = np.empty(symbols.shape[:-1] + (2 * symbols.shape[-1],), dtype=np.uint8)
    bits[..., 0::2] = symbols.real < 0.0
    bits[..., 1::2] = symbols.imag < 0.0
    return bits


@dataclass(frozen=True)
class SymbolBlock:
    """One OFDM symbol worth of user data: source bits and mapped subcarrier symbols.

    bits has shape (K, 2*N), freq_symbols has shape (K, N); the two are
    consistent under the fixed Gray map and every symbol has unit energy.
    """

    bits: np.ndarray
    freq_symbols: np.ndarray

    def __post_init__(self):
        if self.freq_symbols.shape != (self.bits.shape[0], self.bits.shape[1] // 2):
            raise LengthMismatch("bits and freq_symbols shapes disagree")


def random_symbol_block(num_users: int, num_subcarriers: int, data_stream) -> SymbolBlock:
    """Draw i.i.d. equiprobable bits for K users x N subcarriers and Gray-map them."""
    bits = data_stream.integers(0, 2, size=(num_users, 2 * num_subcarriers), dtype=np.uint8)
    block = SymbolBlock(bits=bits, freq_symbols=qpsk_map_bits(bits))
    block.bits.setflags(write=False)
    block.freq_symbols.setflags(write=False)
    return block


def ofdm_modulate(freq_symbols: np.ndarray, params: OfdmParams) -> np.ndarray:
    """Unitary inverse DFT plus cyclic prefix: length-N spectrum -> N+N_CP samples.

    The 1/sqrt(N) scaling keeps average power identical on both sides of the
    transform (Parseval), so noise variances mean the same thing in either
    domain.
    """
    x = np.asarray(freq_symbols)
    if x.ndim != 1 or x.shape[0] != params.num_subcarriers:
        raise LengthMismatch(
            f"expected length-{params.num_subcarriers} spectrum, got shape {x.shape}"
        )
    t = np.fft.ifft(x, norm="ortho")
    if params.cyclic_prefix == 0:
        return t
    return np.concatenate([t[-params.cyclic_prefix:], t])


def ofdm_demodulate(time_samples: np.ndarray, params: OfdmParams) -> np.ndarray:
    """Strip the cyclic prefix and apply the unitary DFT."""
    t = np.asarray(time_samples)
    expected = params.num_subcarriers + params.cyclic_prefix
    if t.ndim != 1 or t.shape[0] != expected:
        raise LengthMismatch(f"expected length-{expected} sample vector, got shape {t.shape}")
    return np.fft.fft(t[params.cyclic_prefix:], norm="ortho")
