"""Linear multi-user detectors: MRC, ZF and MMSE combining matrices.

Each detector is an M x K matrix A applied as r = A^H y. MRC maximizes
per-user SNR and ignores interference (A = H); ZF nulls interference at the
price of noise enhancement (A = H (H^H H)^-1); MMSE balances the two
(A = H (H^H H + (sigma_n^2/sigma_x^2) I)^-1). Gram-matrix inverses are
realized as Hermitian positive-definite Cholesky solves, never as explicit
inverses.
"""

import enum
from dataclasses import dataclass

import numpy as np
import scipy.linalg

# Condition-number ceiling above which the ZF Gram solve is refused instead
# of silently regularized: interference nulling must not be quietly violated.
SINGULAR_GRAM_CONDITION = 1e12

# Flop-report constants: complex multiply-adds per output entry of A^H y,
# per Gram-product entry, and per K^3 Cholesky solve.
_FLOPS_COMBINE = 8
_FLOPS_GRAM = 8
_FLOPS_CHOLESKY = 8.0 / 3.0 * 8


class DimensionError(ValueError):
    pass


class SingularGram(ArithmeticError):
    """The Gram matrix H^H H is numerically singular (condition > 1e12)."""


class EmptyCollection(ValueError):
    pass


class DetectorKind(enum.Enum):
    MRC = "MRC"
    ZF = "ZF"
    MMSE = "MMSE"


@dataclass(frozen=True)
class DetectorMatrix:
    """A built combining matrix plus the noise ratio it was regularized with."""

    kind: DetectorKind
    A: np.ndarray
    noise_ratio: float


def build_detector(kind: DetectorKind, H: np.ndarray, noise_ratio: float = 0.0) -> DetectorMatrix:
    """Construct the combining matrix for one channel realization.

    ``noise_ratio`` is sigma_n^2 / sigma_x^2; with unit-variance symbols and
    unit noise floor the caller passes 1/rho so the MMSE regularizer stays
    consistent with the uplink power. It is ignored for MRC and ZF.
    """
    kind = DetectorKind(kind)
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2:
        raise DimensionError("H must be an M x K matrix")
    if not noise_ratio >= 0:
        raise ValueError("noise_ratio must be nonnegative")
    M, K = H.shape

    if kind is DetectorKind.MRC:
        A = H
    else:
        if M < K:
            raise DimensionError(f"{kind.value} needs M >= K, got M={M}, K={K}")
        gram = H.conj().T @ H
        if kind is DetectorKind.ZF:
            if np.linalg.cond(gram) > SINGULAR_GRAM_CONDITION:
                raise SingularGram(
                    f"Gram condition estimate exceeds {SINGULAR_GRAM_CONDITION:.0e}"
                )
            lhs = gram
        else:
            lhs = gram + noise_ratio * np.eye(K)
        try:
            factor = scipy.linalg.cho_factor(lhs, lower=True)
        except np.linalg.LinAlgError as exc:
            raise SingularGram(str(exc)) from exc
        A = scipy.linalg.cho_solve(factor, H.conj().T).conj().T
        if kind is DetectorKind.ZF:
            assert np.linalg.norm(A.conj().T @ H - np.eye(K)) <= 1e-9 * K

    return DetectorMatrix(kind=kind, A=A, noise_ratio=float(noise_ratio))


def detect(detector: DetectorMatrix, y: np.ndarray) -> np.ndarray:
    """Separate the received signal into per-user streams: r = A^H y.

    ``y`` may be a length-M vector or an M x N matrix of subcarrier columns.
    """
    y = np.asarray(y)
    if y.shape[0] != detector.A.shape[0]:
        raise DimensionError(
            f"y has leading dimension {y.shape[0]}, detector expects {detector.A.shape[0]}"
        )
    return detector.A.conj().T @ y


def empirical_mse(detector: DetectorMatrix, trials) -> float:
    """Sample mean of ||A^H y - x||^2 over a collection of (y, x) pairs."""
    total = 0.0
    count = 0
    for y, x in trials:
        r = detect(detector, y)
        total += float(np.sum(np.abs(r - np.asarray(x)) ** 2))
        count += 1
    if count == 0:
        raise EmptyCollection("need at least one (y, x) pair")
    return total / count


def flop_estimate(kind: DetectorKind, num_antennas: int, num_users: int) -> int:
    """Rough per-realization flop count for reporting (not for scheduling).

    MRC costs only the combine step; ZF and MMSE add the Gram product and a
    K x K Cholesky solve, matching the familiar MK + MK^2 + K^3 scaling.
    """
    kind = DetectorKind(kind)
    if num_antennas < 1 or num_users < 1:
        raise DimensionError("need at least one antenna and one user")
    combine = _FLOPS_COMBINE * num_antennas * num_users
    if kind is DetectorKind.MRC:
        return combine
    gram = _FLOPS_GRAM * num_antennas * num_users ** 2
    solve = _FLOPS_CHOLESKY * num_users ** 3
    return int(round(combine + gram + solve))
