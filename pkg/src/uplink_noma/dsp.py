"""Deterministic signal primitives shared by the transmitter and receiver chains.

All transforms are unitary: both the DFT and the IDFT carry a 1/sqrt(N)
factor, so ``dft(h ⊛ x) == sqrt(N) * dft(h) * dft(x)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal


def as_complex_vector(x, name: str = "x") -> np.ndarray:
    """Coerce to a 1-D complex128 array, rejecting empty or non-finite input."""
    arr = np.asarray(x, dtype=np.complex128)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} must not be empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    return arr


def dft(x) -> np.ndarray:
    x = as_complex_vector(x)
    return np.fft.fft(x, norm="ortho")


def idft(X) -> np.ndarray:
    X = as_complex_vector(X, "X")
    return np.fft.ifft(X, norm="ortho")


@dataclass(frozen=True)
class CpBlock:
    """A body of ``body_len`` samples preceded by a ``cp_len`` sample prefix.

    Received blocks are not checked for the CP copy property; use
    :meth:`has_cp_property` when that matters.
    """

    samples: np.ndarray
    body_len: int
    cp_len: int

    def __post_init__(self):
        if self.body_len < 1 or self.cp_len < 0:
            raise ValueError("body_len must be >= 1 and cp_len >= 0")
        if self.cp_len >= self.body_len:
            raise ValueError(f"cp_len ({self.cp_len}) must be < body_len ({self.body_len})")
        if len(self.samples) != self.body_len + self.cp_len:
            raise ValueError(
                f"block has {len(self.samples)} samples, expected "
                f"{self.body_len + self.cp_len}"
            )

    def has_cp_property(self, atol: float = 0.0) -> bool:
        L, N = self.cp_len, self.body_len
        return bool(np.allclose(self.samples[:L], self.samples[N:], rtol=0.0, atol=atol))

    def __len__(self) -> int:
        return len(self.samples)


def add_cp(x, L: int) -> CpBlock:
    x = as_complex_vector(x)
    N = len(x)
    if not 0 <= L < N:
        raise ValueError(f"CP length must satisfy 0 <= L < N, got L={L}, N={N}")
    samples = np.concatenate([x[N - L:], x]) if L else x.copy()
    return CpBlock(samples, N, L)


def remove_cp(block: CpBlock) -> np.ndarray:
    L, N = block.cp_len, block.body_len
    return np.asarray(block.samples[L:L + N], dtype=np.complex128)


def circular_convolve(x, h) -> np.ndarray:
    """``(x ⊛ h)(n) = sum_l h(l) x((n - l) mod N)`` with h zero-padded to len(x)."""
    x = as_complex_vector(x)
    h = as_complex_vector(h, "h")
    if len(h) > len(x):
        raise ValueError(f"len(h)={len(h)} exceeds len(x)={len(x)}")
    N = len(x)
    return np.fft.ifft(np.fft.fft(x) * np.fft.fft(h, N))


def linear_convolve(x, h) -> np.ndarray:
    return np.convolve(np.asarray(x, dtype=np.complex128), np.asarray(h, dtype=np.complex128))


def sliding_correlate(y, z) -> np.ndarray:
    """Output index d holds ``sum_n y(n + d) * conj(z(n))`` for every full overlap."""
    y = as_complex_vector(y, "y")
    z = as_complex_vector(z, "z")
    if len(z) > len(y):
        raise ValueError(f"reference (len {len(z)}) longer than signal (len {len(y)})")
    # scipy conjugates the second argument for complex input
    return signal.correlate(y, z, mode="valid")
