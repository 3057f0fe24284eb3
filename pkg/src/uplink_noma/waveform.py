"""Zadoff-Chu preambles, the LTE PSS reference, symbol mapping and user framing.

User indices are zero-based throughout: user ``m`` in ``range(M)``.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .dsp import CpBlock, add_cp, dft, idft, remove_cp

PSS_LENGTH = 63
PSS_ROOTS = (25, 29, 34)


@dataclass(frozen=True)
class ZcParams:
    N: int
    gamma: int

    def __post_init__(self):
        if self.N < 1:
            raise ValueError(f"ZC length N must be positive, got {self.N}")
        if not 1 <= self.gamma < max(self.N, 2):
            raise ValueError(f"root index must satisfy 1 <= gamma < N, got gamma={self.gamma}, N={self.N}")
        if math.gcd(self.gamma, self.N) != 1:
            raise ValueError(f"root index gamma={self.gamma} is not relatively prime to N={self.N}")


def zadoff_chu(params: ZcParams) -> np.ndarray:
    """Root ZC sequence: exp(-j pi g k^2 / N) for even N, exp(-j pi g k (k+1) / N) for odd N."""
    N, g = params.N, params.gamma
    k = np.arange(N, dtype=np.int64)
    quad = k * k if N % 2 == 0 else k * (k + 1)
    # exact integer reduction modulo 2N keeps the phase accurate for large N
    num = (g * quad) % (2 * N)
    return np.exp(-1j * np.pi * num / N)


def generate_pss(u: int) -> np.ndarray:
    """LTE PSS root as a bare length-63 time sequence (no DC puncturing)."""
    if u not in PSS_ROOTS:
        raise ValueError(f"PSS root must be one of {PSS_ROOTS}, got {u}")
    return zadoff_chu(ZcParams(PSS_LENGTH, u))


@dataclass(frozen=True, eq=False)
class PreambleSet:
    """M cyclically shifted ZC preambles sharing one root.

    ``Z[m]`` is the frequency-domain preamble, ``z[m] = idft(Z[m])`` and
    ``z_cp[m]`` the CP block that heads user m's frame.
    """

    zc: ZcParams
    M: int
    L_p: int
    L: int
    D: int
    Z: np.ndarray = field(repr=False)
    z: np.ndarray = field(repr=False)
    z_cp: tuple = field(repr=False)

    @property
    def N(self) -> int:
        return self.zc.N

    def window_start(self, m: int) -> int:
        """Index of user m's first channel tap in the matched-filter output.

        The +j phase ramp of the shift design advances ``z_m`` by ``D*m``
        samples, so the user's taps land at ``-D*m mod N``.
        """
        self._check_user(m)
        return (-self.D * m) % self.N

    def window(self, m: int) -> np.ndarray:
        return (self.window_start(m) + np.arange(self.L_p)) % self.N

    def _check_user(self, m: int):
        if not 0 <= m < self.M:
            raise ValueError(f"user index {m} out of range for M={self.M}")

    def to_json(self) -> str:
        return json.dumps(
            {"N": self.N, "gamma": self.zc.gamma, "M": self.M, "L_p": self.L_p, "L": self.L, "D": self.D},
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "PreambleSet":
        d = json.loads(text)
        return build_preamble_set(ZcParams(d["N"], d["gamma"]), d["M"], d["L_p"], d["L"], d["D"])


def build_preamble_set(zc: ZcParams, M: int, L_p: int, L: int, D: int | None = None,
                       shift_guard: int = 0) -> PreambleSet:
    """Build the shifted preamble set; ``D`` defaults to ``L_p + shift_guard``."""
    if D is None:
        D = L_p + shift_guard
    N = zc.N
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")
    if L_p < 1:
        raise ValueError(f"L_p must be >= 1, got {L_p}")
    if M > 1 and D < L_p:
        raise ValueError(f"D >= L_p violated: D={D} < L_p={L_p}")
    if M * D > N:
        raise ValueError(f"M*D <= N violated: {M}*{D}={M * D} > {N}")
    if L < L_p:
        raise ValueError(f"L >= L_p violated: L={L} < L_p={L_p}")
    if L >= N:
        raise ValueError(f"L < N violated: L={L} >= N={N}")

    Z1 = zadoff_chu(zc)
    k = np.arange(N)
    ramps = np.exp(1j * 2 * np.pi * np.outer(D * np.arange(M), k) / N)
    Z = Z1[None, :] * ramps
    z = np.stack([idft(row) for row in Z])
    z_cp = tuple(add_cp(row, L) for row in z)
    for arr in (Z, z):
        arr.setflags(write=False)
    return PreambleSet(zc, M, L_p, L, D, Z, z, z_cp)


class Modulation(enum.Enum):
    BPSK = "BPSK"
    QPSK = "QPSK"

    @property
    def bits_per_symbol(self) -> int:
        return 1 if self is Modulation.BPSK else 2

    @classmethod
    def parse(cls, value) -> "Modulation":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ValueError(f"unknown modulation {value!r}; expected BPSK or QPSK") from None


_SQRT1_2 = 1.0 / math.sqrt(2.0)


def map_symbols(bits, modulation) -> np.ndarray:
    """Gray mapping with bit 0 -> +1; QPSK takes bit pairs (real sign, imag sign)."""
    mod = Modulation.parse(modulation)
    b = np.asarray(bits, dtype=np.int8)
    if b.ndim != 1:
        raise ValueError("bits must be one-dimensional")
    if b.size % mod.bits_per_symbol:
        raise ValueError(f"{b.size} bits is not a multiple of {mod.bits_per_symbol} for {mod.value}")
    s = 1.0 - 2.0 * b
    if mod is Modulation.BPSK:
        return s.astype(np.complex128)
    return _SQRT1_2 * (s[0::2] + 1j * s[1::2])


def demap_hard(symbols, modulation) -> np.ndarray:
    mod = Modulation.parse(modulation)
    x = np.asarray(symbols, dtype=np.complex128)
    if mod is Modulation.BPSK:
        return (x.real < 0).astype(np.int8)
    out = np.empty(2 * x.size, dtype=np.int8)
    out[0::2] = x.real < 0
    out[1::2] = x.imag < 0
    return out


@dataclass(frozen=True)
class Frame:
    """One user's transmission: preamble CP block followed by payload CP blocks."""

    user: int
    preamble: CpBlock
    payload: tuple
    n_symbols: int

    def serialize(self) -> np.ndarray:
        return np.concatenate([self.preamble.samples] + [b.samples for b in self.payload])

    def __len__(self) -> int:
        return len(self.preamble) * (1 + len(self.payload))


def frame_user(symbols, pset: PreambleSet, m: int) -> Frame:
    """Place symbols on subcarriers block by block (final block zero padded) behind user m's preamble."""
    pset._check_user(m)
    s = np.asarray(symbols, dtype=np.complex128)
    N, L = pset.N, pset.L
    n_blocks = -(-s.size // N)
    padded = np.zeros(n_blocks * N, dtype=np.complex128)
    padded[:s.size] = s
    payload = tuple(add_cp(idft(blk), L) for blk in padded.reshape(n_blocks, N))
    return Frame(m, pset.z_cp[m], payload, int(s.size))


def payload_spectra(samples, N: int, L: int, n_blocks: int, start: int = 0) -> np.ndarray:
    """DFT of each payload body in an aligned sample stream; shape (n_blocks, N).

    ``start`` is where the first payload block's CP begins.
    """
    x = np.asarray(samples, dtype=np.complex128)
    out = np.empty((n_blocks, N), dtype=np.complex128)
    for b in range(n_blocks):
        off = start + b * (N + L)
        out[b] = dft(remove_cp(CpBlock(x[off:off + N + L], N, L)))
    return out


def deframe(frame: Frame) -> np.ndarray:
    N, L = frame.preamble.body_len, frame.preamble.cp_len
    spectra = payload_spectra(frame.serialize(), N, L, len(frame.payload), start=N + L)
    return spectra.reshape(-1)[:frame.n_symbols]


__all__ = [
    "PSS_LENGTH", "PSS_ROOTS", "ZcParams", "zadoff_chu", "generate_pss", "PreambleSet",
    "build_preamble_set", "Modulation", "map_symbols", "demap_hard", "Frame", "frame_user",
    "payload_spectra", "deframe",
]
