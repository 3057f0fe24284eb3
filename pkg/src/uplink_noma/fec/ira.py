"""Repetition-aided irregular repeat-accumulate (Rep-IRA) code.

Codeword layout: ``[rep branch (rep_factor * K bits) | IRA parity (P bits)]``.

IRA branch construction, fully determined by the IraCodeSpec fields:

* node degrees: info bit counts per degree are ``K * (l_d / d) / sum(l_j / j)``
  (edge-perspective fractions), rounded by largest remainder; bits are
  assigned degrees in ascending order, bit 0 first;
* each info bit is repeated ``d_i`` times into E edge slots. Degree-2 bits
  take evenly spaced slots, one in each half, paired by
  :func:`spread_pairing`; all other
  edges fill the remaining slots in the order of :func:`spread_permutation`
  (an S-random variant of the seeded Fisher-Yates interleaver), so no bit
  has two edges within ``spread`` consecutive slots where avoidable;
* check j XORs the edges in slots ``ceil(jE/P) .. ceil((j+1)E/P) - 1``;
* parity ``p_j = p_{j-1} xor c_j`` with ``p_{-1} = 0``.

Decoding runs sum-product on the joint graph: the repetition observations
feed the info nodes directly and the accumulator chain is processed with an
exact forward-backward pass every sweep.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numba
import numpy as np

from .interleaver import splitmix64
from .repetition import SisoOutput
from .soft import clamp_llr

DEFAULT_DEGREES = (2, 3, 10, 30)
DEFAULT_FRACTIONS = (0.171579, 0.284322, 0.030637, 0.513463)
_BIG = 1e3  # LLR of a known-zero bit inside the decoder


@dataclass(frozen=True)
class IraCodeSpec:
    info_len: int = 410
    codeword_len: int = 4096
    rep_factor: int = 5
    degrees: tuple = DEFAULT_DEGREES
    fractions: tuple = DEFAULT_FRACTIONS
    seed: int = 20170301
    target_rate: float = 0.1
    spread: int = 32
    pair_spread: int = 10

    def __post_init__(self):
        object.__setattr__(self, "degrees", tuple(int(d) for d in self.degrees))
        object.__setattr__(self, "fractions", tuple(float(f) for f in self.fractions))
        if len(self.degrees) != len(self.fractions) or not self.degrees:
            raise ValueError("degrees and fractions must be non-empty and of equal length")
        # the default fractions sum to 1.000001, exactly at the tolerance
        if abs(sum(self.fractions) - 1.0) > 1e-6 + 1e-12:
            raise ValueError(f"edge fractions sum to {sum(self.fractions)}, expected 1")
        if min(self.degrees) < 1:
            raise ValueError("variable degrees must be >= 1")
        if self.parity_len < 1:
            raise ValueError(
                f"infeasible code: repetition branch ({self.rep_factor * self.info_len}) "
                f"leaves no room in {self.codeword_len} bits"
            )
        if abs(self.rate - self.target_rate) > 0.005 * self.target_rate:
            raise ValueError(f"realized rate {self.rate:.5f} is not within 0.5% of {self.target_rate}")

    @property
    def rate(self) -> float:
        return self.info_len / self.codeword_len

    @property
    def parity_len(self) -> int:
        return self.codeword_len - self.rep_factor * self.info_len

    def node_counts(self) -> np.ndarray:
        """Info bits per degree, largest-remainder rounding to sum to K."""
        w = np.array(self.fractions) / np.array(self.degrees)
        exact = self.info_len * w / w.sum()
        counts = np.floor(exact).astype(int)
        short = self.info_len - counts.sum()
        order = np.argsort(-(exact - counts), kind="stable")
        counts[order[:short]] += 1
        return counts

    def to_json(self) -> str:
        return json.dumps({
            "info_len": self.info_len, "codeword_len": self.codeword_len,
            "rep_factor": self.rep_factor, "degrees": list(self.degrees),
            "fractions": list(self.fractions), "seed": self.seed,
            "target_rate": self.target_rate, "spread": self.spread,
            "pair_spread": self.pair_spread,
        }, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "IraCodeSpec":
        d = json.loads(text)
        return cls(**d)


@dataclass(frozen=True)
class _Graph:
    node_degree: np.ndarray    # (K,)
    edge_var: np.ndarray       # (E,) info node of each edge, in check order
    check_ptr: np.ndarray      # (P + 1,) CSR offsets into edge_var


def spread_permutation(owner, spread: int, seed: int, tries: int = 64) -> np.ndarray:
    """Order the sockets so equal ``owner`` values sit at least ``spread`` apart.

    Position by position, draw ``r = splitmix64 % len(pool)``; accept
    ``pool[r]`` if its owner is not among the previous ``spread`` accepted
    owners, otherwise redraw, taking the last draw after ``tries`` attempts.
    An accepted entry is removed by swapping in the pool's last element.
    Returns socket indices in check order.
    """
    owner = np.asarray(owner)
    pool = list(range(owner.size))
    rand = splitmix64(seed)
    order = []
    recent = {}
    for pos in range(owner.size):
        for _ in range(tries):
            r = next(rand) % len(pool)
            last = recent.get(int(owner[pool[r]]), -spread - 1)
            if pos - last > spread:
                break
        sock = pool[r]
        pool[r] = pool[-1]
        pool.pop()
        order.append(sock)
        recent[int(owner[sock])] = pos
    return np.array(order, dtype=np.int64)


def spread_pairing(n: int, spread: int, seed: int, tries: int = 2000, restarts: int = 50) -> np.ndarray:
    """Permutation ``pi`` of range(n) with ``|i - j| + |pi(i) - pi(j)| > spread`` for all i != j
    (only pairs closer than ``spread`` in i can violate this, so only those are checked).

    Draws come from one SplitMix64 stream as in :func:`spread_permutation`; a
    position that finds no admissible value in ``tries`` draws restarts the
    construction, continuing the same stream.
    """
    rand = splitmix64(seed)
    for _ in range(restarts):
        pool = list(range(n))
        out = []
        for i in range(n):
            for _ in range(tries):
                r = next(rand) % len(pool)
                c = pool[r]
                if all(abs(i - j) + abs(c - out[j]) > spread for j in range(max(0, i - spread), i)):
                    break
            else:
                break
            out.append(c)
            pool[r] = pool[-1]
            pool.pop()
        if len(out) == n:
            return np.array(out, dtype=np.int64)
    raise ValueError(f"no pairing of {n} points with spread {spread} found")


def _build_graph(spec: IraCodeSpec) -> _Graph:
    counts = spec.node_counts()
    if np.any(counts < 0):
        raise ValueError("infeasible degree allocation")
    node_degree = np.repeat(np.array(spec.degrees), counts)
    E, P = int(node_degree.sum()), spec.parity_len
    if E == 0:
        raise ValueError("degree allocation produced no IRA edges")
    edge_var = np.full(E, -1, dtype=np.int64)

    # Degree-2 bits: 2*n2 evenly spaced slots, starts in the first half and
    # ends in the second, paired by spread_pairing so no two such bits have
    # both end points close (that would make a light codeword through the
    # accumulator).
    deg2 = np.flatnonzero(node_degree == 2)
    n2 = deg2.size
    if n2:
        slots = ((np.arange(2 * n2) + 0.5) * E / (2 * n2)).astype(np.int64)
        edge_var[slots[:n2]] = deg2
        edge_var[slots[n2 + spread_pairing(n2, spec.pair_spread, spec.seed)]] = deg2

    free = np.flatnonzero(edge_var < 0)
    rest = np.flatnonzero(node_degree != 2)
    sockets = np.repeat(rest, node_degree[rest])
    edge_var[free] = sockets[spread_permutation(sockets, spec.spread, spec.seed)]
    check_ptr = -((-np.arange(P + 1) * E) // P)  # ceil keeps check 0 non-empty
    return _Graph(node_degree, np.ascontiguousarray(edge_var), check_ptr.astype(np.int64))


@numba.njit(cache=True)
def _boxplus(a, b):
    s = 1.0 if (a >= 0) == (b >= 0) else -1.0
    if a == 0.0 or b == 0.0:
        return 0.0
    m = min(abs(a), abs(b))
    return s * m + np.log1p(np.exp(-abs(a + b))) - np.log1p(np.exp(-abs(a - b)))


@numba.njit(cache=True)
def _decode(a, lp, edge_var, check_ptr, n_iter):
    """Returns (info posterior, parity posterior)."""
    K = a.size
    P = lp.size
    E = edge_var.size
    c2v = np.zeros(E)
    v2c = np.zeros(E)
    tot = a.copy()
    lc = np.empty(P)
    ext_c = np.empty(P)
    f = np.empty(P)
    b = np.empty(P)
    post_p = lp.copy()
    for _ in range(n_iter):
        for e in range(E):
            v2c[e] = tot[edge_var[e]] - c2v[e]
        for j in range(P):
            acc = _BIG
            for e in range(check_ptr[j], check_ptr[j + 1]):
                acc = _boxplus(acc, v2c[e])
            lc[j] = acc
        # accumulator forward-backward
        f[0] = lc[0] + lp[0]
        for j in range(1, P):
            f[j] = _boxplus(f[j - 1], lc[j]) + lp[j]
        b[P - 1] = 0.0
        for j in range(P - 1, 0, -1):
            b[j - 1] = _boxplus(lc[j], b[j] + lp[j])
        ext_c[0] = b[0] + lp[0]
        for j in range(1, P):
            ext_c[j] = _boxplus(f[j - 1], b[j] + lp[j])
        for j in range(P):
            post_p[j] = f[j] + b[j]
        # check -> variable
        for j in range(P):
            lo = check_ptr[j]
            hi = check_ptr[j + 1]
            for e in range(lo, hi):
                acc = ext_c[j]
                for e2 in range(lo, hi):
                    if e2 != e:
                        acc = _boxplus(acc, v2c[e2])
                c2v[e] = acc
        for i in range(K):
            tot[i] = a[i]
        for e in range(E):
            tot[edge_var[e]] += c2v[e]
    return tot, post_p


@dataclass(frozen=True)
class RepIraCode:
    spec: IraCodeSpec = field(default_factory=IraCodeSpec)

    @cached_property
    def graph(self) -> _Graph:
        return _build_graph(self.spec)

    @property
    def info_len(self) -> int:
        return self.spec.info_len

    @property
    def codeword_len(self) -> int:
        return self.spec.codeword_len

    @property
    def rate(self) -> float:
        return self.spec.rate

    def encode(self, bits) -> np.ndarray:
        u = np.asarray(bits, dtype=np.int64)
        if u.size != self.spec.info_len:
            raise ValueError(f"expected {self.spec.info_len} info bits, got {u.size}")
        g = self.graph
        rep = np.repeat(u, self.spec.rep_factor)
        edge_bits = u[g.edge_var]
        check_of_edge = np.repeat(np.arange(self.spec.parity_len), np.diff(g.check_ptr))
        c = np.bincount(check_of_edge, weights=edge_bits, minlength=self.spec.parity_len).astype(np.int64) % 2
        parity = np.cumsum(c) % 2
        return np.concatenate([rep, parity]).astype(np.int8)

    def siso(self, llr, iterations: int = 5) -> SisoOutput:
        llr = np.asarray(llr, dtype=float)
        if llr.size != self.spec.codeword_len:
            raise ValueError(f"expected {self.spec.codeword_len} LLRs, got {llr.size}")
        K, r = self.spec.info_len, self.spec.rep_factor
        rep_in = llr[:K * r]
        par_in = llr[K * r:]
        a = rep_in.reshape(K, r).sum(axis=1)
        g = self.graph
        post_u, post_p = _decode(a, np.ascontiguousarray(par_in), g.edge_var, g.check_ptr, max(int(iterations), 1))
        total = np.concatenate([np.repeat(post_u, r), post_p])
        return SisoOutput(clamp_llr(total - llr), total, clamp_llr(post_u))


@lru_cache(maxsize=16)
def _code_for(spec: IraCodeSpec) -> RepIraCode:
    return RepIraCode(spec)


def ira_encode(bits, spec: IraCodeSpec) -> np.ndarray:
    return _code_for(spec).encode(bits)


def ira_decode_siso(llr, spec: IraCodeSpec, inner_iters: int = 5):
    """Return ``(extrinsic, info, hard)`` for one codeword of channel LLRs."""
    out = _code_for(spec).siso(llr, inner_iters)
    return out.extrinsic, out.info, out.hard
