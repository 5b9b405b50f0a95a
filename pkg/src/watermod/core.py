"""Shared primitives: softmax, keyed hashing, rank permutations, residue classes.

Everything here is a pure function of its inputs.  The hash layer is plain
64-bit integer arithmetic, so embedder and detector reconstruct identical
pseudorandom choices on any platform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InvalidInputError

MASK64 = (1 << 64) - 1

# splitmix64 round constants (Steele, Lea & Flood's finalizer).
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# 2**52; uniform draws keep the top 52 hash bits so the half-offset sum
# stays exactly representable in a float64.
_U52 = 4503599627370496.0


def splitmix64(x: int) -> int:
    """One splitmix64 mixing round over 64-bit wraparound arithmetic."""
    z = (int(x) + _GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return (z ^ (z >> 31)) & MASK64


def splitmix64_array(x: np.ndarray) -> np.ndarray:
    """Vectorized :func:`splitmix64` over a uint64 array."""
    z = x.astype(np.uint64, copy=True)
    z += np.uint64(_GAMMA)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


def prf_seed(prev_token: int) -> int:
    """Pseudorandom 64-bit seed derived from the previous token id."""
    if prev_token < 0:
        raise InvalidInputError(f"token id must be non-negative, got {prev_token}")
    return splitmix64(prev_token)


def hash_to_uniform(seed: int, key: int) -> float:
    """Keyed uniform draw, strictly inside (0, 1).

    Mixes ``seed XOR key`` through splitmix64 and maps the top 52 bits to
    ``(h + 0.5) / 2**52``.  Every step is exact in float64, so the value is
    bit-identical across platforms and never touches either endpoint.
    """
    h = splitmix64((int(seed) ^ int(key)) & MASK64)
    return ((h >> 12) + 0.5) / _U52


def uniform_from_array(h: np.ndarray) -> np.ndarray:
    """Map an array of 64-bit hashes to uniforms in (0, 1), as hash_to_uniform."""
    return ((h >> np.uint64(12)).astype(np.float64) + 0.5) / _U52


@dataclass(frozen=True)
class WatermarkKey:
    """Secret 64-bit watermarking key."""

    key: int

    def __post_init__(self):
        if not 0 <= self.key <= MASK64:
            raise ConfigError(f"key must fit in 64 bits, got {self.key}")

    def __index__(self) -> int:
        return self.key

    def fingerprint(self) -> str:
        """Public identifier for logs and report metadata; never the key itself."""
        return f"0x{splitmix64(self.key):016x}"


def as_logits(logits) -> np.ndarray:
    """Validate and return a 1-D float64 logit vector."""
    arr = np.asarray(logits, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidInputError("logits must be a non-empty 1-D vector")
    if not np.isfinite(arr).all():
        raise InvalidInputError("logits must be finite")
    return arr


def softmax(logits) -> np.ndarray:
    """Probabilities proportional to exp(logit), max-shifted for stability."""
    arr = as_logits(logits)
    e = np.exp(arr - arr.max())
    return e / e.sum()


def validate_probs(probs) -> np.ndarray:
    arr = np.asarray(probs, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidInputError("probability vector must be non-empty and 1-D")
    if (arr < 0).any() or (arr > 1).any():
        raise InvalidInputError("probabilities must lie in [0, 1]")
    if abs(arr.sum() - 1.0) > 1e-9:
        raise InvalidInputError(f"probabilities must sum to 1, got {arr.sum()!r}")
    return arr


@dataclass(frozen=True)
class RankPermutation:
    """Descending-probability ordering of token ids.

    ``order[r]`` is the token at rank r (rank 0 = highest logit); ``inverse``
    maps token id back to rank.  Equal logits are ranked by ascending token
    id so embedding and detection always rebuild the same permutation.
    """

    order: np.ndarray
    inverse: np.ndarray

    @property
    def vocab_size(self) -> int:
        return self.order.size

    def rank_of(self, token: int) -> int:
        return int(self.inverse[token])


def rank_sort(logits) -> RankPermutation:
    """Sort token ids by descending logit, breaking ties by ascending id."""
    arr = as_logits(logits)
    # Stable ascending sort of the negated logits gives descending order
    # with ties left in original (ascending id) order.
    order = np.argsort(-arr, kind="stable")
    inverse = np.empty(arr.size, dtype=np.int64)
    inverse[order] = np.arange(arr.size, dtype=np.int64)
    return RankPermutation(order=order.astype(np.int64), inverse=inverse)


@dataclass(frozen=True)
class ResidueClass:
    """Tokens whose ranks share a residue modulo k (one "color" class)."""

    modulus: int
    residue: int
    members: frozenset[int]

    def __len__(self) -> int:
        return len(self.members)


def residue_partition(perm: RankPermutation, k: int) -> list[ResidueClass]:
    """Partition the vocabulary into k classes by rank residue.

    Class d holds exactly the tokens at ranks r with r mod k == d, so the
    top k ranks land in k distinct classes and sizes differ by at most one.
    """
    vocab = perm.vocab_size
    if k < 2:
        raise ConfigError(f"modulus k must be >= 2, got {k}")
    if k > vocab:
        raise ConfigError(f"modulus k={k} exceeds vocabulary size {vocab}")
    return [
        ResidueClass(
            modulus=k,
            residue=d,
            members=frozenset(int(t) for t in perm.order[d::k]),
        )
        for d in range(k)
    ]
