"""Multi-bit watermark: payload digits as rank-residue color classes.

A b-bit message becomes a base-k digit string.  Each step, a keyed uniform
picks a digit position, and the logits of the color class matching that
digit (ranks r with r mod k == digit) get the bias.  Recovery tallies the
observed color per position and takes a majority vote; the hit count against
the intended digits doubles as a detection statistic with null rate 1/k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import as_logits, hash_to_uniform, prf_seed, rank_sort
from .errors import (
    ConfigError,
    InsufficientDataError,
    InvalidInputError,
    RecoveryIncompleteError,
)
from .model import Generator, ToyModel, _checked_prompt, _checked_sequence


def digit_length(bits: int, k: int) -> int:
    """Digits needed for a bits-long message in base k: ceil(bits / log2 k)."""
    if bits < 1:
        raise ConfigError(f"payload must have at least 1 bit, got {bits}")
    if k < 2:
        raise ConfigError(f"base k must be >= 2, got {k}")
    n = max(1, math.ceil(bits / math.log2(k)))
    # guard against float round-off in the ceiling: smallest n with k**n >= 2**bits
    while k**n < 2**bits:
        n += 1
    while n > 1 and k ** (n - 1) >= 2**bits:
        n -= 1
    return n


def _check_bit_string(bits: str) -> str:
    if not isinstance(bits, str) or len(bits) == 0 or set(bits) - {"0", "1"}:
        raise InvalidInputError("payload bits must be a non-empty string of 0s and 1s")
    return bits


def payload_encode(bits: str, k: int) -> np.ndarray:
    """Base-k digits of a big-endian bit string, most significant digit first.

    The digit vector is left-padded with zeros to ceil(b / log2 k) entries.
    """
    _check_bit_string(bits)
    b_tilde = digit_length(len(bits), k)
    value = int(bits, 2)
    digits = np.zeros(b_tilde, dtype=np.int64)
    for i in range(b_tilde - 1, -1, -1):
        digits[i] = value % k
        value //= k
    return digits


def payload_decode(digits, k: int, bits: int) -> str:
    """Inverse of payload_encode; masks back down to the original bit width."""
    arr = np.asarray(digits, dtype=np.int64)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidInputError("digit vector must be non-empty and 1-D")
    if (arr < 0).any() or (arr >= k).any():
        raise InvalidInputError(f"digits must lie in [0, {k})")
    value = 0
    for d in arr:
        value = value * k + int(d)
    value &= (1 << bits) - 1
    return format(value, f"0{bits}b")


@dataclass(frozen=True)
class Payload:
    """A b-bit message and its base-k digit representation."""

    bits: str
    base: int

    def __post_init__(self):
        _check_bit_string(self.bits)
        if self.base < 2:
            raise ConfigError(f"base must be >= 2, got {self.base}")

    @classmethod
    def from_int(cls, value: int, bits: int, base: int) -> "Payload":
        if bits < 1:
            raise ConfigError(f"bits must be >= 1, got {bits}")
        if not 0 <= value < (1 << bits):
            raise ConfigError(f"payload value {value} does not fit in {bits} bits")
        return cls(bits=format(value, f"0{bits}b"), base=base)

    @classmethod
    def from_hex(cls, hex_str: str, bits: int, base: int) -> "Payload":
        text = hex_str.lower().removeprefix("0x")
        try:
            value = int(text, 16)
        except ValueError as exc:
            raise InvalidInputError(f"invalid payload hex {hex_str!r}") from exc
        return cls.from_int(value, bits, base)

    @property
    def bit_length(self) -> int:
        return len(self.bits)

    @property
    def digit_count(self) -> int:
        return digit_length(len(self.bits), self.base)

    @property
    def digits(self) -> np.ndarray:
        return payload_encode(self.bits, self.base)

    def to_int(self) -> int:
        return int(self.bits, 2)

    def to_hex(self) -> str:
        return f"0x{self.to_int():0{(len(self.bits) + 3) // 4}x}"


@dataclass(frozen=True)
class MultiBitConfig:
    """Multi-bit parameters: logit bonus, base, and the message to embed."""

    delta: float = 2.5
    k: int = 4
    payload: Payload | None = None

    def __post_init__(self):
        if not self.delta > 0:
            raise ConfigError(f"delta must be positive, got {self.delta}")
        if self.k < 2:
            raise ConfigError(f"base k must be >= 2, got {self.k}")
        if self.payload is None:
            raise ConfigError("multi-bit embedding requires a payload")
        if self.payload.base != self.k:
            raise ConfigError(
                f"payload base {self.payload.base} does not match config k={self.k}"
            )


@dataclass(frozen=True)
class TallyTable:
    """counts[p, d]: how often color d was observed at digit position p."""

    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def to_lists(self) -> list[list[int]]:
        return [[int(c) for c in row] for row in self.counts]


@dataclass(frozen=True)
class MultiBitReport:
    """Recovery outcome: voted digits, decoded bits, and the hit statistic.

    ``self_referential`` marks z-scores computed against the recovered digits
    rather than a known payload; those are optimistically biased and should
    not be compared against a fixed detection threshold.
    """

    digits: np.ndarray
    bits: str
    hits: int
    positions: int
    z: float
    tally: TallyTable
    self_referential: bool

    @property
    def bits_hex(self) -> str:
        return f"0x{int(self.bits, 2):0{(len(self.bits) + 3) // 4}x}"

    def to_dict(self) -> dict:
        return {
            "mode": "multi-bit",
            "G": self.hits,
            "N": self.positions,
            "z": self.z,
            "digits": [int(d) for d in self.digits],
            "bits_hex": self.bits_hex,
            "tally": self.tally.to_lists(),
            "self_referential": self.self_referential,
        }


def zscore_color(hits: int, positions: int, k: int) -> float:
    """Standardized hit count under the 1/k color null."""
    if positions <= 0:
        raise InsufficientDataError("no inspected positions")
    p0 = 1.0 / k
    return (hits - positions * p0) / math.sqrt(positions * p0 * (1.0 - p0))


def multibit_step(logits, prev_token: int, key: int, cfg: MultiBitConfig):
    """One embedding step.

    The keyed uniform picks digit position p = min(floor(u * b_tilde),
    b_tilde - 1); the logits of ranks congruent to digit d = m[p] mod k gain
    delta.  Returns (chosen token, position, digit, biased logits).
    """
    arr = as_logits(logits)
    if cfg.k > arr.size:
        raise ConfigError(f"base k={cfg.k} exceeds vocabulary size {arr.size}")
    digits = cfg.payload.digits
    b_tilde = digits.size
    u = hash_to_uniform(prf_seed(prev_token), key)
    pos = min(int(u * b_tilde), b_tilde - 1)
    d = int(digits[pos])
    perm = rank_sort(arr)
    biased = arr.copy()
    biased[perm.order[d :: cfg.k]] += cfg.delta
    return int(np.argmax(biased)), pos, d, biased


def multibit_generate(
    model: Generator,
    prompt,
    key: int,
    cfg: MultiBitConfig,
    max_tokens: int,
    return_trace: bool = False,
):
    """Greedy decoding with one payload digit embedded per step.

    Returns the full token sequence; with ``return_trace`` also the digit
    position and digit used at each step.
    """
    tokens = _checked_prompt(model, prompt)
    if max_tokens < 0:
        raise InvalidInputError(f"max_tokens must be >= 0, got {max_tokens}")
    if cfg.k > model.vocab_size:
        raise ConfigError(f"base k={cfg.k} exceeds vocabulary size {model.vocab_size}")
    if isinstance(model, ToyModel):
        out, positions, digs = kernels.mb_generate(
            tokens, max_tokens, key, cfg.delta, cfg.k, cfg.payload.digits, model.kernel_params
        )
    else:
        seq = list(tokens)
        pos_list, dig_list = [], []
        for _ in range(max_tokens):
            logits = model.next_logits(np.asarray(seq, dtype=np.int64))
            chosen, pos, d, _ = multibit_step(logits, seq[-1], key, cfg)
            seq.append(chosen)
            pos_list.append(pos)
            dig_list.append(d)
            if chosen == model.eos:
                break
        out = np.asarray(seq, dtype=np.int64)
        positions = np.asarray(pos_list, dtype=np.int64)
        digs = np.asarray(dig_list, dtype=np.int64)
    if return_trace:
        return out, positions, digs
    return out


def multibit_recover(
    model: Generator,
    tokens,
    prompt_len: int,
    key: int,
    k: int,
    bits: int,
    expected: Payload | None = None,
) -> MultiBitReport:
    """Recover the payload and score the watermark in one pass.

    Every generated position contributes one (position, observed color)
    tally entry; digits are recovered by per-position majority vote (ties to
    the smallest digit).  When ``expected`` is given, hits count matches
    against its digits; otherwise they are counted against the recovered
    digits and the report is flagged self-referential.
    """
    seq = _checked_sequence(model, tokens)
    if prompt_len < 1:
        raise InvalidInputError(f"prompt_len must be >= 1, got {prompt_len}")
    if seq.size <= prompt_len:
        raise InsufficientDataError(
            f"sequence of length {seq.size} has no generated positions after prompt_len {prompt_len}"
        )
    if k > model.vocab_size:
        raise ConfigError(f"base k={k} exceeds vocabulary size {model.vocab_size}")
    if expected is not None and (expected.base != k or expected.bit_length != bits):
        raise ConfigError("expected payload does not match the recovery base/bit width")
    b_tilde = digit_length(bits, k)
    if isinstance(model, ToyModel):
        counts, _, _ = kernels.mb_recover(seq, prompt_len, key, k, b_tilde, model.kernel_params)
    else:
        counts = np.zeros((b_tilde, k), dtype=np.int64)
        for t in range(prompt_len, seq.size):
            logits = model.next_logits(seq[:t])
            u = hash_to_uniform(prf_seed(int(seq[t - 1])), key)
            pos = min(int(u * b_tilde), b_tilde - 1)
            d = rank_sort(logits).rank_of(int(seq[t])) % k
            counts[pos, d] += 1
    uncovered = [p for p in range(b_tilde) if counts[p].sum() == 0]
    if uncovered:
        raise RecoveryIncompleteError(uncovered)
    recovered = counts.argmax(axis=1).astype(np.int64)  # first max = smallest digit
    positions = int(counts.sum())
    if expected is not None:
        hits = int(counts[np.arange(b_tilde), expected.digits].sum())
        self_referential = False
    else:
        hits = int(counts[np.arange(b_tilde), recovered].sum())
        self_referential = True
    return MultiBitReport(
        digits=recovered,
        bits=payload_decode(recovered, k, bits),
        hits=hits,
        positions=positions,
        z=zscore_color(hits, positions, k),
        tally=TallyTable(counts=counts),
        self_referential=self_referential,
    )
