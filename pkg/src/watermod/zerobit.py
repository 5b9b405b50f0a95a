"""Zero-bit watermark: parity-class logit biasing and sequence-level detection.

Embedding sorts the vocabulary by probability, lets an entropy-driven keyed
coin pick whether even or odd ranks are green, raises every green logit by
delta and decodes greedily.  Detection replays the same construction on
recomputed (unbiased) logits and tests the green hit count against the fair
binomial null.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .core import as_logits, hash_to_uniform, prf_seed, rank_sort, softmax
from .entropy import KIND_SHANNON, GateConfig, gate_probability
from .errors import ConfigError, InsufficientDataError, InvalidInputError
from .kernels import GateParams
from .model import Generator, ToyModel, _checked_prompt, _checked_sequence


@dataclass(frozen=True)
class ZeroBitConfig:
    """Zero-bit parameters: logit bonus, entropy gate, decision threshold."""

    delta: float = 1.0
    gate: GateConfig = field(default_factory=GateConfig)
    tau: float = 4.0

    def __post_init__(self):
        if not self.delta > 0:
            raise ConfigError(f"delta must be positive, got {self.delta}")


@dataclass(frozen=True)
class ZeroBitReport:
    """Detection outcome for one sequence."""

    green_hits: int
    positions: int
    z: float
    tau: float
    watermarked: bool

    def to_dict(self) -> dict:
        return {
            "mode": "zero-bit",
            "G": self.green_hits,
            "N": self.positions,
            "z": self.z,
            "tau": self.tau,
            "watermarked": self.watermarked,
            "digits": None,
            "bits_hex": None,
            "tally": None,
        }


def zscore_parity(green_hits: int, positions: int) -> float:
    """Standardized green count under the fair null: (G - N/2) / sqrt(N/4)."""
    if positions <= 0:
        raise InsufficientDataError("no inspected positions")
    return (green_hits - positions / 2.0) / math.sqrt(positions / 4.0)


def _gate_params(gate: GateConfig) -> GateParams:
    code = 0 if gate.entropy.kind == KIND_SHANNON else 1
    return GateParams(h_scale=gate.h_scale, ent_code=code, eta=gate.entropy.eta)


def green_parity(logits, prev_token: int, key: int, gate: GateConfig) -> int:
    """Keyed gate decision: 1 means odd ranks are green this step."""
    u = hash_to_uniform(prf_seed(prev_token), key)
    return 1 if u < gate_probability(softmax(logits), gate) else 0


def zerobit_step(logits, prev_token: int, key: int, cfg: ZeroBitConfig):
    """One embedding step.

    Returns (chosen token, green parity g, biased logits).  Exactly the
    logits at ranks r with r mod 2 == g are raised by delta; the chosen
    token is the greedy pick from the biased scores (ties to lowest id).
    """
    arr = as_logits(logits)
    if arr.size < 2:
        raise ConfigError("zero-bit watermarking needs a vocabulary of at least 2")
    g = green_parity(arr, prev_token, key, cfg.gate)
    perm = rank_sort(arr)
    biased = arr.copy()
    biased[perm.order[g::2]] += cfg.delta
    return int(np.argmax(biased)), g, biased


def zerobit_generate(
    model: Generator,
    prompt,
    key: int,
    cfg: ZeroBitConfig,
    max_tokens: int,
    return_parities: bool = False,
):
    """Greedy autoregressive decoding with the zero-bit bias at every step.

    Returns the full token sequence (prompt included); with
    ``return_parities`` also the per-step green parity the embedder used.
    Stops at ``max_tokens`` or when the model's eos token is emitted.
    """
    tokens = _checked_prompt(model, prompt)
    if max_tokens < 0:
        raise InvalidInputError(f"max_tokens must be >= 0, got {max_tokens}")
    if isinstance(model, ToyModel):
        out, parities = kernels.zb_generate(
            tokens, max_tokens, key, cfg.delta, _gate_params(cfg.gate), model.kernel_params
        )
    else:
        seq = list(tokens)
        pars = []
        for _ in range(max_tokens):
            logits = model.next_logits(np.asarray(seq, dtype=np.int64))
            chosen, g, _ = zerobit_step(logits, seq[-1], key, cfg)
            seq.append(chosen)
            pars.append(g)
            if chosen == model.eos:
                break
        out = np.asarray(seq, dtype=np.int64)
        parities = np.asarray(pars, dtype=np.int64)
    if return_parities:
        return out, parities
    return out


def zerobit_detect(
    model: Generator,
    tokens,
    prompt_len: int,
    key: int,
    cfg: ZeroBitConfig,
    return_parities: bool = False,
):
    """Score a sequence for the zero-bit watermark.

    Recomputes the unbiased logits for every generated position from the
    true prefix, rebuilds the keyed gate decision, and counts how often the
    observed token's rank parity matches it.  Positions before ``prompt_len``
    are context only and never counted.
    """
    seq = _checked_sequence(model, tokens)
    if prompt_len < 1:
        raise InvalidInputError(f"prompt_len must be >= 1, got {prompt_len}")
    if seq.size <= prompt_len:
        raise InsufficientDataError(
            f"sequence of length {seq.size} has no generated positions after prompt_len {prompt_len}"
        )
    if isinstance(model, ToyModel):
        hits, parities, _ = kernels.zb_detect(
            seq, prompt_len, key, _gate_params(cfg.gate), model.kernel_params
        )
    else:
        hits = 0
        pars = []
        for t in range(prompt_len, seq.size):
            logits = model.next_logits(seq[:t])
            g = green_parity(logits, int(seq[t - 1]), key, cfg.gate)
            rank = rank_sort(logits).rank_of(int(seq[t]))
            hits += 1 if rank % 2 == g else 0
            pars.append(g)
        parities = np.asarray(pars, dtype=np.int64)
    positions = seq.size - prompt_len
    z = zscore_parity(int(hits), positions)
    report = ZeroBitReport(
        green_hits=int(hits),
        positions=positions,
        z=z,
        tau=cfg.tau,
        watermarked=z > cfg.tau,
    )
    if return_parities:
        return report, parities
    return report
