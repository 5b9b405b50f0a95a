"""Deterministic generators: the interface the watermark loops consume, plus
a seedable toy language model with tunable output entropy.

The toy model exists so the statistical machinery can be exercised end to end
at desk scale.  Its two contractual properties are the two the watermark math
actually consumes: ``next_logits`` is a pure function of the prefix (so a
detector can recompute embedding-time logits bit for bit), and the sharpness
knob ``beta`` moves the mean output entropy smoothly from flat (beta = 0) to
nearly one-hot.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np

from . import kernels
from .core import MASK64
from .errors import ConfigError, InvalidInputError
from .kernels import ModelParams


@runtime_checkable
class Generator(Protocol):
    """Anything that deterministically maps a token prefix to next-step logits."""

    vocab_size: int
    eos: int

    def next_logits(self, prefix) -> np.ndarray: ...


@dataclass(frozen=True)
class ToyModelConfig:
    """Toy model knobs.

    vocab_size: number of token ids (>= 8)
    order:      how many trailing tokens are hashed into the context state
    beta:       logit scale; 0 gives a flat distribution, large values sharp ones
    model_seed: 64-bit seed; different seeds give unrelated models
    eos_gap:    how far (in units of beta) the eos logit sits below the others
    """

    vocab_size: int = 64
    order: int = 4
    beta: float = 17.0
    model_seed: int = 1
    eos_gap: float = 2.0

    def __post_init__(self):
        if self.vocab_size < 8:
            raise ConfigError(f"vocab_size must be >= 8, got {self.vocab_size}")
        if self.order < 1:
            raise ConfigError(f"order must be >= 1, got {self.order}")
        if self.beta < 0:
            raise ConfigError(f"beta must be >= 0, got {self.beta}")
        if not 0 <= self.model_seed <= MASK64:
            raise ConfigError("model_seed must fit in 64 bits")
        if self.eos_gap < 0:
            raise ConfigError(f"eos_gap must be >= 0, got {self.eos_gap}")


class ToyModel:
    """Deterministic hash-driven n-gram-style language model.

    Logits for token i are ``beta * u_i`` where ``u_i`` is a uniform derived
    by hashing (context state, token id, model seed).  Token 0 is the
    end-of-sequence token, shifted ``beta * eos_gap`` below the rest so that
    greedy decoding reaches the requested length whenever beta > 0 and any
    logit bias stays under ``2 * beta``.
    """

    def __init__(self, config: ToyModelConfig | None = None, **kwargs):
        self.config = config if config is not None else ToyModelConfig(**kwargs)
        self.eos = 0
        self._params = ModelParams(
            model_seed=np.uint64(self.config.model_seed),
            vocab=self.config.vocab_size,
            order=self.config.order,
            beta=self.config.beta,
            eos_gap=self.config.eos_gap,
            eos=0,
        )

    @property
    def vocab_size(self) -> int:
        return self.config.vocab_size

    @property
    def kernel_params(self) -> ModelParams:
        return self._params

    def reseeded(self, model_seed: int) -> "ToyModel":
        """Same configuration, different (unrelated) model."""
        cfg = self.config
        return ToyModel(
            ToyModelConfig(
                vocab_size=cfg.vocab_size,
                order=cfg.order,
                beta=cfg.beta,
                model_seed=int(model_seed) & MASK64,
                eos_gap=cfg.eos_gap,
            )
        )

    def next_logits(self, prefix) -> np.ndarray:
        tokens = np.asarray(prefix, dtype=np.int64)
        if tokens.ndim != 1 or tokens.size == 0:
            raise InvalidInputError("prefix must be a non-empty 1-D token sequence")
        window = tokens[-self.config.order :]
        if (window < 0).any() or (window >= self.vocab_size).any():
            raise InvalidInputError("prefix contains token ids outside the vocabulary")
        ctx = kernels.fold_context(self.config.model_seed, window)
        return kernels.toy_logits(ctx, self._params)


def _checked_prompt(model: Generator, prompt) -> np.ndarray:
    tokens = np.asarray(prompt, dtype=np.int64)
    if tokens.ndim != 1 or tokens.size == 0:
        raise InvalidInputError("prompt must be a non-empty 1-D token sequence")
    if (tokens < 0).any() or (tokens >= model.vocab_size).any():
        raise InvalidInputError("prompt contains token ids outside the vocabulary")
    return tokens


def _checked_sequence(model: Generator, tokens) -> np.ndarray:
    seq = np.asarray(tokens, dtype=np.int64)
    if seq.ndim != 1:
        raise InvalidInputError("tokens must be a 1-D sequence")
    if (seq < 0).any() or (seq >= model.vocab_size).any():
        raise InvalidInputError(
            f"sequence contains token ids outside the vocabulary of size {model.vocab_size}"
        )
    return seq


def unwatermarked_generate(model: Generator, prompt, max_tokens: int) -> np.ndarray:
    """Greedy argmax decoding with no bias; the watermark-free baseline.

    Returns the full sequence (prompt followed by up to ``max_tokens``
    generated tokens); generation stops early when eos is emitted.
    """
    tokens = _checked_prompt(model, prompt)
    if max_tokens < 0:
        raise InvalidInputError(f"max_tokens must be >= 0, got {max_tokens}")
    if isinstance(model, ToyModel):
        return kernels.greedy_generate(tokens, max_tokens, model.kernel_params)
    out = list(tokens)
    for _ in range(max_tokens):
        logits = model.next_logits(np.asarray(out, dtype=np.int64))
        nxt = int(np.argmax(logits))
        out.append(nxt)
        if nxt == model.eos:
            break
    return np.asarray(out, dtype=np.int64)
