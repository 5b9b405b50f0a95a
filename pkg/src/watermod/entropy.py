"""Entropy measures and the entropy-adaptive gate for the zero-bit watermark.

Two concentration measures are supported: Shannon entropy in bits, and the
spike measure sum(p / (1 + eta * p)) which saturates faster on peaked
distributions.  Both are normalized by their flat-distribution maximum so the
gate exponent applies unchanged to either kind.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import validate_probs
from .errors import ConfigError, InvalidInputError

KIND_SHANNON = "shannon"
KIND_SPIKE = "spike"


@dataclass(frozen=True)
class EntropyKind:
    """Which concentration measure drives the gate (eta applies to spike only)."""

    kind: str = KIND_SHANNON
    eta: float = 1.0

    def __post_init__(self):
        if self.kind not in (KIND_SHANNON, KIND_SPIKE):
            raise ConfigError(f"unknown entropy kind {self.kind!r}")
        if self.kind == KIND_SPIKE and not self.eta > 0:
            raise ConfigError(f"spike entropy requires eta > 0, got {self.eta}")


@dataclass(frozen=True)
class GateConfig:
    """Entropy gate settings: measure plus the steepness exponent."""

    h_scale: float = 1.2
    entropy: EntropyKind = field(default_factory=EntropyKind)

    def __post_init__(self):
        if not self.h_scale > 0:
            raise ConfigError(f"h_scale must be positive, got {self.h_scale}")


def shannon_entropy(probs) -> tuple[float, float]:
    """Shannon entropy in bits and its maximum log2(V) for this vocabulary.

    Uses base-2 logs throughout (0 * log 0 := 0) so the normalized ratio is a
    valid probability for the gate.
    """
    p = validate_probs(probs)
    pos = p[p > 0]
    h = float(-(pos * np.log2(pos)).sum())
    return h, float(np.log2(p.size))


def spike_entropy(probs, eta: float = 1.0) -> tuple[float, float]:
    """Spike measure sum(p / (1 + eta*p)) and its flat-distribution maximum."""
    if not eta > 0:
        raise ConfigError(f"eta must be positive, got {eta}")
    p = validate_probs(probs)
    h = float((p / (1.0 + eta * p)).sum())
    return h, 1.0 / (1.0 + eta / p.size)


def p_odd(h: float, h_max: float, h_scale: float) -> float:
    """Gate probability (h / h_max) ** h_scale, clamped to [0, 1].

    Sharp distributions (h near 0) keep the probability near 0, so the
    even-rank class containing the top token stays green; flat distributions
    push it to 1.  h_scale > 1 steepens the map, h_scale < 1 softens it.
    """
    if not h_max > 0:
        raise ConfigError(f"h_max must be positive, got {h_max} (vocabulary must have V >= 2)")
    if not h_scale > 0:
        raise ConfigError(f"h_scale must be positive, got {h_scale}")
    if h < -1e-12 or h > h_max * (1.0 + 1e-9) + 1e-9:
        raise InvalidInputError(f"entropy {h} outside [0, {h_max}]")
    ratio = min(max(h / h_max, 0.0), 1.0)
    return min(ratio**h_scale, 1.0)


def gate_probability(probs, gate: GateConfig) -> float:
    """p_odd for a probability vector under the given gate configuration."""
    if gate.entropy.kind == KIND_SHANNON:
        h, h_max = shannon_entropy(probs)
    else:
        h, h_max = spike_entropy(probs, gate.entropy.eta)
    return p_odd(h, h_max, gate.h_scale)
