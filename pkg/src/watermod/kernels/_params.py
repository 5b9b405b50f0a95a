"""Flat parameter bundles passed into the sequence kernels.

Plain NamedTuples of scalars so both the numba and the numpy backend accept
them unchanged.  Seeds and keys are carried as np.uint64 to keep all hash
arithmetic in 64-bit wraparound land.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np


class ModelParams(NamedTuple):
    """Toy-model configuration in kernel-ready form."""

    model_seed: np.uint64
    vocab: int
    order: int
    beta: float
    eos_gap: float
    eos: int


class GateParams(NamedTuple):
    """Entropy-gate configuration (ent_code: 0 = shannon, 1 = spike)."""

    h_scale: float
    ent_code: int
    eta: float
