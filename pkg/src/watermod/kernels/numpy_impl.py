"""Pure-numpy sequence kernels: the fallback backend.

Each function walks a token sequence step by step in Python while keeping the
per-step vocabulary math vectorized.  Semantics match the numba backend; the
two may differ by float rounding in the last ulp (vectorized reductions sum
in a different order), which the test suite bounds explicitly.
"""

from __future__ import annotations

import numpy as np

from ..core import MASK64, splitmix64, splitmix64_array, uniform_from_array
from ._params import GateParams, ModelParams

_SHANNON = 0


def fold_context(model_seed: int, window: np.ndarray) -> int:
    """Hash a context window (last n token ids) into one 64-bit state."""
    c = int(model_seed)
    for t in window:
        c = splitmix64(c ^ int(t))
    return c


def toy_logits(ctx: int, mp: ModelParams) -> np.ndarray:
    """Logit vector for one context hash: beta-scaled keyed uniforms.

    Token 0 is the end-of-sequence token; its uniform is shifted down by
    eos_gap so it ranks last whenever beta > 0 yet stays equal to the rest
    in the flat beta = 0 case.
    """
    ids = np.arange(mp.vocab, dtype=np.uint64)
    h = splitmix64_array(splitmix64_array(np.uint64(ctx) ^ ids) ^ np.uint64(mp.model_seed))
    u = uniform_from_array(h)
    logits = mp.beta * u
    logits[mp.eos] = mp.beta * (u[mp.eos] - mp.eos_gap)
    return logits


def _window_logits(tokens: np.ndarray, t: int, mp: ModelParams) -> np.ndarray:
    lo = t - mp.order
    if lo < 0:
        lo = 0
    return toy_logits(fold_context(int(mp.model_seed), tokens[lo:t]), mp)


def _gate_prob(logits: np.ndarray, gp: GateParams) -> float:
    p = np.exp(logits - logits.max())
    p /= p.sum()
    if gp.ent_code == _SHANNON:
        pos = p[p > 0]
        h = float(-(pos * np.log2(pos)).sum())
        h_max = float(np.log2(p.size))
    else:
        h = float((p / (1.0 + gp.eta * p)).sum())
        h_max = 1.0 / (1.0 + gp.eta / p.size)
    ratio = min(max(h / h_max, 0.0), 1.0)
    return min(ratio**gp.h_scale, 1.0)


def _step_uniform(prev_token: int, key: int) -> float:
    h = splitmix64((splitmix64(prev_token) ^ int(key)) & MASK64)
    return ((h >> 12) + 0.5) / 4503599627370496.0


def _rank_order(logits: np.ndarray) -> np.ndarray:
    return np.argsort(-logits, kind="stable")


def greedy_generate(prompt: np.ndarray, n_new: int, mp: ModelParams) -> np.ndarray:
    """Unbiased argmax decoding; stops after the eos token is emitted."""
    tokens = np.empty(prompt.size + n_new, dtype=np.int64)
    tokens[: prompt.size] = prompt
    n = 0
    for step in range(n_new):
        t = prompt.size + step
        logits = _window_logits(tokens, t, mp)
        tokens[t] = int(np.argmax(logits))
        n += 1
        if tokens[t] == mp.eos:
            break
    return tokens[: prompt.size + n].copy()


def zb_generate(
    prompt: np.ndarray,
    n_new: int,
    key: np.uint64,
    delta: float,
    gp: GateParams,
    mp: ModelParams,
) -> tuple[np.ndarray, np.ndarray]:
    """Zero-bit embedding loop; returns (tokens, per-step green parity)."""
    tokens = np.empty(prompt.size + n_new, dtype=np.int64)
    tokens[: prompt.size] = prompt
    parities = np.empty(n_new, dtype=np.int64)
    n = 0
    for step in range(n_new):
        t = prompt.size + step
        logits = _window_logits(tokens, t, mp)
        g = 1 if _step_uniform(int(tokens[t - 1]), int(key)) < _gate_prob(logits, gp) else 0
        order = _rank_order(logits)
        logits[order[g::2]] += delta
        tokens[t] = int(np.argmax(logits))
        parities[n] = g
        n += 1
        if tokens[t] == mp.eos:
            break
    return tokens[: prompt.size + n].copy(), parities[:n].copy()


def zb_detect(
    tokens: np.ndarray,
    prompt_len: int,
    key: np.uint64,
    gp: GateParams,
    mp: ModelParams,
) -> tuple[int, np.ndarray, np.ndarray]:
    """Zero-bit detection loop over recomputed (unbiased) logits.

    Returns (green hit count, reconstructed parities, per-position hits).
    """
    n = tokens.size - prompt_len
    parities = np.empty(n, dtype=np.int64)
    hits = np.empty(n, dtype=np.int64)
    g_count = 0
    for idx in range(n):
        t = prompt_len + idx
        logits = _window_logits(tokens, t, mp)
        g = 1 if _step_uniform(int(tokens[t - 1]), int(key)) < _gate_prob(logits, gp) else 0
        order = _rank_order(logits)
        inverse = np.empty(mp.vocab, dtype=np.int64)
        inverse[order] = np.arange(mp.vocab, dtype=np.int64)
        hit = 1 if inverse[tokens[t]] % 2 == g else 0
        g_count += hit
        parities[idx] = g
        hits[idx] = hit
    return g_count, parities, hits


def mb_generate(
    prompt: np.ndarray,
    n_new: int,
    key: np.uint64,
    delta: float,
    k: int,
    digits: np.ndarray,
    mp: ModelParams,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Multi-bit embedding loop; returns (tokens, digit positions, digits)."""
    b_tilde = digits.size
    tokens = np.empty(prompt.size + n_new, dtype=np.int64)
    tokens[: prompt.size] = prompt
    positions = np.empty(n_new, dtype=np.int64)
    step_digits = np.empty(n_new, dtype=np.int64)
    n = 0
    for step in range(n_new):
        t = prompt.size + step
        logits = _window_logits(tokens, t, mp)
        u = _step_uniform(int(tokens[t - 1]), int(key))
        pos = min(int(u * b_tilde), b_tilde - 1)
        d = int(digits[pos])
        order = _rank_order(logits)
        logits[order[d::k]] += delta
        tokens[t] = int(np.argmax(logits))
        positions[n] = pos
        step_digits[n] = d
        n += 1
        if tokens[t] == mp.eos:
            break
    return tokens[: prompt.size + n].copy(), positions[:n].copy(), step_digits[:n].copy()


def mb_recover(
    tokens: np.ndarray,
    prompt_len: int,
    key: np.uint64,
    k: int,
    b_tilde: int,
    mp: ModelParams,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Multi-bit observation loop.

    Returns (tally counts of shape (b_tilde, k), positions, observed colors).
    """
    n = tokens.size - prompt_len
    counts = np.zeros((b_tilde, k), dtype=np.int64)
    positions = np.empty(n, dtype=np.int64)
    colors = np.empty(n, dtype=np.int64)
    for idx in range(n):
        t = prompt_len + idx
        logits = _window_logits(tokens, t, mp)
        u = _step_uniform(int(tokens[t - 1]), int(key))
        pos = min(int(u * b_tilde), b_tilde - 1)
        order = _rank_order(logits)
        inverse = np.empty(mp.vocab, dtype=np.int64)
        inverse[order] = np.arange(mp.vocab, dtype=np.int64)
        d = int(inverse[tokens[t]]) % k
        counts[pos, d] += 1
        positions[idx] = pos
        colors[idx] = d
    return counts, positions, colors
