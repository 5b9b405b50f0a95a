"""Numba-compiled sequence kernels: the default backend.

Same contracts as numpy_impl; whole sequence loops run inside @njit so the
Monte-Carlo harnesses stay fast.  All hash arithmetic is uint64 wraparound,
bit-identical to the pure-python reference in core.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from ._params import ModelParams

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S12 = np.uint64(12)
_U52 = 4503599627370496.0


@njit(cache=True, inline="always")
def _smix(x):
    z = x + _GAMMA
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


@njit(cache=True, inline="always")
def _u01(h):
    return (np.float64(h >> _S12) + 0.5) / _U52


@njit(cache=True)
def _fold(model_seed, window):
    c = model_seed
    for j in range(window.size):
        c = _smix(c ^ np.uint64(window[j]))
    return c


@njit(cache=True)
def _toy_logits(ctx, mp):
    logits = np.empty(mp.vocab, dtype=np.float64)
    for i in range(mp.vocab):
        u = _u01(_smix(_smix(ctx ^ np.uint64(i)) ^ mp.model_seed))
        if i == mp.eos:
            logits[i] = mp.beta * (u - mp.eos_gap)
        else:
            logits[i] = mp.beta * u
    return logits


@njit(cache=True)
def _window_logits(tokens, t, mp):
    lo = t - mp.order
    if lo < 0:
        lo = 0
    return _toy_logits(_fold(mp.model_seed, tokens[lo:t]), mp)


@njit(cache=True)
def _gate_prob(logits, gp):
    v = logits.size
    m = logits[0]
    for i in range(1, v):
        if logits[i] > m:
            m = logits[i]
    p = np.empty(v, dtype=np.float64)
    s = 0.0
    for i in range(v):
        p[i] = np.exp(logits[i] - m)
        s += p[i]
    if gp.ent_code == 0:
        h = 0.0
        for i in range(v):
            q = p[i] / s
            if q > 0.0:
                h -= q * np.log2(q)
        h_max = np.log2(np.float64(v))
    else:
        h = 0.0
        for i in range(v):
            q = p[i] / s
            h += q / (1.0 + gp.eta * q)
        h_max = 1.0 / (1.0 + gp.eta / v)
    ratio = h / h_max
    if ratio < 0.0:
        ratio = 0.0
    elif ratio > 1.0:
        ratio = 1.0
    po = ratio**gp.h_scale
    if po > 1.0:
        po = 1.0
    return po


@njit(cache=True, inline="always")
def _step_uniform(prev_token, key):
    return _u01(_smix(_smix(np.uint64(prev_token)) ^ key))


@njit(cache=True)
def _add_bias(logits, order, start, step, delta):
    for r in range(start, logits.size, step):
        logits[order[r]] += delta


@njit(cache=True)
def _rank_of(order, token):
    for r in range(order.size):
        if order[r] == token:
            return r
    return -1


@njit(cache=True)
def greedy_generate(prompt, n_new, mp):
    tokens = np.empty(prompt.size + n_new, dtype=np.int64)
    tokens[: prompt.size] = prompt
    n = 0
    for step in range(n_new):
        t = prompt.size + step
        logits = _window_logits(tokens, t, mp)
        tokens[t] = np.argmax(logits)
        n += 1
        if tokens[t] == mp.eos:
            break
    return tokens[: prompt.size + n].copy()


@njit(cache=True)
def zb_generate(prompt, n_new, key, delta, gp, mp):
    tokens = np.empty(prompt.size + n_new, dtype=np.int64)
    tokens[: prompt.size] = prompt
    parities = np.empty(n_new, dtype=np.int64)
    n = 0
    for step in range(n_new):
        t = prompt.size + step
        logits = _window_logits(tokens, t, mp)
        g = 1 if _step_uniform(tokens[t - 1], key) < _gate_prob(logits, gp) else 0
        order = np.argsort(-logits, kind="mergesort")
        _add_bias(logits, order, g, 2, delta)
        tokens[t] = np.argmax(logits)
        parities[n] = g
        n += 1
        if tokens[t] == mp.eos:
            break
    return tokens[: prompt.size + n].copy(), parities[:n].copy()


@njit(cache=True)
def zb_detect(tokens, prompt_len, key, gp, mp):
    n = tokens.size - prompt_len
    parities = np.empty(n, dtype=np.int64)
    hits = np.empty(n, dtype=np.int64)
    g_count = 0
    for idx in range(n):
        t = prompt_len + idx
        logits = _window_logits(tokens, t, mp)
        g = 1 if _step_uniform(tokens[t - 1], key) < _gate_prob(logits, gp) else 0
        order = np.argsort(-logits, kind="mergesort")
        rank = _rank_of(order, tokens[t])
        hit = 1 if rank % 2 == g else 0
        g_count += hit
        parities[idx] = g
        hits[idx] = hit
    return g_count, parities, hits


@njit(cache=True)
def mb_generate(prompt, n_new, key, delta, k, digits, mp):
    b_tilde = digits.size
    tokens = np.empty(prompt.size + n_new, dtype=np.int64)
    tokens[: prompt.size] = prompt
    positions = np.empty(n_new, dtype=np.int64)
    step_digits = np.empty(n_new, dtype=np.int64)
    n = 0
    for step in range(n_new):
        t = prompt.size + step
        logits = _window_logits(tokens, t, mp)
        u = _step_uniform(tokens[t - 1], key)
        pos = np.int64(u * b_tilde)
        if pos > b_tilde - 1:
            pos = b_tilde - 1
        d = digits[pos]
        order = np.argsort(-logits, kind="mergesort")
        _add_bias(logits, order, d, k, delta)
        tokens[t] = np.argmax(logits)
        positions[n] = pos
        step_digits[n] = d
        n += 1
        if tokens[t] == mp.eos:
            break
    return tokens[: prompt.size + n].copy(), positions[:n].copy(), step_digits[:n].copy()


@njit(cache=True)
def mb_recover(tokens, prompt_len, key, k, b_tilde, mp):
    n = tokens.size - prompt_len
    counts = np.zeros((b_tilde, k), dtype=np.int64)
    positions = np.empty(n, dtype=np.int64)
    colors = np.empty(n, dtype=np.int64)
    for idx in range(n):
        t = prompt_len + idx
        logits = _window_logits(tokens, t, mp)
        u = _step_uniform(tokens[t - 1], key)
        pos = np.int64(u * b_tilde)
        if pos > b_tilde - 1:
            pos = b_tilde - 1
        order = np.argsort(-logits, kind="mergesort")
        d = _rank_of(order, tokens[t]) % k
        counts[pos, d] += 1
        positions[idx] = pos
        colors[idx] = d
    return counts, positions, colors


def fold_context(model_seed: int, window: np.ndarray) -> int:
    return int(_fold(np.uint64(model_seed), np.ascontiguousarray(window, dtype=np.int64)))


def toy_logits(ctx: int, mp: ModelParams) -> np.ndarray:
    return _toy_logits(np.uint64(ctx), mp)
