"""Statistical harness: null calibration, ROC/AUROC, corruption sweeps.

Negatives ("watermark-free text") are toy sequences generated under fresh
per-sequence model seeds.  Greedy output of the detection model itself sits
at rank 0 of its own recomputed logits at every position, which makes its
green indicator a deterministic function of the gate rather than a fair coin;
text from an unrelated model restores the binomial null the z-score assumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .model import ToyModel, unwatermarked_generate
from .zerobit import ZeroBitConfig, zerobit_detect, zerobit_generate


@dataclass(frozen=True)
class ScoreSample:
    """One detection score with its ground-truth label."""

    z: float
    label: str  # "watermarked" or "clean"
    meta: dict = field(default_factory=dict)


@dataclass(frozen=True)
class RocResult:
    """AUROC by exact pair counting plus the swept ROC curve."""

    auroc: float
    curve: list[tuple[float, float]]


def _as_rng(seed_or_rng) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def _scores(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidInputError(f"{name} scores must be a non-empty 1-D list")
    if not np.isfinite(arr).all():
        raise InvalidInputError(f"{name} scores must be finite")
    return arr


def auroc(positives, negatives) -> RocResult:
    """Probability a positive outscores a negative, ties counted half.

    Computed exactly via midranks (equivalent to counting all |P| * |N|
    pairs); the attached curve sweeps thresholds over the distinct scores
    and its trapezoidal area equals the pair-count value.
    """
    pos = _scores(positives, "positive")
    neg = _scores(negatives, "negative")
    combined = np.concatenate([pos, neg])
    order = np.argsort(combined, kind="stable")
    ranks = np.empty(combined.size, dtype=np.float64)
    i = 0
    while i < combined.size:
        j = i
        while j + 1 < combined.size and combined[order[j + 1]] == combined[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0  # midrank, 1-based
        i = j + 1
    rank_sum = ranks[: pos.size].sum()
    area = (rank_sum - pos.size * (pos.size + 1) / 2.0) / (pos.size * neg.size)

    curve = [(0.0, 0.0)]
    for threshold in np.unique(combined)[::-1]:
        tpr = float((pos >= threshold).mean())
        fpr = float((neg >= threshold).mean())
        if (fpr, tpr) != curve[-1]:
            curve.append((fpr, tpr))
    if curve[-1] != (1.0, 1.0):
        curve.append((1.0, 1.0))
    return RocResult(auroc=float(area), curve=curve)


def trapezoid_area(curve: list[tuple[float, float]]) -> float:
    """Area under a piecewise-linear ROC curve."""
    area = 0.0
    for (x0, y0), (x1, y1) in zip(curve, curve[1:]):
        area += (x1 - x0) * (y0 + y1) / 2.0
    return area


def make_reference_corpus(
    model: ToyModel,
    count: int,
    length: int,
    rng,
    prompt_len: int = 8,
) -> list[tuple[np.ndarray, int]]:
    """Unwatermarked toy sequences that the given model did not produce.

    Each sequence comes from the same configuration under a fresh model
    seed, standing in for text by another author.  Returns (tokens,
    prompt_len) pairs.
    """
    rng = _as_rng(rng)
    corpus = []
    for _ in range(count):
        foreign = model.reseeded(int(rng.integers(0, 1 << 64, dtype=np.uint64)))
        prompt = rng.integers(1, model.vocab_size, size=prompt_len)
        corpus.append((unwatermarked_generate(foreign, prompt, length), prompt_len))
    return corpus


def random_key(rng) -> int:
    return int(_as_rng(rng).integers(0, 1 << 64, dtype=np.uint64))


@dataclass(frozen=True)
class NullSummary:
    """Moments of detection z-scores over a watermark-free corpus."""

    mean_z: float
    std_z: float
    max_abs_z: float
    count: int


def null_calibration(
    model: ToyModel,
    n_sequences: int,
    length: int,
    key_source,
    cfg: ZeroBitConfig | None = None,
    prompt_len: int = 8,
) -> NullSummary:
    """Detect unwatermarked reference text with fresh random keys.

    Under the null each inspected position is green with probability 1/2,
    so the z-scores should be standard-normal: mean near 0, spread near 1.
    """
    if n_sequences < 2:
        raise InvalidInputError(f"need at least 2 sequences, got {n_sequences}")
    cfg = cfg if cfg is not None else ZeroBitConfig()
    rng = _as_rng(key_source)
    zs = np.empty(n_sequences, dtype=np.float64)
    for i, (tokens, plen) in enumerate(
        make_reference_corpus(model, n_sequences, length, rng, prompt_len)
    ):
        zs[i] = zerobit_detect(model, tokens, plen, random_key(rng), cfg).z
    return NullSummary(
        mean_z=float(zs.mean()),
        std_z=float(zs.std(ddof=1)),
        max_abs_z=float(np.abs(zs).max()),
        count=n_sequences,
    )


def substitution_attack(tokens, prompt_len: int, vocab_size: int, fraction: float, rng) -> np.ndarray:
    """Replace floor(fraction * N) generated positions with uniform tokens.

    Positions are chosen uniformly without replacement among the N generated
    positions; the prompt is never touched.  Deterministic given the seed.
    """
    if not 0.0 <= fraction <= 1.0:
        raise InvalidInputError(f"fraction must lie in [0, 1], got {fraction}")
    seq = np.asarray(tokens, dtype=np.int64).copy()
    n = seq.size - prompt_len
    if n < 0:
        raise InvalidInputError("prompt_len exceeds the sequence length")
    n_replace = math.floor(fraction * n)
    if n_replace == 0:
        return seq
    rng = _as_rng(rng)
    positions = rng.choice(n, size=n_replace, replace=False) + prompt_len
    seq[positions] = rng.integers(0, vocab_size, size=n_replace)
    return seq


def robustness_sweep(
    model: ToyModel,
    cfg: ZeroBitConfig,
    key_source,
    fractions,
    n_runs: int,
    length: int,
    prompt_len: int = 8,
) -> dict[float, np.ndarray]:
    """Detection z at several corruption fractions of the same corpus.

    Each run generates one watermarked sequence with a fresh key, corrupts
    it at every fraction (independent draws), and detects with the true key.
    """
    rng = _as_rng(key_source)
    out = {float(f): np.empty(n_runs, dtype=np.float64) for f in fractions}
    for i in range(n_runs):
        key = random_key(rng)
        prompt = rng.integers(1, model.vocab_size, size=prompt_len)
        tokens = zerobit_generate(model, prompt, key, cfg, length)
        for f in out:
            corrupted = substitution_attack(tokens, prompt_len, model.vocab_size, f, rng)
            out[f][i] = zerobit_detect(model, corrupted, prompt_len, key, cfg).z
    return out


def watermark_separation(
    model: ToyModel,
    cfg: ZeroBitConfig,
    key_source,
    n_pos: int,
    n_neg: int,
    length: int,
    prompt_len: int = 8,
) -> tuple[RocResult, np.ndarray, np.ndarray]:
    """Watermarked-vs-clean score separation as a ROC experiment.

    Positives are watermarked sequences detected with their own keys;
    negatives are reference corpus sequences detected with fresh keys.
    """
    rng = _as_rng(key_source)
    pos = np.empty(n_pos, dtype=np.float64)
    for i in range(n_pos):
        key = random_key(rng)
        prompt = rng.integers(1, model.vocab_size, size=prompt_len)
        tokens = zerobit_generate(model, prompt, key, cfg, length)
        pos[i] = zerobit_detect(model, tokens, prompt_len, key, cfg).z
    neg = np.empty(n_neg, dtype=np.float64)
    for i, (tokens, plen) in enumerate(
        make_reference_corpus(model, n_neg, length, rng, prompt_len)
    ):
        neg[i] = zerobit_detect(model, tokens, plen, random_key(rng), cfg).z
    return auroc(pos, neg), pos, neg
