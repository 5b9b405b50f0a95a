"""AUROC, null calibration, and the substitution-corruption harness."""

import numpy as np
import pytest

from watermod.errors import InvalidInputError
from watermod.model import ToyModel
from watermod.stats import (
    auroc,
    make_reference_corpus,
    null_calibration,
    robustness_sweep,
    substitution_attack,
    trapezoid_area,
    watermark_separation,
)
from watermod.zerobit import ZeroBitConfig


def brute_force_auroc(positives, negatives) -> float:
    """O(P*N) pair-count oracle: wins count 1, ties 0.5."""
    total = 0.0
    for p in positives:
        for n in negatives:
            if p > n:
                total += 1.0
            elif p == n:
                total += 0.5
    return total / (len(positives) * len(negatives))


class TestAuroc:
    def test_perfect_separation(self):
        assert auroc([3.0, 4.0], [1.0, 2.0]).auroc == 1.0

    def test_identical_multisets_are_chance(self):
        scores = [0.5, 1.5, 1.5, 3.0]
        assert auroc(scores, scores).auroc == 0.5

    def test_small_mixed_case(self):
        assert auroc([2.0, 0.0], [1.0]).auroc == 0.5

    def test_matches_brute_force_with_ties(self):
        rng = np.random.default_rng(50)
        for _ in range(30):
            # coarse grid forces plenty of exact ties
            pos = rng.integers(0, 6, size=rng.integers(1, 40)) / 2.0
            neg = rng.integers(0, 6, size=rng.integers(1, 40)) / 2.0
            got = auroc(pos, neg).auroc
            want = brute_force_auroc(list(pos), list(neg))
            assert got == pytest.approx(want, abs=1e-12)

    def test_curve_is_monotone_and_area_matches(self):
        rng = np.random.default_rng(51)
        for _ in range(20):
            pos = rng.normal(1.0, 1.0, size=50)
            neg = rng.normal(0.0, 1.0, size=70)
            result = auroc(pos, neg)
            xs = [p[0] for p in result.curve]
            ys = [p[1] for p in result.curve]
            assert xs[0] == 0.0 and ys[0] == 0.0
            assert xs[-1] == 1.0 and ys[-1] == 1.0
            assert all(b >= a for a, b in zip(xs, xs[1:]))
            assert all(b >= a for a, b in zip(ys, ys[1:]))
            assert trapezoid_area(result.curve) == pytest.approx(result.auroc, abs=1e-9)

    def test_invariant_under_increasing_transform(self):
        rng = np.random.default_rng(52)
        pos = rng.normal(1.0, 1.0, size=40)
        neg = rng.normal(0.0, 1.0, size=40)
        base = auroc(pos, neg).auroc
        for transform in (np.exp, np.tanh, lambda x: 3 * x + 7):
            assert auroc(transform(pos), transform(neg)).auroc == pytest.approx(base, abs=1e-12)

    def test_complement_identity_tie_free(self):
        rng = np.random.default_rng(53)
        pos = rng.normal(1.0, 1.0, size=30)
        neg = rng.normal(0.0, 1.0, size=45)
        assert auroc(pos, neg).auroc + auroc(neg, pos).auroc == pytest.approx(1.0, abs=1e-12)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(54)
        pos = rng.normal(1.0, 1.0, size=25)
        neg = rng.normal(0.0, 1.0, size=25)
        base = auroc(pos, neg)
        shuffled = auroc(rng.permutation(pos), rng.permutation(neg))
        assert shuffled.auroc == base.auroc
        assert shuffled.curve == base.curve

    def test_empty_inputs_rejected(self):
        with pytest.raises(InvalidInputError):
            auroc([], [1.0])
        with pytest.raises(InvalidInputError):
            auroc([1.0], [])


class TestSubstitutionAttack:
    def test_identity_at_zero(self):
        tokens = np.arange(20)
        out = substitution_attack(tokens, 5, 64, 0.0, rng=1)
        assert np.array_equal(out, tokens)
        assert out is not tokens  # caller's array is never mutated

    def test_full_replacement(self):
        tokens = np.full(50, 63)
        out = substitution_attack(tokens, 10, 64, 1.0, rng=2)
        assert np.array_equal(out[:10], tokens[:10])
        # replacement draws are uniform over the vocabulary, so 40 positions
        # keeping the original value has probability (1/64)^40
        assert not np.array_equal(out[10:], tokens[10:])

    def test_replacement_count(self):
        tokens = np.zeros(105, dtype=np.int64)
        rng = np.random.default_rng(3)
        out = substitution_attack(tokens, 5, 64, 0.2, rng=rng)
        n_changed = int((out != tokens).sum())
        # floor(0.2 * 100) = 20 positions redrawn, some may redraw a zero
        assert n_changed <= 20
        assert n_changed >= 10

    def test_prompt_untouched(self):
        rng = np.random.default_rng(4)
        tokens = rng.integers(0, 64, size=60)
        out = substitution_attack(tokens, 12, 64, 0.9, rng=5)
        assert np.array_equal(out[:12], tokens[:12])

    def test_deterministic_given_seed(self):
        tokens = np.arange(40)
        a = substitution_attack(tokens, 4, 64, 0.5, rng=9)
        b = substitution_attack(tokens, 4, 64, 0.5, rng=9)
        assert np.array_equal(a, b)

    def test_fraction_validation(self):
        with pytest.raises(InvalidInputError):
            substitution_attack(np.arange(10), 2, 64, 1.5, rng=0)


class TestReferenceCorpus:
    def test_fresh_seeds_make_distinct_sequences(self):
        model = ToyModel()
        corpus = make_reference_corpus(model, 5, 50, rng=7)
        assert len(corpus) == 5
        flat = [tuple(tokens.tolist()) for tokens, _ in corpus]
        assert len(set(flat)) == 5
        for tokens, prompt_len in corpus:
            assert prompt_len == 8
            assert tokens.size == 58

    def test_deterministic_given_rng_seed(self):
        model = ToyModel()
        a = make_reference_corpus(model, 3, 30, rng=11)
        b = make_reference_corpus(model, 3, 30, rng=11)
        for (ta, _), (tb, _) in zip(a, b):
            assert np.array_equal(ta, tb)


class TestNullCalibration:
    def test_moments_near_standard_normal(self):
        summary = null_calibration(ToyModel(), 60, 150, key_source=13)
        assert abs(summary.mean_z) < 0.4  # 3 sigma for 60 sequences
        assert 0.75 < summary.std_z < 1.25
        assert summary.count == 60

    def test_requires_two_sequences(self):
        with pytest.raises(InvalidInputError):
            null_calibration(ToyModel(), 1, 50, key_source=0)


class TestRobustnessSweep:
    def test_z_degrades_monotonically_in_expectation(self):
        sweep = robustness_sweep(
            ToyModel(), ZeroBitConfig(), key_source=17,
            fractions=(0.0, 0.1, 0.3, 0.5), n_runs=30, length=150,
        )
        means = [sweep[f].mean() for f in (0.0, 0.1, 0.3, 0.5)]
        assert means[0] > means[1] > means[2] > means[3]
        assert means[0] > 4.0

    def test_run_count(self):
        sweep = robustness_sweep(
            ToyModel(), ZeroBitConfig(), key_source=18,
            fractions=(0.0,), n_runs=7, length=60,
        )
        assert sweep[0.0].shape == (7,)


class TestWatermarkSeparation:
    def test_clean_separation_at_moderate_scale(self):
        roc, pos, neg = watermark_separation(
            ToyModel(), ZeroBitConfig(), key_source=19, n_pos=25, n_neg=25, length=150
        )
        assert roc.auroc == 1.0
        assert pos.min() > neg.max()
