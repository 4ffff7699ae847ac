"""Tests for Bernoulli-acceptance batch sampling."""

import numpy as np
import pytest

from cgpo.core import init_probability_list
from cgpo.sampler import SamplerConfig, acceptance_probability, sample_batch


def make_list(probs, categories=None):
    plist = init_probability_list(
        [(f"p{i}", 0 if categories is None else categories[i]) for i in range(len(probs))]
    )
    for i, p in enumerate(probs):
        plist.records[f"p{i}"].p_list = p
    return plist


class TestAcceptanceProbability:
    def test_identity_weight(self):
        assert acceptance_probability(0.5, 1.0) == 0.5

    def test_product(self):
        assert acceptance_probability(0.3, 2.0) == pytest.approx(0.6)

    def test_clamped_at_one(self):
        assert acceptance_probability(0.8, 2.0) == 1.0

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            acceptance_probability(1.5, 1.0)
        with pytest.raises(ValueError):
            acceptance_probability(0.5, -1.0)


class TestSamplerConfig:
    def test_rejects_small_cap(self):
        with pytest.raises(ValueError):
            SamplerConfig(batch_size=10, max_attempts=5)

    def test_rejects_zero_batch(self):
        with pytest.raises(ValueError):
            SamplerConfig(batch_size=0)


class TestSampleBatch:
    def test_certain_acceptance_uses_minimum_attempts(self):
        plist = make_list([1.0] * 20)
        cfg = SamplerConfig(batch_size=8, max_attempts=100, seed=1)
        batch = sample_batch(plist, {0: 1.0}, cfg)
        assert len(batch.prompt_ids) == 8
        assert len(set(batch.prompt_ids)) == 8
        assert batch.attempts_used == 8
        assert not batch.fallback

    def test_zero_probability_exclusion(self):
        probs = [0.0] * 20
        for i in (3, 7, 11, 15):
            probs[i] = 1.0
        plist = make_list(probs)
        cfg = SamplerConfig(batch_size=4, max_attempts=400, seed=2)
        batch = sample_batch(plist, {0: 1.0}, cfg)
        assert set(batch.prompt_ids) == {"p3", "p7", "p11", "p15"}
        assert not batch.fallback

    def test_determinism(self):
        plist = make_list(list(np.linspace(0.1, 1.0, 30)))
        cfg = SamplerConfig(batch_size=10, max_attempts=1000, seed=42)
        a = sample_batch(plist, {0: 1.0}, cfg)
        b = sample_batch(plist, {0: 1.0}, cfg)
        assert a.prompt_ids == b.prompt_ids
        assert a.attempts_used == b.attempts_used

    def test_different_seed_differs(self):
        plist = make_list([0.5] * 40)
        a = sample_batch(plist, {0: 1.0}, SamplerConfig(batch_size=10, seed=1))
        b = sample_batch(plist, {0: 1.0}, SamplerConfig(batch_size=10, seed=2))
        assert a.prompt_ids != b.prompt_ids

    def test_batch_larger_than_pool_rejected(self):
        plist = make_list([1.0] * 3)
        with pytest.raises(ValueError):
            sample_batch(plist, {0: 1.0}, SamplerConfig(batch_size=4))

    def test_missing_category_weight_rejected(self):
        plist = make_list([1.0] * 4, categories=[0, 0, 1, 1])
        with pytest.raises(KeyError):
            sample_batch(plist, {0: 1.0}, SamplerConfig(batch_size=2))

    def test_fallback_fills_and_flags(self):
        plist = make_list([0.0] * 10)
        plist.records["p4"].p_list = 0.9
        cfg = SamplerConfig(batch_size=3, max_attempts=50, seed=0)
        batch = sample_batch(plist, {0: 1.0}, cfg)
        assert batch.fallback
        assert len(batch.prompt_ids) == 3
        # Greedy fill prefers the only prompt with non-zero probability
        # unless the acceptance trial already admitted it.
        assert "p4" in batch.prompt_ids

    def test_category_weight_changes_acceptance(self):
        # With w=2 on category 1, its prompts at p=0.5 become certain picks
        # against category-0 prompts at p=0.
        probs = [0.0, 0.0, 0.5, 0.5]
        plist = make_list(probs, categories=[0, 0, 1, 1])
        cfg = SamplerConfig(batch_size=2, max_attempts=1000, seed=3)
        batch = sample_batch(plist, {0: 1.0, 1: 2.0}, cfg)
        assert set(batch.prompt_ids) == {"p2", "p3"}

    @pytest.mark.parametrize(
        "p,w", [(0.25, 1.0), (0.3, 2.0)], ids=["p25-w1", "p30-w2"]
    )
    def test_empirical_acceptance_rate(self, p, w):
        # Single prompt, batch of one, one attempt: the sampler performs a
        # single Bernoulli trial at min(1, w*p), with fallback marking a
        # rejection.  Monte Carlo over a shared stream.
        plist = make_list([p])
        cfg = SamplerConfig(batch_size=1, max_attempts=1, seed=0)
        rng = np.random.Generator(np.random.Philox(12345))
        trials = 100_000
        accepted = sum(
            not sample_batch(plist, {0: w}, cfg, rng=rng).fallback
            for _ in range(trials)
        )
        expected = min(1.0, w * p)
        assert accepted / trials == pytest.approx(expected, abs=0.01)
