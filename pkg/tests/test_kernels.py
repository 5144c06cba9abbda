"""Kernel backends: pure-Python and compiled must agree exactly."""

from __future__ import annotations

import random

import pytest

from safeline import _kernels
from safeline._kernels import pure


def _minimize_oracle(masks):
    ordered = sorted(set(masks), key=lambda m: (bin(m).count("1"), m))
    kept = []
    for m in ordered:
        if not any(k & m == k for k in kept):
            kept.append(m)
    return sorted(kept)


def test_backend_is_exposed():
    assert _kernels.BACKEND in ("cython", "pure")


def test_minimize_small_case():
    assert pure.minimize_cut_sets([0b11, 0b01, 0b111, 0b110]) == [0b01, 0b110]


def test_minimize_matches_oracle_randomly():
    rng = random.Random(3)
    for _ in range(300):
        n = rng.randint(1, 16)
        masks = [rng.randint(1, (1 << n) - 1) for _ in range(rng.randint(1, 40))]
        expected = _minimize_oracle(masks)
        assert sorted(pure.minimize_cut_sets(masks)) == expected
        assert sorted(_kernels.minimize_cut_sets(masks)) == expected


def test_minimize_handles_wide_masks():
    """Masks beyond 64 bits take the arbitrary-precision path."""
    wide = [1 << 100, (1 << 100) | 1, 1 | (1 << 70), 1]
    assert sorted(_kernels.minimize_cut_sets(wide)) == [1, 1 << 100]
    assert sorted(pure.minimize_cut_sets(wide)) == [1, 1 << 100]


def _enum_probability(masks, probs):
    n = len(probs)
    total = 0.0
    for bits in range(1 << n):
        if not any(bits & m == m for m in masks):
            continue
        w = 1.0
        for i in range(n):
            w *= probs[i] if bits >> i & 1 else 1.0 - probs[i]
        total += w
    return total


def test_dnf_probability_matches_enumeration():
    rng = random.Random(9)
    for _ in range(150):
        n = rng.randint(1, 10)
        masks = _minimize_oracle(
            [rng.randint(1, (1 << n) - 1) for _ in range(rng.randint(1, 12))]
        )
        probs = [rng.uniform(0.0, 0.6) for _ in range(n)]
        expected = _enum_probability(masks, probs)
        assert pure.dnf_probability(masks, probs) == pytest.approx(expected, abs=1e-12)
        assert _kernels.dnf_probability(masks, probs) == pytest.approx(expected, abs=1e-12)


def test_rare_event_probability():
    masks = [0b01, 0b110]
    probs = [0.1, 0.2, 0.3]
    assert pure.rare_event_probability(masks, probs) == pytest.approx(0.1 + 0.06)
    assert _kernels.rare_event_probability(masks, probs) == pytest.approx(0.1 + 0.06)


def test_empty_dnf_is_impossible():
    assert pure.dnf_probability([], [0.5]) == 0.0
    assert pure.rare_event_probability([], [0.5]) == 0.0


def test_trivially_true_dnf():
    # A conjunction with no literals (mask 0) is the constant TRUE.
    assert pure.dnf_probability([0], [0.5]) == 1.0
