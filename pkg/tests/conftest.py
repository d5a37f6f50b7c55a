"""Shared fixtures: synthetic datasets reused across test modules."""

from __future__ import annotations

import numpy as np
import pytest

from phoneprobe import (
    Dataset,
    FeatureMatrix,
    PhoneToken,
    PhonemeVocab,
    SyntheticSpec,
    generate_synthetic,
    load_dataset,
)


@pytest.fixture(scope="session")
def static_dataset(tmp_path_factory):
    """Small static-mode dataset with mild noise, shared by analysis tests."""
    spec = SyntheticSpec(
        n_phonemes=8, n_vowels=4, dims=32, n_utterances=16, phones_per_utterance=50,
        noise_sigma=0.1, mode="static", seed=11,
    )
    out = tmp_path_factory.mktemp("static_ds")
    return load_dataset(generate_synthetic(spec, out))


@pytest.fixture(scope="session")
def noiseless_dataset(tmp_path_factory):
    spec = SyntheticSpec(
        n_phonemes=5, n_vowels=2, dims=16, n_utterances=10, phones_per_utterance=40,
        noise_sigma=0.0, mode="static", seed=5,
    )
    out = tmp_path_factory.mktemp("noiseless_ds")
    return load_dataset(generate_synthetic(spec, out))


def make_tiny_dataset(vocab: PhonemeVocab, rows, features):
    """Assemble an in-memory Dataset from token tuples and feature arrays.

    rows: list of (utt, speaker, label, onset_s, offset_s, word_index, word_position)
    features: dict utt -> 2-D array
    """
    tokens: dict[str, list[PhoneToken]] = {utt: [] for utt in features}
    for utt, speaker, label, onset, offset, w_idx, w_pos in rows:
        tokens[utt].append(
            PhoneToken(utt, speaker, vocab.index(label), onset, offset, w_idx, w_pos)
        )
    return Dataset(
        vocab=vocab,
        frame_period_ms=10.0,
        features={u: FeatureMatrix(np.asarray(f, dtype=np.float64)) for u, f in features.items()},
        tokens={u: tuple(t) for u, t in tokens.items()},
    )
