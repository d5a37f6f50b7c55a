import filecmp
from pathlib import Path

import numpy as np
import pytest

from phoneprobe import (
    SyntheticSpec,
    generate_synthetic,
    load_dataset,
    onset_frame,
    parse_manifest,
)


def _tree_bytes(root: Path) -> dict[str, bytes]:
    return {
        str(p.relative_to(root)): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


def test_same_seed_byte_identical(tmp_path):
    spec = SyntheticSpec(n_phonemes=6, n_vowels=3, dims=24, n_utterances=6,
                         phones_per_utterance=30, seed=42)
    generate_synthetic(spec, tmp_path / "a")
    generate_synthetic(spec, tmp_path / "b")
    a, b = _tree_bytes(tmp_path / "a"), _tree_bytes(tmp_path / "b")
    assert a.keys() == b.keys()
    for name in a:
        assert a[name] == b[name], name


def test_different_seed_differs(tmp_path):
    spec = SyntheticSpec(n_phonemes=6, n_vowels=3, dims=24, n_utterances=4,
                         phones_per_utterance=20, seed=1)
    other = SyntheticSpec(n_phonemes=6, n_vowels=3, dims=24, n_utterances=4,
                          phones_per_utterance=20, seed=2)
    generate_synthetic(spec, tmp_path / "a")
    generate_synthetic(other, tmp_path / "b")
    assert not filecmp.cmp(tmp_path / "a" / "alignment.tsv",
                           tmp_path / "b" / "alignment.tsv", shallow=False)


def test_generated_files_round_trip(tmp_path):
    spec = SyntheticSpec(n_phonemes=8, n_vowels=4, dims=16, n_utterances=8,
                         phones_per_utterance=40, seed=3)
    mpath = generate_synthetic(spec, tmp_path)
    manifest = parse_manifest(mpath)  # validates dims, paths, utterance links
    ds = load_dataset(manifest)
    assert len(ds.utterances) == 8
    assert ds.n_tokens == 8 * 40
    assert ds.dims == 16
    assert len(ds.vocab) == 8
    assert ds.vocab.n_vowels == 4
    # word positions within each word form 1..k
    for utt in ds.utterances:
        by_word = {}
        for tok in ds.tokens[utt]:
            by_word.setdefault(tok.word_index, []).append(tok.word_position)
        for positions in by_word.values():
            assert positions == list(range(1, len(positions) + 1))


def test_label_distribution_near_uniform(tmp_path):
    spec = SyntheticSpec(n_phonemes=10, n_vowels=5, dims=16, n_utterances=30,
                         phones_per_utterance=60, seed=9)
    ds = load_dataset(generate_synthetic(spec, tmp_path))
    labels = [t.label_index for t in ds.iter_tokens()]
    counts = np.bincount(labels, minlength=10)
    n = len(labels)
    # each frequency within 5 sigma of the uniform expectation
    sigma = np.sqrt(n * 0.1 * 0.9)
    assert np.abs(counts - n / 10).max() < 5 * sigma


def test_noiseless_static_embeds_exact_patterns(tmp_path):
    spec = SyntheticSpec(n_phonemes=4, n_vowels=2, dims=8, n_utterances=2,
                         phones_per_utterance=20, noise_sigma=0.0, seed=4)
    ds = load_dataset(generate_synthetic(spec, tmp_path))
    for utt in ds.utterances:
        fm = ds.features[utt]
        patterns = {}
        for tok in ds.tokens[utt]:
            onset = onset_frame(tok.onset_s)
            frame = onset + 2  # inside the default -2..+5 window
            if frame >= fm.frames:
                continue
            row = fm.data[frame]
            assert np.linalg.norm(row) == pytest.approx(1.0, abs=1e-9)
            key = tok.label_index
            if key in patterns:
                assert np.allclose(patterns[key], row, atol=1e-12)
            else:
                patterns[key] = row
        # distinct labels got orthogonal unit patterns
        labels = sorted(patterns)
        for i in labels:
            for j in labels:
                expected = 1.0 if i == j else 0.0
                assert patterns[i] @ patterns[j] == pytest.approx(expected, abs=1e-9)


def test_manner_assignment_cycles(tmp_path):
    spec = SyntheticSpec(n_phonemes=8, n_vowels=3, dims=16, n_utterances=2,
                         phones_per_utterance=10, seed=5,
                         consonant_manners=("plosive", "nasal"))
    ds = load_dataset(generate_synthetic(spec, tmp_path))
    manners = [ds.vocab.manner(i) for i in range(3, 8)]
    assert manners == ["plosive", "nasal", "plosive", "nasal", "plosive"]


def test_spec_validation():
    with pytest.raises(ValueError, match="overlaps"):
        SyntheticSpec(window_lo=-4, window_hi=5, duration_min_frames=8)
    with pytest.raises(ValueError, match="orthonormal patterns"):
        SyntheticSpec(mode="rotating", n_phonemes=10, n_vowels=5, dims=16)
    with pytest.raises(ValueError, match="context_invariant"):
        SyntheticSpec(mode="context_invariant", n_phonemes=10, n_vowels=5, dims=16)
    with pytest.raises(ValueError, match="mode"):
        SyntheticSpec(mode="wiggly")
    with pytest.raises(ValueError, match="vowel"):
        SyntheticSpec(n_phonemes=5, n_vowels=5)
