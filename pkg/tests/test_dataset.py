import json

import numpy as np
import pytest

from phoneprobe import (
    FeatureMatrix,
    assemble_samples,
    default_vocab,
    load_dataset,
    load_features,
    onset_frame,
    parse_alignment,
    parse_manifest,
    save_features,
)
from phoneprobe.npyio import load_array, peek_shape, save_array
from phoneprobe.rng import Stream
from phoneprobe.vocab import PhonemeVocab, load_vocab

from conftest import make_tiny_dataset


# npy round trip ------------------------------------------------------------

def test_npy_round_trip_identity(tmp_path):
    path = tmp_path / "a.npy"
    array = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
    save_array(path, array)
    loaded = load_array(path)
    assert loaded.shape == (3, 2)
    assert np.array_equal(loaded, array)


def test_npy_round_trip_bit_exact(tmp_path):
    path = tmp_path / "bits.npy"
    array = np.random.default_rng(0).standard_normal((17, 5))
    save_features(path, FeatureMatrix(array))
    again = load_features(path)
    assert again.data.tobytes() == np.ascontiguousarray(array).tobytes()


def test_npy_rejects_one_dimensional(tmp_path):
    path = tmp_path / "flat.npy"
    np.save(path, np.arange(6.0))
    with pytest.raises(ValueError, match="2-D"):
        load_array(path)


def test_npy_rejects_nan(tmp_path):
    path = tmp_path / "nan.npy"
    np.save(path, np.array([[1.0, np.nan]]))
    with pytest.raises(ValueError, match="non-finite"):
        load_array(path)


def test_npy_rejects_int_dtype(tmp_path):
    path = tmp_path / "ints.npy"
    np.save(path, np.arange(6).reshape(2, 3))
    with pytest.raises(ValueError, match="element type"):
        load_array(path)


def test_npy_rejects_bad_magic(tmp_path):
    path = tmp_path / "junk.npy"
    path.write_bytes(b"not an npy file at all")
    with pytest.raises(ValueError, match="not an '.npy'"):
        load_array(path)


def test_npy_rejects_wrong_version(tmp_path):
    from numpy.lib import format as npy_format

    path = tmp_path / "v2.npy"
    with open(path, "wb") as f:
        npy_format.write_array(f, np.zeros((2, 2)), version=(2, 0))
    with pytest.raises(ValueError, match="version 2.0"):
        load_array(path)


def test_npy_rejects_truncated(tmp_path):
    path = tmp_path / "trunc.npy"
    np.save(path, np.zeros((10, 10)))
    data = path.read_bytes()
    path.write_bytes(data[:-64])
    with pytest.raises(ValueError, match="truncated"):
        load_array(path)


def test_npy_float32_widened(tmp_path):
    path = tmp_path / "f32.npy"
    np.save(path, np.ones((2, 2), dtype=np.float32))
    loaded = load_array(path)
    assert loaded.dtype == np.float64


def test_peek_shape(tmp_path):
    path = tmp_path / "peek.npy"
    np.save(path, np.zeros((7, 3)))
    assert peek_shape(path) == (7, 3)


# vocab ----------------------------------------------------------------------

def test_default_vocab_counts():
    vocab = default_vocab()
    assert len(vocab) == 39
    assert vocab.n_vowels == 15
    assert len(vocab) - vocab.n_vowels == 24


def test_vocab_index_order_and_lookup():
    vocab = default_vocab()
    assert vocab.index("AA") == 0
    assert vocab.label(0) == "AA"
    assert vocab.is_vowel(vocab.index("IY"))
    assert vocab.manner(vocab.index("S")) == "fricative"
    with pytest.raises(KeyError, match="QQ"):
        vocab.index("QQ")


def test_vocab_rejects_duplicates():
    with pytest.raises(ValueError, match="duplicate"):
        PhonemeVocab(("A", "A"), ("V", "V"), ("other", "other"))


def test_vocab_file_round_trip(tmp_path):
    path = tmp_path / "v.tsv"
    path.write_text("A\tV\tother\nK\tC\tplosive\n", encoding="utf-8")
    vocab = load_vocab(path)
    assert vocab.labels == ("A", "K")
    assert vocab.manner(1) == "plosive"


# onset_frame -----------------------------------------------------------------

def test_onset_frame_examples():
    assert onset_frame(0.137) == 14
    assert onset_frame(0.0) == 0
    assert onset_frame(0.845) == 85  # 84.5 rounds up


def test_onset_frame_exact_decimals():
    for k in range(0, 500):
        assert onset_frame(k / 100.0) == k


def test_onset_frame_rejects_negative():
    with pytest.raises(ValueError):
        onset_frame(-0.1)


def test_onset_frame_other_period():
    assert onset_frame(0.1, frame_period_ms=20.0) == 5
    assert onset_frame(0.03, frame_period_ms=20.0) == 2  # 1.5 rounds up


# alignment parsing -----------------------------------------------------------

def _write_alignment(path, rows):
    path.write_text("\n".join("\t".join(str(c) for c in row) for row in rows) + "\n",
                    encoding="utf-8")


def test_alignment_word_positions(tmp_path):
    vocab = default_vocab()
    path = tmp_path / "ali.tsv"
    _write_alignment(path, [
        ("u1", "s1", "K", 0.10, 0.18, 0),
        ("u1", "s1", "AE", 0.18, 0.26, 0),
        ("u1", "s1", "T", 0.26, 0.31, 0),
    ])
    tokens = parse_alignment(path, vocab)
    assert [t.word_position for t in tokens] == [1, 2, 3]
    assert [t.word_index for t in tokens] == [0, 0, 0]


def test_alignment_unknown_label(tmp_path):
    path = tmp_path / "ali.tsv"
    _write_alignment(path, [("u1", "s1", "QQ", 0.0, 0.1, 0)])
    with pytest.raises(ValueError, match="QQ"):
        parse_alignment(path, default_vocab())


def test_alignment_reorders_by_onset(tmp_path):
    path = tmp_path / "ali.tsv"
    _write_alignment(path, [
        ("u1", "s1", "T", 0.30, 0.40, 1),
        ("u1", "s1", "K", 0.20, 0.30, 0),
    ])
    tokens = parse_alignment(path, default_vocab())
    assert [t.onset_s for t in tokens] == [0.20, 0.30]
    assert [t.word_position for t in tokens] == [1, 1]


def test_alignment_rejects_overlap(tmp_path):
    path = tmp_path / "ali.tsv"
    _write_alignment(path, [
        ("u1", "s1", "K", 0.0, 0.25, 0),
        ("u1", "s1", "T", 0.20, 0.30, 0),
    ])
    with pytest.raises(ValueError, match="overlap"):
        parse_alignment(path, default_vocab())


def test_alignment_rejects_reversed_times(tmp_path):
    path = tmp_path / "ali.tsv"
    _write_alignment(path, [("u1", "s1", "K", 0.3, 0.2, 0)])
    with pytest.raises(ValueError, match="precede"):
        parse_alignment(path, default_vocab())


def test_word_positions_have_no_gaps(tmp_path):
    # random but valid alignment; positions within each word must be 1..k
    rng = Stream(21)
    rows = []
    clock = 0.0
    word = 0
    for _ in range(40):
        length = rng.randint(1, 5)
        for _ in range(length):
            rows.append(("u1", "s1", "AA", round(clock, 2), round(clock + 0.05, 2), word))
            clock += 0.05
        word += 1
    path = tmp_path / "ali.tsv"
    _write_alignment(path, rows)
    tokens = parse_alignment(path, default_vocab())
    by_word = {}
    for tok in tokens:
        by_word.setdefault(tok.word_index, []).append(tok.word_position)
    for positions in by_word.values():
        assert positions == list(range(1, len(positions) + 1))


# manifest --------------------------------------------------------------------

def _write_dataset(tmp_path, dims=4):
    voc = tmp_path / "vocab.tsv"
    voc.write_text("AA\tV\tother\nK\tC\tplosive\n", encoding="utf-8")
    ali = tmp_path / "ali.tsv"
    _write_alignment(ali, [
        ("u1", "s1", "K", 0.00, 0.10, 0),
        ("u1", "s1", "AA", 0.10, 0.20, 0),
        ("u2", "s2", "AA", 0.00, 0.15, 0),
    ])
    (tmp_path / "features").mkdir()
    for utt, frames in (("u1", 20), ("u2", 15)):
        save_array(tmp_path / "features" / f"{utt}.npy",
                   np.arange(frames * dims, dtype=np.float64).reshape(frames, dims))
    manifest = {
        "frame_period_ms": 10.0,
        "dims": dims,
        "vocab": "vocab.tsv",
        "alignments": "ali.tsv",
        "features": {"u1": "features/u1.npy", "u2": "features/u2.npy"},
    }
    mpath = tmp_path / "manifest.json"
    mpath.write_text(json.dumps(manifest), encoding="utf-8")
    return mpath, manifest


def test_manifest_round_trip(tmp_path):
    mpath, _ = _write_dataset(tmp_path)
    manifest = parse_manifest(mpath)
    assert set(manifest.features) == {"u1", "u2"}
    assert manifest.dims == 4
    assert manifest.frame_period_ms == 10.0


def test_manifest_dangling_utterance(tmp_path):
    mpath, payload = _write_dataset(tmp_path)
    _write_alignment(tmp_path / "ali.tsv", [("x9", "s1", "AA", 0.0, 0.1, 0)])
    with pytest.raises(ValueError, match="x9"):
        parse_manifest(mpath)


def test_manifest_dims_mismatch(tmp_path):
    mpath, payload = _write_dataset(tmp_path)
    payload["dims"] = 512
    mpath.write_text(json.dumps(payload), encoding="utf-8")
    with pytest.raises(ValueError, match="dimension mismatch"):
        parse_manifest(mpath)


def test_manifest_missing_file(tmp_path):
    with pytest.raises(ValueError, match="not found"):
        parse_manifest(tmp_path / "nope.json")


def test_manifest_missing_feature_file(tmp_path):
    mpath, payload = _write_dataset(tmp_path)
    (tmp_path / "features" / "u2.npy").unlink()
    with pytest.raises(ValueError, match="u2"):
        parse_manifest(mpath)


def test_load_dataset(tmp_path):
    mpath, _ = _write_dataset(tmp_path)
    ds = load_dataset(mpath)
    assert ds.utterances == ("u1", "u2")
    assert ds.n_tokens == 3
    assert ds.speaker_of("u2") == "s2"


# feature matrix and samples ---------------------------------------------------

def test_feature_matrix_rejects_nan():
    with pytest.raises(ValueError, match="non-finite"):
        FeatureMatrix(np.array([[np.inf, 0.0]]))


def test_feature_matrix_immutable():
    fm = FeatureMatrix(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        fm.data[0, 0] = 1.0


def test_assemble_samples_sentinel_rows():
    # feature row f of each utterance is [f, utt_tag]; offsets must pick
    # exactly onset+offset
    vocab = PhonemeVocab(("A", "B"), ("V", "C"), ("other", "plosive"))
    features = {
        "u1": np.stack([np.arange(30.0), np.full(30, 1.0)], axis=1),
        "u2": np.stack([np.arange(25.0), np.full(25, 2.0)], axis=1),
    }
    rows = [
        ("u1", "s", "A", 0.10, 0.15, 0, 1),   # onset frame 10
        ("u1", "s", "B", 0.20, 0.26, 1, 1),   # onset frame 20
        ("u2", "s", "A", 0.05, 0.12, 0, 1),   # onset frame 5
    ]
    ds = make_tiny_dataset(vocab, rows, features)
    samples = assemble_samples(ds, -3)
    assert samples.X[:, 0].tolist() == [7.0, 17.0, 2.0]
    assert samples.X[:, 1].tolist() == [1.0, 1.0, 2.0]
    assert samples.n_dropped == 0
    # a second offset picks different rows for the same tokens
    later = assemble_samples(ds, 2)
    assert later.X[:, 0].tolist() == [12.0, 22.0, 7.0]


def test_assemble_samples_drops_out_of_bounds():
    vocab = PhonemeVocab(("A", "B"), ("V", "C"), ("other", "plosive"))
    ds = make_tiny_dataset(
        vocab,
        [("u1", "s", "A", 0.02, 0.08, 0, 1), ("u1", "s", "B", 0.10, 0.15, 1, 1)],
        {"u1": np.zeros((20, 3))},
    )
    samples = assemble_samples(ds, -5)
    assert samples.y.tolist() == [1]  # first token dropped (frame 2-5 < 0)
    assert samples.n_dropped == 1


def test_assemble_samples_count_reconciliation(static_dataset):
    token_filter = lambda t: t.word_position == 2
    n_selected = sum(1 for t in static_dataset.iter_tokens() if token_filter(t))
    samples = assemble_samples(static_dataset, -40, token_filter)
    assert samples.y.size + samples.n_dropped == n_selected


def test_assemble_samples_empty_is_error():
    vocab = PhonemeVocab(("A", "B"), ("V", "C"), ("other", "plosive"))
    ds = make_tiny_dataset(
        vocab,
        [("u1", "s", "A", 0.02, 0.08, 0, 1)],
        {"u1": np.zeros((20, 3))},
    )
    with pytest.raises(ValueError, match="offset -15"):
        assemble_samples(ds, -15)


def test_assemble_samples_provenance():
    vocab = PhonemeVocab(("A", "B"), ("V", "C"), ("other", "plosive"))
    ds = make_tiny_dataset(
        vocab,
        [("u1", "s", "A", 0.00, 0.05, 0, 1), ("u1", "s", "B", 0.05, 0.10, 0, 2)],
        {"u1": np.zeros((20, 3))},
    )
    samples = assemble_samples(ds, 0)
    assert samples.provenance == (("u1", 0), ("u1", 1))
