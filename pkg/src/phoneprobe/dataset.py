"""Data model and ingestion for feature streams and phone alignments.

A dataset ties together per-utterance feature matrices (frames x dims at a
fixed frame period), time-aligned phone tokens, and a phoneme vocabulary.
Everything is immutable after loading and safe to share across threads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator

import numpy as np

from . import npyio
from .vocab import PhonemeVocab, load_vocab


@dataclass(frozen=True)
class FeatureMatrix:
    """frames x dims real-valued features at a fixed frame period."""

    data: np.ndarray
    frame_period_ms: float = 10.0

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"features must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1:
            raise ValueError("features must contain at least one frame")
        if not np.isfinite(arr).all():
            raise ValueError("features contain non-finite values")
        if not self.frame_period_ms > 0:
            raise ValueError("frame_period_ms must be positive")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def frames(self) -> int:
        return self.data.shape[0]

    @property
    def dims(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True, slots=True)
class PhoneToken:
    """One aligned phone instance."""

    utterance_id: str
    speaker_id: str
    label_index: int
    onset_s: float
    offset_s: float
    word_index: int
    word_position: int

    def __post_init__(self):
        if not 0.0 <= self.onset_s < self.offset_s:
            raise ValueError(
                f"invalid token times [{self.onset_s}, {self.offset_s}] in {self.utterance_id!r}"
            )
        if self.word_index < 0:
            raise ValueError("word_index must be >= 0")
        if self.word_position < 1:
            raise ValueError("word_position must be >= 1")

    @property
    def duration_s(self) -> float:
        return self.offset_s - self.onset_s


@dataclass(frozen=True)
class DatasetManifest:
    """Validated description of where a dataset's files live."""

    path: Path
    frame_period_ms: float
    dims: int | None
    vocab_path: Path
    alignment_paths: tuple[Path, ...]
    features: dict[str, Path]


@dataclass(frozen=True)
class SampleSet:
    """Design matrix and labels extracted at one frame offset."""

    X: np.ndarray
    y: np.ndarray
    offset_frames: int
    provenance: tuple[tuple[str, int], ...]
    n_dropped: int

    def __post_init__(self):
        if self.X.shape[0] != self.y.shape[0] or self.X.shape[0] != len(self.provenance):
            raise ValueError("sample rows, labels, and provenance must align")


def onset_frame(time_s: float, frame_period_ms: float = 10.0) -> int:
    """Frame index of a time point: round-half-up of time_s / frame period.

    The quotient is rounded to 6 decimals first so times parsed from decimal
    strings (alignment files) land on the intended frame despite binary
    float representation.
    """
    if time_s < 0:
        raise ValueError("time must be non-negative")
    if not frame_period_ms > 0:
        raise ValueError("frame_period_ms must be positive")
    quotient = time_s * 1000.0 / frame_period_ms
    return int(math.floor(round(quotient, 6) + 0.5))


def load_features(path: str | Path, frame_period_ms: float = 10.0) -> FeatureMatrix:
    """Load one '.npy' feature file, widened to float64."""
    return FeatureMatrix(npyio.load_array(path), frame_period_ms)


def save_features(path: str | Path, features: FeatureMatrix) -> None:
    npyio.save_array(path, features.data)


def parse_alignment(path: str | Path, vocab: PhonemeVocab) -> list[PhoneToken]:
    """Parse a tab-separated alignment file into per-utterance sorted tokens.

    Columns: utterance_id, speaker_id, phoneme_label, onset_s, offset_s,
    word_index.  Rows are grouped by utterance and sorted by onset;
    word_position counts consecutive rows sharing (utterance_id, word_index).
    """
    rows_by_utt: dict[str, list[tuple]] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValueError(f"cannot read alignment file {path}: {exc}") from None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 6:
            raise ValueError(f"{path}:{lineno}: expected 6 tab-separated columns, got {len(parts)}")
        utt, speaker, label, onset_str, offset_str, word_str = (p.strip() for p in parts)
        try:
            label_index = vocab.index(label)
        except KeyError:
            raise ValueError(f"{path}:{lineno}: unknown phoneme label {label!r}") from None
        try:
            onset, offset, word_index = float(onset_str), float(offset_str), int(word_str)
        except ValueError:
            raise ValueError(f"{path}:{lineno}: malformed numeric field") from None
        if not onset < offset:
            raise ValueError(f"{path}:{lineno}: onset {onset} must precede offset {offset}")
        rows_by_utt.setdefault(utt, []).append((onset, offset, speaker, label_index, word_index))

    tokens: list[PhoneToken] = []
    for utt in sorted(rows_by_utt):
        rows = sorted(rows_by_utt[utt], key=lambda r: (r[0], r[1]))
        prev_word = None
        position = 0
        prev_offset = -1.0
        for onset, offset, speaker, label_index, word_index in rows:
            if onset < prev_offset - 1e-9:
                raise ValueError(
                    f"{path}: overlapping tokens in utterance {utt!r} near {onset:.3f}s"
                )
            position = position + 1 if word_index == prev_word else 1
            prev_word = word_index
            prev_offset = offset
            tokens.append(
                PhoneToken(utt, speaker, label_index, onset, offset, word_index, position)
            )
    return tokens


_MANIFEST_KEYS = ("frame_period_ms", "dims", "vocab", "alignments", "features")


def parse_manifest(path: str | Path, features_kind: str = "npy") -> DatasetManifest:
    """Parse and validate a dataset manifest.

    All referenced paths are checked for existence, every utterance named by
    an alignment row must have a feature entry, and (for npy features) each
    feature file's header must match the declared dims.  `features_kind`
    "wav" relaxes the dims check for manifests that list raw audio.
    """
    path = Path(path)
    if not path.is_file():
        raise ValueError(f"manifest file not found: {path}")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(payload, dict):
        raise ValueError(f"{path}: manifest must be a JSON object")
    for key in _MANIFEST_KEYS:
        if key not in payload and not (key == "dims" and features_kind == "wav"):
            raise ValueError(f"{path}: missing manifest key {key!r}")

    period = payload["frame_period_ms"]
    if not isinstance(period, (int, float)) or not period > 0:
        raise ValueError(f"{path}: 'frame_period_ms' must be a positive number")
    dims = payload.get("dims")
    if dims is not None and (not isinstance(dims, int) or dims < 1):
        raise ValueError(f"{path}: 'dims' must be a positive integer")
    if dims is None and features_kind == "npy":
        raise ValueError(f"{path}: 'dims' is required")

    base = path.parent

    def resolve(p) -> Path:
        if not isinstance(p, str) or not p:
            raise ValueError(f"{path}: manifest paths must be non-empty strings")
        candidate = Path(p)
        return candidate if candidate.is_absolute() else base / candidate

    vocab_path = resolve(payload["vocab"])
    if not vocab_path.is_file():
        raise ValueError(f"{path}: vocab file not found: {vocab_path}")

    raw_alignments = payload["alignments"]
    if isinstance(raw_alignments, str):
        raw_alignments = [raw_alignments]
    if not isinstance(raw_alignments, list) or not raw_alignments:
        raise ValueError(f"{path}: 'alignments' must be a path or a non-empty list of paths")
    alignment_paths = tuple(resolve(p) for p in raw_alignments)
    for apath in alignment_paths:
        if not apath.is_file():
            raise ValueError(f"{path}: alignment file not found: {apath}")

    raw_features = payload["features"]
    if not isinstance(raw_features, dict) or not raw_features:
        raise ValueError(f"{path}: 'features' must be a non-empty object of utterance -> path")
    features: dict[str, Path] = {}
    for utt, p in raw_features.items():
        fpath = resolve(p)
        if not fpath.is_file():
            raise ValueError(f"{path}: feature file for utterance {utt!r} not found: {fpath}")
        features[utt] = fpath

    # every aligned utterance must have features; dims must match headers
    for apath in alignment_paths:
        for lineno, line in enumerate(apath.read_text(encoding="utf-8").splitlines(), start=1):
            if not line.strip():
                continue
            utt = line.split("\t", 1)[0].strip()
            if utt not in features:
                raise ValueError(
                    f"{path}: alignment {apath.name}:{lineno} references unknown utterance {utt!r}"
                )
    if features_kind == "npy":
        for utt in sorted(features):
            _, file_dims = npyio.peek_shape(features[utt])
            if file_dims != dims:
                raise ValueError(
                    f"{path}: dimension mismatch for utterance {utt!r}: "
                    f"manifest declares dims={dims} but {features[utt].name} has {file_dims} columns"
                )

    return DatasetManifest(path, float(period), dims, vocab_path, alignment_paths, features)


@dataclass(frozen=True)
class Dataset:
    """Loaded dataset: vocabulary, features, and sorted tokens per utterance."""

    vocab: PhonemeVocab
    frame_period_ms: float
    features: dict[str, FeatureMatrix]
    tokens: dict[str, tuple[PhoneToken, ...]]
    utterances: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if not self.utterances:
            object.__setattr__(self, "utterances", tuple(sorted(self.tokens)))
        dims = {fm.dims for fm in self.features.values()}
        if len(dims) > 1:
            raise ValueError(f"inconsistent feature dims across utterances: {sorted(dims)}")
        for fm in self.features.values():
            if fm.frame_period_ms != self.frame_period_ms:
                raise ValueError("all feature matrices must share the dataset frame period")

    @property
    def dims(self) -> int:
        return next(iter(self.features.values())).dims

    def speaker_of(self, utterance_id: str) -> str:
        toks = self.tokens[utterance_id]
        return toks[0].speaker_id if toks else ""

    def iter_tokens(self) -> Iterator[PhoneToken]:
        for utt in self.utterances:
            yield from self.tokens[utt]

    @property
    def n_tokens(self) -> int:
        return sum(len(t) for t in self.tokens.values())

    @property
    def n_frames(self) -> int:
        return sum(fm.frames for fm in self.features.values())


def load_dataset(manifest: DatasetManifest | str | Path) -> Dataset:
    """Load every file referenced by a manifest into an immutable Dataset."""
    if not isinstance(manifest, DatasetManifest):
        manifest = parse_manifest(manifest)
    vocab = load_vocab(manifest.vocab_path)
    all_tokens: list[PhoneToken] = []
    for apath in manifest.alignment_paths:
        all_tokens.extend(parse_alignment(apath, vocab))
    tokens: dict[str, list[PhoneToken]] = {utt: [] for utt in manifest.features}
    for tok in all_tokens:
        tokens[tok.utterance_id].append(tok)
    features = {
        utt: load_features(p, manifest.frame_period_ms) for utt, p in manifest.features.items()
    }
    for utt, fm in sorted(features.items()):
        if manifest.dims is not None and fm.dims != manifest.dims:
            raise ValueError(f"utterance {utt!r}: feature dims {fm.dims} != declared {manifest.dims}")
    return Dataset(
        vocab=vocab,
        frame_period_ms=manifest.frame_period_ms,
        features=features,
        tokens={utt: tuple(toks) for utt, toks in tokens.items()},
    )


def assemble_samples(
    dataset: Dataset,
    offset_frames: int,
    token_filter: Callable[[PhoneToken], bool] | None = None,
    utterances: tuple[str, ...] | None = None,
) -> SampleSet:
    """One design-matrix row per selected token at onset_frame + offset.

    Tokens whose shifted frame falls outside their utterance are dropped
    silently but counted, so callers can reconcile row counts.  An empty
    result is an error: no analysis can proceed on it.
    """
    period = dataset.frame_period_ms
    blocks: list[np.ndarray] = []
    labels: list[int] = []
    provenance: list[tuple[str, int]] = []
    dropped = 0
    for utt in utterances if utterances is not None else dataset.utterances:
        fm = dataset.features[utt]
        frame_rows = []
        for idx, tok in enumerate(dataset.tokens[utt]):
            if token_filter is not None and not token_filter(tok):
                continue
            frame = onset_frame(tok.onset_s, period) + offset_frames
            if 0 <= frame < fm.frames:
                frame_rows.append(frame)
                labels.append(tok.label_index)
                provenance.append((utt, idx))
            else:
                dropped += 1
        if frame_rows:
            blocks.append(fm.data[frame_rows])
    if not labels:
        raise ValueError(f"no samples available at offset {offset_frames:+d} frames")
    return SampleSet(
        X=np.concatenate(blocks, axis=0),
        y=np.asarray(labels, dtype=np.int64),
        offset_frames=offset_frames,
        provenance=tuple(provenance),
        n_dropped=dropped,
    )
