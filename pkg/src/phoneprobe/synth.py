"""Seeded synthetic datasets with known encoding dynamics.

The generator lays phones out contiguously and embeds, for the frames inside
each phone's signal window, a unit pattern drawn from a seeded orthonormal
basis, plus Gaussian noise everywhere.  Four encoding modes cover the
behaviors the analyses must discriminate:

- static: one fixed direction per phoneme across the whole window;
- rotating: a distinct orthonormal direction per frame-within-window, so
  decoders trained at one offset find nothing at other offsets;
- context_invariant: a phoneme direction in the first half of the feature
  coordinates plus a context direction in the second half (context = word
  position clamped to 1..4), so the label subspace is identical everywhere;
- context_entangled: a distinct direction per (phoneme, context) pair, so
  decoders transfer nothing across contexts.

All randomness flows from one splitmix64/xoshiro stream (see rng), making
generated files byte-identical for equal specs and seeds.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import npyio
from .rng import Stream, bulk_normal

MODES = ("static", "rotating", "context_invariant", "context_entangled")
N_CONTEXTS = 4  # word positions 1..4; later positions share context 4


@dataclass(frozen=True)
class SyntheticSpec:
    n_phonemes: int = 39
    n_vowels: int = 15
    dims: int = 64
    n_utterances: int = 40
    phones_per_utterance: int = 50
    duration_min_frames: int = 8
    duration_max_frames: int = 12
    mode: str = "static"
    window_lo: int = -2
    window_hi: int = 5
    noise_sigma: float = 0.1
    consonant_manners: tuple[str, ...] = ("plosive", "fricative", "nasal")
    max_word_len: int = 5
    n_speakers: int = 4
    frame_period_ms: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}, expected one of {MODES}")
        for name in ("n_phonemes", "dims", "n_utterances", "phones_per_utterance",
                     "duration_min_frames", "duration_max_frames", "max_word_len", "n_speakers"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if not 1 <= self.n_vowels < self.n_phonemes:
            raise ValueError("need at least one vowel and one consonant")
        if self.duration_max_frames < self.duration_min_frames:
            raise ValueError("duration range is empty")
        if self.window_hi < self.window_lo:
            raise ValueError("signal window is empty")
        if self.window_len > self.duration_min_frames:
            raise ValueError(
                f"signal window of {self.window_len} frames overlaps neighboring phones "
                f"(minimum duration {self.duration_min_frames})"
            )
        if self.noise_sigma < 0:
            raise ValueError("noise sigma must be non-negative")
        if self.frame_period_ms <= 0:
            raise ValueError("frame period must be positive")
        if isinstance(self.consonant_manners, list):
            object.__setattr__(self, "consonant_manners", tuple(self.consonant_manners))
        if not self.consonant_manners:
            raise ValueError("need at least one consonant manner")
        needed = {
            "static": self.n_phonemes,
            "rotating": self.n_phonemes * self.window_len,
            "context_invariant": 0,  # checked per block below
            "context_entangled": self.n_phonemes * N_CONTEXTS,
        }[self.mode]
        if needed > self.dims:
            raise ValueError(
                f"mode {self.mode!r} needs {needed} orthonormal patterns but dims={self.dims}"
            )
        if self.mode == "context_invariant":
            half = self.dims // 2
            if self.n_phonemes > half or N_CONTEXTS > self.dims - half:
                raise ValueError(
                    f"context_invariant needs n_phonemes <= {half} and "
                    f"{N_CONTEXTS} context patterns <= {self.dims - half}"
                )
        elif self.n_phonemes > self.dims:
            raise ValueError("dims must be at least n_phonemes")

    @property
    def window_len(self) -> int:
        return self.window_hi - self.window_lo + 1


def _orthonormal_rows(key: int, count: int, dims: int) -> np.ndarray:
    """Gram-Schmidt over seeded Gaussian rows; rows are exactly unit, orthogonal."""
    rows = bulk_normal(key, count * dims).reshape(count, dims)
    for i in range(count):
        for _ in range(2):
            for j in range(i):
                rows[i] -= (rows[i] @ rows[j]) * rows[j]
        norm = np.linalg.norm(rows[i])
        if norm < 1e-8:
            raise ValueError("degenerate random basis; try a different seed")
        rows[i] /= norm
    return rows


def _make_patterns(spec: SyntheticSpec, stream: Stream):
    """Return pattern(label, frame_within_window, context) -> dims vector."""
    if spec.mode == "static":
        basis = _orthonormal_rows(stream.key(), spec.n_phonemes, spec.dims)
        return lambda label, w, ctx: basis[label]
    if spec.mode == "rotating":
        wlen = spec.window_len
        basis = _orthonormal_rows(stream.key(), spec.n_phonemes * wlen, spec.dims)
        return lambda label, w, ctx: basis[label * wlen + w]
    if spec.mode == "context_invariant":
        half = spec.dims // 2
        label_basis = _orthonormal_rows(stream.key(), spec.n_phonemes, half)
        ctx_basis = _orthonormal_rows(stream.key(), N_CONTEXTS, spec.dims - half)
        full_label = np.zeros((spec.n_phonemes, spec.dims))
        full_label[:, :half] = label_basis
        full_ctx = np.zeros((N_CONTEXTS, spec.dims))
        full_ctx[:, half:] = ctx_basis
        return lambda label, w, ctx: full_label[label] + full_ctx[ctx - 1]
    basis = _orthonormal_rows(stream.key(), spec.n_phonemes * N_CONTEXTS, spec.dims)
    return lambda label, w, ctx: basis[label * N_CONTEXTS + (ctx - 1)]


def _vocab_rows(spec: SyntheticSpec) -> list[str]:
    rows = []
    for v in range(spec.n_vowels):
        rows.append(f"V{v:02d}\tV\tother")
    for c in range(spec.n_phonemes - spec.n_vowels):
        manner = spec.consonant_manners[c % len(spec.consonant_manners)]
        rows.append(f"C{c:02d}\tC\t{manner}")
    return rows


def _draw_phones(spec: SyntheticSpec, stream: Stream) -> list[tuple[int, int, int]]:
    """(label, word_index, word_position) rows for one utterance."""
    rows = []
    remaining = spec.phones_per_utterance
    word_index = 0
    while remaining > 0:
        length = min(stream.randint(1, spec.max_word_len), remaining)
        for pos in range(1, length + 1):
            rows.append((stream.randint_below(spec.n_phonemes), word_index, pos))
        word_index += 1
        remaining -= length
    return rows


def generate(spec: SyntheticSpec, out_dir: str | Path) -> Path:
    """Write features, alignment, vocab, and manifest; return the manifest path."""
    out = Path(out_dir)
    (out / "features").mkdir(parents=True, exist_ok=True)
    stream = Stream(spec.seed, "synth")
    pattern = _make_patterns(spec, stream)

    (out / "vocab.tsv").write_text("\n".join(_vocab_rows(spec)) + "\n", encoding="utf-8")

    alignment_lines: list[str] = []
    features_map: dict[str, str] = {}
    sec_per_frame = spec.frame_period_ms / 1000.0
    for u in range(spec.n_utterances):
        utt = f"utt{u:04d}"
        speaker = f"spk{u % spec.n_speakers:02d}"
        phones = _draw_phones(spec, stream)
        durations = [stream.randint(spec.duration_min_frames, spec.duration_max_frames)
                     for _ in phones]
        total_frames = sum(durations)
        noise_key = stream.key()
        data = spec.noise_sigma * bulk_normal(noise_key, total_frames * spec.dims)
        data = data.reshape(total_frames, spec.dims)

        onset = 0
        for (label, word_index, word_position), duration in zip(phones, durations):
            context = min(word_position, N_CONTEXTS)
            vec = pattern(label, 0, context)
            for w in range(spec.window_len):
                frame = onset + spec.window_lo + w
                if 0 <= frame < total_frames:
                    if spec.mode == "rotating":
                        vec = pattern(label, w, context)
                    data[frame] += vec
            label_name = (f"V{label:02d}" if label < spec.n_vowels
                          else f"C{label - spec.n_vowels:02d}")
            alignment_lines.append(
                "\t".join((
                    utt, speaker, label_name,
                    f"{onset * sec_per_frame:.4f}",
                    f"{(onset + duration) * sec_per_frame:.4f}",
                    str(word_index),
                ))
            )
            onset += duration

        rel = f"features/{utt}.npy"
        npyio.save_array(out / rel, data)
        features_map[utt] = rel

    (out / "alignment.tsv").write_text("\n".join(alignment_lines) + "\n", encoding="utf-8")
    manifest = {
        "frame_period_ms": spec.frame_period_ms,
        "dims": spec.dims,
        "vocab": "vocab.tsv",
        "alignments": "alignment.tsv",
        "features": features_map,
    }
    manifest_path = out / "manifest.json"
    manifest_path.write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    (out / "synth_spec.json").write_text(
        json.dumps(asdict(spec), sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return manifest_path
