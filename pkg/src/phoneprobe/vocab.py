"""Phoneme inventory: ordered labels with vowel/consonant class and manner."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

CLASSES = ("V", "C")
MANNERS = ("plosive", "fricative", "nasal", "other")


@dataclass(frozen=True)
class PhonemeVocab:
    """Ordered phoneme table; list position defines the integer label index."""

    labels: tuple[str, ...]
    classes: tuple[str, ...]
    manners: tuple[str, ...]

    def __post_init__(self):
        if not self.labels:
            raise ValueError("vocabulary is empty")
        if not (len(self.labels) == len(self.classes) == len(self.manners)):
            raise ValueError("labels, classes, and manners must have equal length")
        if len(set(self.labels)) != len(self.labels):
            seen = set()
            dup = next(l for l in self.labels if l in seen or seen.add(l))
            raise ValueError(f"duplicate phoneme label {dup!r}")
        for c in self.classes:
            if c not in CLASSES:
                raise ValueError(f"invalid class {c!r}, expected one of {CLASSES}")
        for m in self.manners:
            if m not in MANNERS:
                raise ValueError(f"invalid manner {m!r}, expected one of {MANNERS}")
        object.__setattr__(self, "_index", {l: i for i, l in enumerate(self.labels)})

    def __len__(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise KeyError(f"unknown phoneme label {label!r}") from None

    def label(self, index: int) -> str:
        return self.labels[index]

    def is_vowel(self, index: int) -> bool:
        return self.classes[index] == "V"

    def manner(self, index: int) -> str:
        return self.manners[index]

    @property
    def vowel_indices(self) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.classes) if c == "V")

    @property
    def n_vowels(self) -> int:
        return sum(1 for c in self.classes if c == "V")


def load_vocab(path: str | Path) -> PhonemeVocab:
    """Parse a TSV of (label, class V/C, manner) rows."""
    labels, classes, manners = [], [], []
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValueError(f"cannot read vocabulary file {path}: {exc}") from None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ValueError(f"{path}:{lineno}: expected 3 tab-separated columns, got {len(parts)}")
        labels.append(parts[0].strip())
        classes.append(parts[1].strip())
        manners.append(parts[2].strip())
    return PhonemeVocab(tuple(labels), tuple(classes), tuple(manners))


def default_vocab() -> PhonemeVocab:
    """The bundled 39-phoneme ARPAbet table (15 vowels, 24 consonants)."""
    data = resources.files("phoneprobe").joinpath("data/arpabet39.tsv").read_text(encoding="utf-8")
    labels, classes, manners = [], [], []
    for line in data.splitlines():
        if line.strip():
            label, cls, manner = line.split("\t")
            labels.append(label)
            classes.append(cls)
            manners.append(manner)
    return PhonemeVocab(tuple(labels), tuple(classes), tuple(manners))
