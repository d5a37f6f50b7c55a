"""The three decoding analyses: offset sweep, temporal generalization,
cross-context generalization.

Decoders are fitted independently per time offset (and per context), so the
fits may run on a thread pool; results land in preallocated slots indexed by
offset, which keeps output identical at any worker count.  All sampling
decisions (utterance splits, context subsampling) are drawn single-threaded
from the experiment seed before any parallel phase.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .contours import marching_squares
from .dataset import Dataset, PhoneToken, SampleSet, assemble_samples
from .numerics import majority_baseline, ridge_fit, ridge_predict
from .rng import Stream

TokenFilter = Callable[[PhoneToken], bool]

MAX_WORD_POSITION = 4  # positional analyses cover p1..p4


@dataclass(frozen=True)
class WindowConfig:
    """Configuration for offset-sweep and temporal-generalization runs."""

    offset_lo: int = -80
    offset_hi: int = 79
    alpha: float = 1.0
    seed: int = 0
    train_utterances: tuple[str, ...] | None = None
    test_utterances: tuple[str, ...] | None = None
    train_speakers: tuple[str, ...] | None = None
    test_speakers: tuple[str, ...] | None = None
    token_filter: TokenFilter | None = None

    def __post_init__(self):
        if self.offset_hi < self.offset_lo:
            raise ValueError("offset range is empty")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")

    @property
    def offsets(self) -> np.ndarray:
        return np.arange(self.offset_lo, self.offset_hi + 1)


@dataclass(frozen=True)
class DecodingCurve:
    offsets: np.ndarray  # frames
    frame_period_ms: float
    accuracy: np.ndarray
    baseline: np.ndarray
    n_train: np.ndarray
    n_test: np.ndarray
    n_dropped: np.ndarray

    @property
    def offsets_ms(self) -> np.ndarray:
        return self.offsets * self.frame_period_ms


@dataclass(frozen=True)
class TGMatrix:
    """Train-offset x test-offset accuracy grid for one word position."""

    offsets: np.ndarray
    frame_period_ms: float
    accuracy: np.ndarray  # [train_offset_index, test_offset_index]
    baseline: np.ndarray  # per test offset, same-offset majority baseline
    position: int

    @property
    def offsets_ms(self) -> np.ndarray:
        return self.offsets * self.frame_period_ms


def resolve_split(dataset: Dataset, cfg: WindowConfig) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """Train/test utterance lists: explicit utterance or speaker lists, or a
    seeded per-speaker split.

    In the seeded default, each speaker's utterances are shuffled from the
    seed and the first half (rounded up) trains; degenerate speaker
    structures fall back to a pooled 50/50 utterance split.  One split is
    drawn per run and reused at every offset.
    """
    if cfg.train_speakers is not None or cfg.test_speakers is not None:
        if cfg.train_speakers is None or cfg.test_speakers is None:
            raise ValueError("train and test speaker lists must be given together")
        overlap = set(cfg.train_speakers) & set(cfg.test_speakers)
        if overlap:
            raise ValueError(f"train and test speakers overlap: {sorted(overlap)}")
        known = {dataset.speaker_of(u) for u in dataset.utterances}
        unknown = (set(cfg.train_speakers) | set(cfg.test_speakers)) - known
        if unknown:
            raise ValueError(f"unknown speakers in split: {sorted(unknown)}")
        train = tuple(u for u in dataset.utterances
                      if dataset.speaker_of(u) in set(cfg.train_speakers))
        test = tuple(u for u in dataset.utterances
                     if dataset.speaker_of(u) in set(cfg.test_speakers))
    elif cfg.train_utterances is not None or cfg.test_utterances is not None:
        if cfg.train_utterances is None or cfg.test_utterances is None:
            raise ValueError("train and test utterance lists must be given together")
        train, test = tuple(cfg.train_utterances), tuple(cfg.test_utterances)
        overlap = set(train) & set(test)
        if overlap:
            raise ValueError(f"train and test utterances overlap: {sorted(overlap)}")
        known = set(dataset.utterances)
        unknown = (set(train) | set(test)) - known
        if unknown:
            raise ValueError(f"unknown utterances in split: {sorted(unknown)}")
    else:
        by_speaker: dict[str, list[str]] = {}
        for utt in dataset.utterances:
            by_speaker.setdefault(dataset.speaker_of(utt), []).append(utt)
        rng = Stream(cfg.seed, "utterance-split")
        train_list: list[str] = []
        test_list: list[str] = []
        for speaker in sorted(by_speaker):
            utts = sorted(by_speaker[speaker])
            rng.shuffle(utts)
            half = (len(utts) + 1) // 2
            train_list.extend(utts[:half])
            test_list.extend(utts[half:])
        if not train_list or not test_list:
            # degenerate speaker structure (e.g. one utterance per speaker):
            # fall back to a pooled 50/50 utterance split
            pooled = sorted(dataset.utterances)
            rng = Stream(cfg.seed, "utterance-split-pooled")
            rng.shuffle(pooled)
            half = (len(pooled) + 1) // 2
            train_list, test_list = pooled[:half], pooled[half:]
        train, test = tuple(sorted(train_list)), tuple(sorted(test_list))
    if not train or not test:
        raise ValueError("both train and test utterance sets must be non-empty")
    return train, test


def _run_indexed(tasks: Sequence[Callable[[], object]], workers: int) -> list:
    if workers <= 1:
        return [task() for task in tasks]
    results = [None] * len(tasks)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {pool.submit(task): i for i, task in enumerate(tasks)}
        for future in as_completed(futures):
            results[futures[future]] = future.result()
    return results


def _fit_and_score(dataset, offset, alpha, token_filter, train_utts, test_utts):
    train = assemble_samples(dataset, offset, token_filter, train_utts)
    test = assemble_samples(dataset, offset, token_filter, test_utts)
    model = ridge_fit(train.X, train.y, alpha)
    accuracy = float(np.mean(ridge_predict(model, test.X) == test.y))
    _, baseline = majority_baseline(train.y, test.y)
    return accuracy, baseline, train, test, model


def decoding_window(dataset: Dataset, cfg: WindowConfig, workers: int = 1) -> DecodingCurve:
    """Accuracy of one independently trained decoder per frame offset."""
    train_utts, test_utts = resolve_split(dataset, cfg)
    offsets = cfg.offsets

    def task(offset: int):
        def run():
            accuracy, baseline, train, test, _ = _fit_and_score(
                dataset, offset, cfg.alpha, cfg.token_filter, train_utts, test_utts
            )
            return accuracy, baseline, train.y.size, test.y.size, train.n_dropped + test.n_dropped
        return run

    rows = _run_indexed([task(int(o)) for o in offsets], workers)
    accuracy, baseline, n_train, n_test, n_dropped = map(np.asarray, zip(*rows))
    return DecodingCurve(
        offsets=offsets,
        frame_period_ms=dataset.frame_period_ms,
        accuracy=accuracy.astype(np.float64),
        baseline=baseline.astype(np.float64),
        n_train=n_train.astype(np.int64),
        n_test=n_test.astype(np.int64),
        n_dropped=n_dropped.astype(np.int64),
    )


def position_filter(position: int, base: TokenFilter | None = None) -> TokenFilter:
    if base is None:
        return lambda tok: tok.word_position == position
    return lambda tok: tok.word_position == position and base(tok)


def temporal_generalization(
    dataset: Dataset, cfg: WindowConfig, position: int, workers: int = 1
) -> TGMatrix:
    """Train one decoder per offset on position-p tokens; test each decoder
    at every offset.  The diagonal reproduces `decoding_window` exactly for
    the same configuration and filter."""
    if not 1 <= position <= MAX_WORD_POSITION:
        raise ValueError(f"position must be in 1..{MAX_WORD_POSITION}")
    train_utts, test_utts = resolve_split(dataset, cfg)
    token_filter = position_filter(position, cfg.token_filter)
    offsets = cfg.offsets
    n = offsets.size

    def fit_task(offset: int):
        def run():
            return _fit_and_score(dataset, offset, cfg.alpha, token_filter, train_utts, test_utts)
        return run

    fitted = _run_indexed([fit_task(int(o)) for o in offsets], workers)
    models = [row[4] for row in fitted]
    baseline = np.array([row[1] for row in fitted])
    diag_accuracy = [row[0] for row in fitted]

    def eval_task(j: int):
        def run():
            test = assemble_samples(dataset, int(offsets[j]), token_filter, test_utts)
            column = np.empty(n)
            for i, model in enumerate(models):
                if i == j:
                    column[i] = diag_accuracy[j]  # same computation; reuse keeps it bit-equal
                else:
                    column[i] = float(np.mean(ridge_predict(model, test.X) == test.y))
            return column
        return run

    columns = _run_indexed([eval_task(j) for j in range(n)], workers)
    accuracy = np.column_stack(columns)
    return TGMatrix(
        offsets=offsets,
        frame_period_ms=dataset.frame_period_ms,
        accuracy=accuracy,
        baseline=baseline,
        position=position,
    )


def extract_contours(matrix: TGMatrix, threshold: float) -> list[np.ndarray]:
    """Iso-accuracy polylines of a TG matrix, as (k, 2) arrays of
    (train_offset_ms, test_offset_ms) vertices."""
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    period = matrix.frame_period_ms
    lo = float(matrix.offsets[0])
    polylines = marching_squares(matrix.accuracy, threshold)
    return [(poly + lo) * period for poly in polylines]


@dataclass(frozen=True)
class ContextSpec:
    """How tokens are grouped into contexts for cross-context decoding."""

    mode: str = "word_position"  # or "manner_pair"
    vowels_only: bool = True
    subsample_n: int = 4500
    train_fraction: float = 0.8
    min_class_size: int = 1
    alpha: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("word_position", "manner_pair"):
            raise ValueError(f"unknown context mode {self.mode!r}")
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")
        if self.subsample_n < 2:
            raise ValueError("subsample_n must be at least 2")
        if self.min_class_size < 1:
            raise ValueError("min_class_size must be >= 1")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")


CONTEXT_MANNERS = ("plosive", "fricative", "nasal")


@dataclass(frozen=True)
class ContextSplit:
    contexts: dict[str, tuple[PhoneToken, ...]]
    dropped: dict[str, int]  # context -> available size below min_class_size


def split_contexts(dataset: Dataset, spec: ContextSpec) -> ContextSplit:
    """Group tokens into context classes.

    word_position mode keys tokens p1..p4 (later positions are excluded);
    manner_pair mode keeps vowels whose immediate utterance neighbors both
    have manner in {plosive, fricative, nasal}, keyed "prev__next".
    """
    vocab = dataset.vocab
    grouped: dict[str, list[PhoneToken]] = {}
    if spec.mode == "word_position":
        for tok in dataset.iter_tokens():
            if spec.vowels_only and not vocab.is_vowel(tok.label_index):
                continue
            if tok.word_position > MAX_WORD_POSITION:
                continue
            grouped.setdefault(f"p{tok.word_position}", []).append(tok)
    else:
        for utt in dataset.utterances:
            toks = dataset.tokens[utt]
            for idx, tok in enumerate(toks):
                if not vocab.is_vowel(tok.label_index):
                    continue
                if idx == 0 or idx == len(toks) - 1:
                    continue  # needs both neighbors
                prev_manner = vocab.manner(toks[idx - 1].label_index)
                next_manner = vocab.manner(toks[idx + 1].label_index)
                if prev_manner in CONTEXT_MANNERS and next_manner in CONTEXT_MANNERS:
                    grouped.setdefault(f"{prev_manner}__{next_manner}", []).append(tok)
    contexts = {}
    dropped = {}
    for name in sorted(grouped):
        if len(grouped[name]) >= spec.min_class_size:
            contexts[name] = tuple(grouped[name])
        else:
            dropped[name] = len(grouped[name])
    if not contexts:
        raise ValueError("no context class reaches min_class_size")
    return ContextSplit(contexts=contexts, dropped=dropped)


@dataclass(frozen=True)
class GeneralizationReport:
    """Accuracy and baseline curves per (train context, test context) pair."""

    contexts: tuple[str, ...]
    offsets: np.ndarray
    frame_period_ms: float
    accuracy: dict[tuple[str, str], np.ndarray]
    baseline: dict[tuple[str, str], np.ndarray]
    train_tokens: dict[str, tuple[PhoneToken, ...]]
    test_tokens: dict[str, tuple[PhoneToken, ...]]
    class_histograms: dict[str, dict[int, int]]
    available_counts: dict[str, int]
    dropped_contexts: dict[str, int]
    effects: dict[tuple[str, str], float]
    effect_window_ms: tuple[float, float]
    subsample_n: int
    train_fraction: float
    seed: int

    @property
    def offsets_ms(self) -> np.ndarray:
        return self.offsets * self.frame_period_ms

    def pairs(self, off_diagonal_only: bool = False) -> list[tuple[str, str]]:
        return [
            (a, b)
            for a in self.contexts
            for b in self.contexts
            if not (off_diagonal_only and a == b)
        ]


DEFAULT_EFFECT_WINDOW_MS = (0.0, 100.0)


def effect_from_curve(offsets_ms, accuracy, baseline, window_ms) -> float:
    """Mean of (accuracy - baseline) over the offsets inside window_ms."""
    offsets_ms = np.asarray(offsets_ms, dtype=np.float64)
    lo, hi = float(window_ms[0]), float(window_ms[1])
    mask = (offsets_ms >= lo) & (offsets_ms <= hi)
    if not mask.any():
        raise ValueError(f"no offsets inside effect window [{lo}, {hi}] ms")
    return float(np.mean(np.asarray(accuracy)[mask] - np.asarray(baseline)[mask]))


def cross_context_generalization(
    dataset: Dataset,
    spec: ContextSpec,
    offset_lo: int,
    offset_hi: int,
    workers: int = 1,
    effect_window_ms: tuple[float, float] = DEFAULT_EFFECT_WINDOW_MS,
) -> GeneralizationReport:
    """Subsample each context, split 80/20, and test every decoder on every
    context's held-out portion at each offset.

    Contexts with fewer than subsample_n tokens are dropped (reported in the
    result); at least two must survive.  The diagonal pairs evaluate on the
    held-out portion of the training context itself.
    """
    if offset_hi < offset_lo:
        raise ValueError("offset range is empty")
    split = split_contexts(dataset, spec)
    dropped = dict(split.dropped)
    retained: dict[str, tuple[PhoneToken, ...]] = {}
    for name, toks in split.contexts.items():
        if len(toks) >= spec.subsample_n:
            retained[name] = toks
        else:
            dropped[name] = len(toks)
    if len(retained) < 2:
        raise ValueError(
            f"need at least 2 contexts with >= {spec.subsample_n} tokens, "
            f"got {len(retained)} (dropped: {dropped})"
        )
    contexts = tuple(sorted(retained))

    n_train = int(round(spec.train_fraction * spec.subsample_n))
    if not 0 < n_train < spec.subsample_n:
        raise ValueError("train fraction leaves an empty train or test portion")
    train_tokens: dict[str, tuple[PhoneToken, ...]] = {}
    test_tokens: dict[str, tuple[PhoneToken, ...]] = {}
    for name in contexts:
        rng = Stream(spec.seed, f"context-subsample:{name}")
        chosen = rng.sample(retained[name], spec.subsample_n)
        train_tokens[name] = tuple(chosen[:n_train])
        test_tokens[name] = tuple(chosen[n_train:])

    train_sets = {name: set(toks) for name, toks in train_tokens.items()}
    test_sets = {name: set(toks) for name, toks in test_tokens.items()}
    offsets = np.arange(offset_lo, offset_hi + 1)

    def offset_task(oi: int):
        offset = int(offsets[oi])

        def run():
            trains = {
                name: assemble_samples(dataset, offset, train_sets[name].__contains__)
                for name in contexts
            }
            tests = {
                name: assemble_samples(dataset, offset, test_sets[name].__contains__)
                for name in contexts
            }
            cell = {}
            for a in contexts:
                model = ridge_fit(trains[a].X, trains[a].y, spec.alpha)
                for b in contexts:
                    acc = float(np.mean(ridge_predict(model, tests[b].X) == tests[b].y))
                    _, base = majority_baseline(trains[a].y, tests[b].y)
                    cell[(a, b)] = (acc, base)
            return cell

        return run

    cells = _run_indexed([offset_task(i) for i in range(offsets.size)], workers)
    accuracy = {pair: np.empty(offsets.size) for pair in cells[0]}
    baseline = {pair: np.empty(offsets.size) for pair in cells[0]}
    for oi, cell in enumerate(cells):
        for pair, (acc, base) in cell.items():
            accuracy[pair][oi] = acc
            baseline[pair][oi] = base

    histograms = {
        name: {int(lab): int(cnt) for lab, cnt in zip(*np.unique(
            [t.label_index for t in train_tokens[name] + test_tokens[name]],
            return_counts=True,
        ))}
        for name in contexts
    }
    offsets_ms = offsets * dataset.frame_period_ms
    effects = {
        pair: effect_from_curve(offsets_ms, accuracy[pair], baseline[pair], effect_window_ms)
        for pair in accuracy
    }
    return GeneralizationReport(
        contexts=contexts,
        offsets=offsets,
        frame_period_ms=dataset.frame_period_ms,
        accuracy=accuracy,
        baseline=baseline,
        train_tokens=train_tokens,
        test_tokens=test_tokens,
        class_histograms=histograms,
        available_counts={name: len(retained[name]) for name in contexts},
        dropped_contexts=dropped,
        effects=effects,
        effect_window_ms=(float(effect_window_ms[0]), float(effect_window_ms[1])),
        subsample_n=spec.subsample_n,
        train_fraction=spec.train_fraction,
        seed=spec.seed,
    )


def generalization_effect(
    report: GeneralizationReport,
    pair: tuple[str, str],
    window_ms: tuple[float, float] = DEFAULT_EFFECT_WINDOW_MS,
) -> float:
    """Scalar effect for one (train, test) pair: mean above-baseline accuracy
    over the given window of offsets (ms)."""
    if pair not in report.accuracy:
        raise ValueError(f"pair {pair!r} not present in report")
    return effect_from_curve(
        report.offsets_ms, report.accuracy[pair], report.baseline[pair], window_ms
    )


def effect_correlation(
    report_a: GeneralizationReport,
    report_b: GeneralizationReport,
    window_ms: tuple[float, float] = DEFAULT_EFFECT_WINDOW_MS,
):
    """Pair the off-diagonal generalization effects of two reports and
    correlate them.  Returns (r, p, table) where table rows are
    (train_context, test_context, effect_a, effect_b)."""
    from .numerics import pearson

    if report_a.contexts != report_b.contexts:
        raise ValueError(
            f"context sets differ: {report_a.contexts} vs {report_b.contexts}"
        )
    table = []
    for pair in report_a.pairs(off_diagonal_only=True):
        table.append((
            pair[0],
            pair[1],
            generalization_effect(report_a, pair, window_ms),
            generalization_effect(report_b, pair, window_ms),
        ))
    r, p = pearson([row[2] for row in table], [row[3] for row in table])
    return r, p, table


def label_histogram(tokens) -> dict[int, int]:
    labels, counts = np.unique([t.label_index for t in tokens], return_counts=True)
    return {int(l): int(c) for l, c in zip(labels, counts)}


def average_duration_ms(tokens) -> float:
    tokens = list(tokens)
    if not tokens:
        raise ValueError("no tokens to average")
    return float(np.mean([t.duration_s for t in tokens]) * 1000.0)
