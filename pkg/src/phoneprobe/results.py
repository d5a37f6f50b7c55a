"""Deterministic result files: CSV tables with a metadata comment line,
and canonical JSON summaries.

Every file starts with (or embeds) the run's config hash and seed, so
re-running an identical configuration reproduces outputs byte-for-byte.
Floats are written with repr, which is shortest-round-trip and stable.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from pathlib import Path

import numpy as np


def config_digest(payload: dict) -> str:
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def fmt_float(x) -> str:
    return repr(float(x))


def fmt_ms(x) -> str:
    """Milliseconds: integral values print as integers ("-800"), else repr."""
    value = float(x)
    return str(int(value)) if value == int(value) else repr(value)


def meta_line(config_hash: str, seed: int) -> str:
    return f"# config_hash={config_hash} seed={seed}"


def write_csv(path: str | Path, config_hash: str, seed: int, header, rows) -> None:
    buf = io.StringIO()
    buf.write(meta_line(config_hash, seed) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def read_csv(path: str | Path) -> tuple[dict, list[str], list[list[str]]]:
    """Read a result CSV back: (metadata, header, string rows)."""
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    meta: dict[str, str] = {}
    start = 0
    if lines and lines[0].startswith("#"):
        for part in lines[0].lstrip("# ").split():
            if "=" in part:
                key, value = part.split("=", 1)
                meta[key] = value
        start = 1
    reader = csv.reader(lines[start:])
    table = [row for row in reader if row]
    if not table:
        raise ValueError(f"{path}: no header row")
    return meta, table[0], table[1:]


def write_json(path: str | Path, payload: dict) -> None:
    Path(path).write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def read_json(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


# row builders -------------------------------------------------------------

def decoding_window_rows(curve):
    header = ["offset_ms", "accuracy", "baseline", "n_train", "n_test", "n_dropped"]
    rows = [
        [
            fmt_ms(ms),
            fmt_float(acc),
            fmt_float(base),
            str(int(ntr)),
            str(int(nte)),
            str(int(ndr)),
        ]
        for ms, acc, base, ntr, nte, ndr in zip(
            curve.offsets_ms, curve.accuracy, curve.baseline,
            curve.n_train, curve.n_test, curve.n_dropped,
        )
    ]
    return header, rows


def tg_matrix_rows(matrices):
    header = ["position", "train_offset_ms", "test_offset_ms", "accuracy"]
    rows = []
    for matrix in matrices:
        ms = matrix.offsets_ms
        for i, train_ms in enumerate(ms):
            for j, test_ms in enumerate(ms):
                rows.append([
                    str(matrix.position),
                    fmt_ms(train_ms),
                    fmt_ms(test_ms),
                    fmt_float(matrix.accuracy[i, j]),
                ])
    return header, rows


def contour_rows(per_matrix_contours):
    """per_matrix_contours: list of (position, threshold, polylines)."""
    header = ["position", "threshold", "polyline_id", "vertex_index", "train_ms", "test_ms"]
    rows = []
    for position, threshold, polylines in per_matrix_contours:
        for poly_id, poly in enumerate(polylines):
            for vertex_index, (train_ms, test_ms) in enumerate(poly):
                rows.append([
                    str(position),
                    fmt_float(threshold),
                    str(poly_id),
                    str(vertex_index),
                    fmt_float(train_ms),
                    fmt_float(test_ms),
                ])
    return header, rows


def context_gen_rows(report):
    header = ["train_context", "test_context", "offset_ms", "accuracy", "baseline"]
    rows = []
    for train_ctx, test_ctx in report.pairs():
        acc = report.accuracy[(train_ctx, test_ctx)]
        base = report.baseline[(train_ctx, test_ctx)]
        for ms, a, b in zip(report.offsets_ms, acc, base):
            rows.append([train_ctx, test_ctx, fmt_ms(ms), fmt_float(a), fmt_float(b)])
    return header, rows


def effects_rows(table):
    """table rows: (train_context, test_context, effect_primary, effect_acoustic)."""
    header = ["train_context", "test_context", "effect_primary", "effect_acoustic"]
    rows = [[a, b, fmt_float(ea), fmt_float(eb)] for a, b, ea, eb in table]
    return header, rows


def context_curves_from_csv(path):
    """Rebuild per-pair curves from a context_gen.csv.

    Returns (contexts, offsets_ms, accuracy, baseline) with dict keys
    (train_context, test_context)."""
    _, header, rows = read_csv(path)
    expected = ["train_context", "test_context", "offset_ms", "accuracy", "baseline"]
    if header != expected:
        raise ValueError(f"{path}: unexpected header {header}, need {expected}")
    curves: dict[tuple[str, str], list[tuple[float, float, float]]] = {}
    for train_ctx, test_ctx, ms, acc, base in rows:
        curves.setdefault((train_ctx, test_ctx), []).append(
            (float(ms), float(acc), float(base))
        )
    contexts = tuple(sorted({pair[0] for pair in curves}))
    accuracy = {}
    baseline = {}
    offsets_ms = None
    for pair, triples in curves.items():
        triples.sort(key=lambda t: t[0])
        ms = np.array([t[0] for t in triples])
        if offsets_ms is None:
            offsets_ms = ms
        elif not np.array_equal(offsets_ms, ms):
            raise ValueError(f"{path}: inconsistent offsets across pairs")
        accuracy[pair] = np.array([t[1] for t in triples])
        baseline[pair] = np.array([t[2] for t in triples])
    return contexts, offsets_ms, accuracy, baseline
