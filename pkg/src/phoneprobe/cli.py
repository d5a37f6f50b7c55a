"""Command-line surface: dataset validation, feature extraction, the three
analyses, effect correlation, synthetic data, and SVG figures.

Every run writes CSV/JSON outputs stamped with a hash of its configuration
and the seed; identical configurations reproduce outputs byte-for-byte, and
the worker count only affects wall time.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import analyses, results, svgplot
from .acoustics import LogmelConfig, frame_amplitude, frame_pitch, logmel, read_wav
from .dataset import Dataset, FeatureMatrix, load_dataset, parse_manifest, save_features
from .numerics import fit_projector, label_entropy, pearson, project_out
from .synth import SyntheticSpec, generate

TG_CONTOUR_THRESHOLDS = (0.2, 0.4)


def _parse_int_range(text: str) -> tuple[int, int]:
    try:
        lo, hi = text.split("..", 1)
        return int(lo), int(hi)
    except ValueError:
        raise ValueError(f"expected a range like 'lo..hi', got {text!r}") from None


def _parse_float_range(text: str) -> tuple[float, float]:
    try:
        lo, hi = text.split("..", 1)
        return float(lo), float(hi)
    except ValueError:
        raise ValueError(f"expected a range like 'lo..hi', got {text!r}") from None


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _config_payload(args, keys: tuple[str, ...]) -> dict:
    payload = {"command": args.command}
    for key in keys:
        payload[key] = getattr(args, key)
    return payload


def _load_analysis_dataset(args) -> tuple[Dataset, dict]:
    """Load the manifest's dataset, applying covariate regress-out when asked.

    --preprocess defaults to "on" when --covariates is supplied and "off"
    otherwise; "on" without covariates is an error.
    """
    dataset = load_dataset(args.manifest)
    mode = args.preprocess or ("on" if args.covariates else "off")
    if mode == "off":
        return dataset, {"preprocess": "off"}
    if not args.covariates:
        raise ValueError("--preprocess on requires --covariates")
    covariates = _read_covariates_tsv(args.covariates)
    dataset, projector = _project_dataset(dataset, covariates, args.alpha)
    return dataset, {
        "preprocess": "on",
        "covariates": str(args.covariates),
        "n_directions_removed": int(projector.directions.shape[0]),
    }


def _read_covariates_tsv(path) -> dict[str, np.ndarray]:
    rows: dict[str, list[tuple[int, float, float]]] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise ValueError(f"{path}:{lineno}: expected 4 tab-separated columns")
        if lineno == 1 and parts[1].strip() == "frame":
            continue  # header
        utt = parts[0].strip()
        try:
            frame, amplitude, pitch = int(parts[1]), float(parts[2]), float(parts[3])
        except ValueError:
            raise ValueError(f"{path}:{lineno}: malformed numeric field") from None
        rows.setdefault(utt, []).append((frame, amplitude, pitch))
    if not rows:
        raise ValueError(f"{path}: no covariate rows")
    out = {}
    for utt, triples in rows.items():
        triples.sort(key=lambda t: t[0])
        out[utt] = np.array([(a, p) for _, a, p in triples], dtype=np.float64)
    return out


def _project_dataset(dataset: Dataset, covariates: dict[str, np.ndarray], alpha: float):
    common = sorted(set(dataset.features) & set(covariates))
    if not common:
        raise ValueError("no utterances shared between the manifest and the covariate file")
    feature_parts, covariate_parts = [], []
    for utt in common:
        fm = dataset.features[utt]
        cov = covariates[utt]
        n = min(fm.frames, cov.shape[0])  # series truncated to the shorter of the two
        feature_parts.append(fm.data[:n])
        covariate_parts.append(cov[:n])
    projector = fit_projector(
        np.concatenate(feature_parts), np.concatenate(covariate_parts), alpha
    )
    projected = {
        utt: FeatureMatrix(project_out(projector, fm.data), fm.frame_period_ms)
        for utt, fm in dataset.features.items()
    }
    new_dataset = Dataset(
        vocab=dataset.vocab,
        frame_period_ms=dataset.frame_period_ms,
        features=projected,
        tokens=dataset.tokens,
    )
    return new_dataset, projector


def _label_counts(dataset: Dataset, tokens) -> dict[str, int]:
    histogram = analyses.label_histogram(tokens)
    return {dataset.vocab.label(i): n for i, n in sorted(histogram.items())}


# subcommands ---------------------------------------------------------------

def cmd_validate(args) -> int:
    dataset = load_dataset(args.manifest)
    speakers = {dataset.speaker_of(u) for u in dataset.utterances}
    print(f"utterances: {len(dataset.utterances)}")
    print(f"speakers: {len(speakers)}")
    print(f"tokens: {dataset.n_tokens}")
    print(f"frames: {dataset.n_frames}")
    print(f"dims: {dataset.dims}")
    print(f"frame_period_ms: {dataset.frame_period_ms:g}")
    return 0


def cmd_synth(args) -> int:
    spec_payload = results.read_json(args.spec)
    spec = SyntheticSpec(**spec_payload)
    manifest_path = generate(spec, args.out)
    print(f"wrote {manifest_path}")
    return 0


def cmd_logmel(args) -> int:
    manifest = parse_manifest(args.manifest, features_kind="wav")
    out = _out_dir(args)
    (out / "features").mkdir(exist_ok=True)
    payload = _config_payload(args, ("manifest", "n_mels"))
    config_hash = results.config_digest(payload)

    covariate_lines = ["utterance_id\tframe\tamplitude\tpitch_hz"]
    features_map = {}
    n_frames_total = 0
    for utt in sorted(manifest.features):
        samples, rate = read_wav(manifest.features[utt])
        cfg = LogmelConfig(
            sample_rate_hz=rate, hop_ms=manifest.frame_period_ms, n_mels=args.n_mels
        )
        fm = logmel(samples, cfg)
        amplitude = frame_amplitude(samples, cfg)
        pitch = frame_pitch(samples, cfg)
        rel = f"features/{utt}.npy"
        save_features(out / rel, fm)
        features_map[utt] = rel
        n_frames_total += fm.frames
        for i in range(fm.frames):
            covariate_lines.append(
                f"{utt}\t{i}\t{results.fmt_float(amplitude.values[i])}"
                f"\t{results.fmt_float(pitch.values[i])}"
            )
    (out / "covariates.tsv").write_text("\n".join(covariate_lines) + "\n", encoding="utf-8")
    results.write_json(out / "manifest.json", {
        "frame_period_ms": manifest.frame_period_ms,
        "dims": args.n_mels,
        "vocab": str(manifest.vocab_path),
        "alignments": [str(p) for p in manifest.alignment_paths],
        "features": features_map,
    })
    results.write_json(out / "summary.json", {
        "command": "logmel",
        "config": {k: str(v) for k, v in payload.items()},
        "config_hash": config_hash,
        "seed": args.seed,
        "n_utterances": len(features_map),
        "n_frames": n_frames_total,
        "dims": args.n_mels,
    })
    return 0


def cmd_preprocess(args) -> int:
    dataset = load_dataset(args.manifest)
    covariates = _read_covariates_tsv(args.covariates)
    projected, projector = _project_dataset(dataset, covariates, args.alpha)
    out = _out_dir(args)
    (out / "features").mkdir(exist_ok=True)
    manifest = parse_manifest(args.manifest)
    features_map = {}
    for utt in sorted(projected.features):
        rel = f"features/{utt}.npy"
        save_features(out / rel, projected.features[utt])
        features_map[utt] = rel
    payload = _config_payload(args, ("manifest", "covariates", "alpha"))
    results.write_json(out / "manifest.json", {
        "frame_period_ms": dataset.frame_period_ms,
        "dims": dataset.dims,
        "vocab": str(manifest.vocab_path),
        "alignments": [str(p) for p in manifest.alignment_paths],
        "features": features_map,
    })
    results.write_json(out / "summary.json", {
        "command": "preprocess",
        "config": {k: str(v) for k, v in payload.items()},
        "config_hash": results.config_digest(payload),
        "seed": args.seed,
        "n_directions_removed": int(projector.directions.shape[0]),
        "n_utterances": len(features_map),
    })
    return 0


def _window_config(args) -> analyses.WindowConfig:
    lo, hi = args.offsets
    return analyses.WindowConfig(offset_lo=lo, offset_hi=hi, alpha=args.alpha, seed=args.seed)


def cmd_window(args) -> int:
    dataset, preprocess_info = _load_analysis_dataset(args)
    cfg = _window_config(args)
    curve = analyses.decoding_window(dataset, cfg, workers=args.workers)
    out = _out_dir(args)
    payload = _config_payload(args, ("manifest", "offsets", "alpha", "seed", "covariates"))
    payload["preprocess"] = preprocess_info["preprocess"]
    config_hash = results.config_digest(payload)
    header, rows = results.decoding_window_rows(curve)
    results.write_csv(out / "decoding_window.csv", config_hash, args.seed, header, rows)

    train_utts, test_utts = analyses.resolve_split(dataset, cfg)
    tokens = list(dataset.iter_tokens())
    results.write_json(out / "summary.json", {
        "command": "window",
        "config": {k: str(v) for k, v in payload.items()},
        "config_hash": config_hash,
        "seed": args.seed,
        "preprocess": preprocess_info,
        "split": {
            "train_utterances": list(train_utts),
            "test_utterances": list(test_utts),
            "policy": "per_speaker_seeded",
            "per_offset_resample": False,
        },
        "n_tokens": len(tokens),
        "label_counts": _label_counts(dataset, tokens),
        "label_entropy_bits": label_entropy([t.label_index for t in tokens]),
        "average_phone_duration_ms": analyses.average_duration_ms(tokens),
    })
    return 0


def cmd_tg(args) -> int:
    dataset, preprocess_info = _load_analysis_dataset(args)
    cfg = _window_config(args)
    pos_lo, pos_hi = args.positions
    positions = [p for p in range(pos_lo, pos_hi + 1)]
    if not positions or positions[0] < 1 or positions[-1] > analyses.MAX_WORD_POSITION:
        raise ValueError(f"positions must lie within 1..{analyses.MAX_WORD_POSITION}")
    matrices = [
        analyses.temporal_generalization(dataset, cfg, position, workers=args.workers)
        for position in positions
    ]
    out = _out_dir(args)
    payload = _config_payload(
        args, ("manifest", "offsets", "positions", "alpha", "seed", "covariates")
    )
    payload["preprocess"] = preprocess_info["preprocess"]
    config_hash = results.config_digest(payload)

    header, rows = results.tg_matrix_rows(matrices)
    results.write_csv(out / "tg_matrix.csv", config_hash, args.seed, header, rows)

    per_matrix = []
    for matrix in matrices:
        for threshold in TG_CONTOUR_THRESHOLDS:
            per_matrix.append(
                (matrix.position, threshold, analyses.extract_contours(matrix, threshold))
            )
    header, rows = results.contour_rows(per_matrix)
    results.write_csv(out / "contours.csv", config_hash, args.seed, header, rows)

    position_stats = {}
    shift = 0.0
    for position in positions:
        toks = [t for t in dataset.iter_tokens() if t.word_position == position]
        duration = analyses.average_duration_ms(toks)
        position_stats[f"p{position}"] = {
            "n_tokens": len(toks),
            "label_entropy_bits": label_entropy([t.label_index for t in toks]),
            "average_duration_ms": duration,
            "shift_ms": shift,  # cumulative mean duration of preceding positions
        }
        shift += duration
    results.write_json(out / "summary.json", {
        "command": "tg",
        "config": {k: str(v) for k, v in payload.items()},
        "config_hash": config_hash,
        "seed": args.seed,
        "preprocess": preprocess_info,
        "contour_thresholds": list(TG_CONTOUR_THRESHOLDS),
        "positions": position_stats,
        "per_offset_resample": False,
    })
    return 0


def cmd_context(args) -> int:
    dataset, preprocess_info = _load_analysis_dataset(args)
    spec = analyses.ContextSpec(
        mode="word_position" if args.context_mode == "position" else "manner_pair",
        subsample_n=args.subsample_n,
        train_fraction=args.train_frac,
        min_class_size=args.min_class_size,
        alpha=args.alpha,
        seed=args.seed,
    )
    lo, hi = args.offsets
    report = analyses.cross_context_generalization(
        dataset, spec, lo, hi, workers=args.workers, effect_window_ms=args.effect_window
    )
    for name, size in sorted(report.dropped_contexts.items()):
        print(f"warning: context {name!r} dropped ({size} tokens available)", file=sys.stderr)
    out = _out_dir(args)
    payload = _config_payload(args, (
        "manifest", "offsets", "context_mode", "subsample_n", "train_frac",
        "min_class_size", "effect_window", "alpha", "seed", "covariates",
    ))
    payload["preprocess"] = preprocess_info["preprocess"]
    config_hash = results.config_digest(payload)
    header, rows = results.context_gen_rows(report)
    results.write_csv(out / "context_gen.csv", config_hash, args.seed, header, rows)

    vocab = dataset.vocab
    results.write_json(out / "summary.json", {
        "command": "context",
        "config": {k: str(v) for k, v in payload.items()},
        "config_hash": config_hash,
        "seed": args.seed,
        "preprocess": preprocess_info,
        "contexts": list(report.contexts),
        "dropped_contexts": {k: int(v) for k, v in sorted(report.dropped_contexts.items())},
        "available_counts": {k: int(v) for k, v in sorted(report.available_counts.items())},
        "subsample_n": report.subsample_n,
        "train_fraction": report.train_fraction,
        "effect_window_ms": list(report.effect_window_ms),
        "effects": {
            f"{a}->{b}": report.effects[(a, b)] for a, b in report.pairs()
        },
        "class_histograms": {
            ctx: {vocab.label(i): n for i, n in sorted(hist.items())}
            for ctx, hist in report.class_histograms.items()
        },
        "class_entropies_bits": {
            ctx: label_entropy(
                [t.label_index for t in report.train_tokens[ctx] + report.test_tokens[ctx]]
            )
            for ctx in report.contexts
        },
    })
    return 0


def cmd_correlate(args) -> int:
    contexts_a, offsets_a, acc_a, base_a = results.context_curves_from_csv(
        Path(args.a) / "context_gen.csv"
    )
    contexts_b, offsets_b, acc_b, base_b = results.context_curves_from_csv(
        Path(args.b) / "context_gen.csv"
    )
    if contexts_a != contexts_b:
        raise ValueError(f"context sets differ: {contexts_a} vs {contexts_b}")
    window = args.effect_window
    table = []
    for a_ctx in contexts_a:
        for b_ctx in contexts_a:
            if a_ctx == b_ctx:
                continue
            pair = (a_ctx, b_ctx)
            table.append((
                a_ctx,
                b_ctx,
                analyses.effect_from_curve(offsets_a, acc_a[pair], base_a[pair], window),
                analyses.effect_from_curve(offsets_b, acc_b[pair], base_b[pair], window),
            ))
    r, p = pearson([row[2] for row in table], [row[3] for row in table])
    out = _out_dir(args)
    payload = _config_payload(args, ("a", "b", "effect_window"))
    config_hash = results.config_digest(payload)
    header, rows = results.effects_rows(table)
    results.write_csv(out / "effects.csv", config_hash, args.seed, header, rows)
    results.write_json(out / "summary.json", {
        "command": "correlate",
        "config": {k: str(v) for k, v in payload.items()},
        "config_hash": config_hash,
        "seed": args.seed,
        "effect_window_ms": list(window),
        "n_pairs": len(table),
        "pearson_r": r,
        "p_value": p,
        "pairs": [[a, b, ea, eb] for a, b, ea, eb in table],
    })
    print(f"r={r:.4f} p={p:.3g} over {len(table)} off-diagonal pairs")
    return 0


def cmd_plot(args) -> int:
    res = Path(args.results)
    out = Path(args.out) if args.out else res
    out.mkdir(parents=True, exist_ok=True)
    payload = _config_payload(args, ("results", "kind"))
    config_hash = results.config_digest(payload)
    if args.kind == "window":
        meta, header, rows = results.read_csv(res / "decoding_window.csv")
        summary = results.read_json(res / "summary.json")
        cols = {name: i for i, name in enumerate(header)}
        offsets_ms = [float(r[cols["offset_ms"]]) for r in rows]
        accuracy = [float(r[cols["accuracy"]]) for r in rows]
        baseline = [float(r[cols["baseline"]]) for r in rows]
        svg = svgplot.render_window_svg(
            offsets_ms, accuracy, baseline,
            float(summary.get("average_phone_duration_ms", 0.0)),
            config_hash, int(meta.get("seed", 0)),
        )
        (out / "window.svg").write_text(svg, encoding="utf-8")
    elif args.kind == "tg":
        meta, header, rows = results.read_csv(res / "contours.csv")
        summary = results.read_json(res / "summary.json")
        cols = {name: i for i, name in enumerate(header)}
        grouped: dict[int, dict[float, dict[int, list]]] = {}
        for row in rows:
            position = int(row[cols["position"]])
            threshold = float(row[cols["threshold"]])
            poly_id = int(row[cols["polyline_id"]])
            vertex = (float(row[cols["train_ms"]]), float(row[cols["test_ms"]]))
            grouped.setdefault(position, {}).setdefault(threshold, {}) \
                .setdefault(poly_id, []).append(vertex)
        contours_by_position = {
            position: [
                (threshold, [polys[k] for k in sorted(polys)])
                for threshold, polys in sorted(by_threshold.items())
            ]
            for position, by_threshold in grouped.items()
        }
        shifts = {
            int(name[1:]): stats.get("shift_ms", 0.0)
            for name, stats in summary.get("positions", {}).items()
        }
        svg = svgplot.render_tg_svg(
            contours_by_position, shifts, config_hash, int(meta.get("seed", 0))
        )
        (out / "tg.svg").write_text(svg, encoding="utf-8")
    else:
        meta, header, rows = results.read_csv(res / "effects.csv")
        summary = results.read_json(res / "summary.json")
        cols = {name: i for i, name in enumerate(header)}
        table = [
            (
                row[cols["train_context"]],
                row[cols["test_context"]],
                float(row[cols["effect_primary"]]),
                float(row[cols["effect_acoustic"]]),
            )
            for row in rows
        ]
        svg = svgplot.render_effects_svg(
            table, float(summary.get("pearson_r", float("nan"))),
            config_hash, int(meta.get("seed", 0)),
        )
        (out / "effects.svg").write_text(svg, encoding="utf-8")
    return 0


# parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phoneprobe",
        description="Per-offset linear phonetic decoding analyses on frame-level features.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, manifest=True, out=True):
        if manifest:
            p.add_argument("--manifest", required=True, help="dataset manifest JSON")
        if out:
            p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--alpha", type=float, default=1.0)

    def analysis_flags(p):
        p.add_argument("--offsets", type=_parse_int_range, default=(-80, 79),
                       metavar="LO..HI", help="inclusive frame offset range (default -80..79)")
        p.add_argument("--preprocess", choices=("on", "off"), default=None,
                       help="regress covariates out of the features "
                            "(default: on when --covariates is given)")
        p.add_argument("--covariates", default=None, help="covariate TSV from the logmel step")

    p = sub.add_parser("validate", help="load a manifest and print dataset counts")
    common(p, out=False)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("synth", help="generate a synthetic dataset from a spec JSON")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("logmel", help="compute logmel features and covariates from WAVs")
    common(p)
    p.add_argument("--n-mels", type=int, default=40, dest="n_mels")
    p.set_defaults(func=cmd_logmel)

    p = sub.add_parser("preprocess", help="regress covariates out and write new features")
    common(p)
    p.add_argument("--covariates", required=True)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("window", help="per-offset decoding accuracy sweep")
    common(p)
    analysis_flags(p)
    p.set_defaults(func=cmd_window)

    p = sub.add_parser("tg", help="temporal generalization matrices per word position")
    common(p)
    analysis_flags(p)
    p.add_argument("--positions", type=_parse_int_range, default=(1, 4), metavar="LO..HI")
    p.set_defaults(func=cmd_tg)

    p = sub.add_parser("context", help="cross-context generalization of vowel decoders")
    common(p)
    analysis_flags(p)
    p.add_argument("--context-mode", choices=("position", "manner"), default="position",
                   dest="context_mode")
    p.add_argument("--subsample-n", type=int, default=4500, dest="subsample_n")
    p.add_argument("--train-frac", type=float, default=0.8, dest="train_frac")
    p.add_argument("--min-class-size", type=int, default=1, dest="min_class_size")
    p.add_argument("--effect-window", type=_parse_float_range, default=(0.0, 100.0),
                   dest="effect_window", metavar="LO..HI", help="effect window in ms")
    p.set_defaults(func=cmd_context)

    p = sub.add_parser("correlate", help="correlate effects of two context runs")
    p.add_argument("--a", required=True, help="results dir of the primary-feature run")
    p.add_argument("--b", required=True, help="results dir of the acoustic-feature run")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--effect-window", type=_parse_float_range, default=(0.0, 100.0),
                   dest="effect_window", metavar="LO..HI")
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("plot", help="render SVG figures from result CSVs")
    p.add_argument("--results", required=True)
    p.add_argument("--kind", choices=("window", "tg", "effects"), required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_plot)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
