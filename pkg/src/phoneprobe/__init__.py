"""phoneprobe: temporal decoding analyses for frame-level speech features.

The toolkit trains one closed-form linear phonetic decoder per time offset
relative to phone onset and measures three things: how long phoneme identity
stays decodable, how decoders generalize across time (temporal
generalization), and how decoders generalize across contexts (word position
or neighboring manner of articulation).  Features are ingested as '.npy'
matrices or computed from WAV audio (logmel, amplitude, pitch); a seeded
synthetic generator with known encoding dynamics serves as the test oracle.
"""

from .acoustics import (
    CovariateSeries,
    LogmelConfig,
    frame_amplitude,
    frame_pitch,
    logmel,
    read_wav,
)
from .analyses import (
    ContextSpec,
    ContextSplit,
    DecodingCurve,
    GeneralizationReport,
    TGMatrix,
    WindowConfig,
    cross_context_generalization,
    decoding_window,
    effect_correlation,
    extract_contours,
    generalization_effect,
    resolve_split,
    split_contexts,
    temporal_generalization,
)
from .contours import marching_squares
from .dataset import (
    Dataset,
    DatasetManifest,
    FeatureMatrix,
    PhoneToken,
    SampleSet,
    assemble_samples,
    load_dataset,
    load_features,
    onset_frame,
    parse_alignment,
    parse_manifest,
    save_features,
)
from .numerics import (
    CovariateProjector,
    RidgeModel,
    fit_projector,
    label_entropy,
    majority_baseline,
    pearson,
    project_out,
    ridge_fit,
    ridge_predict,
    ridge_scores,
)
from .synth import SyntheticSpec
from .synth import generate as generate_synthetic
from .vocab import PhonemeVocab, default_vocab, load_vocab

__version__ = "0.1.0"

__all__ = [
    "ContextSpec",
    "ContextSplit",
    "CovariateProjector",
    "CovariateSeries",
    "Dataset",
    "DatasetManifest",
    "DecodingCurve",
    "FeatureMatrix",
    "GeneralizationReport",
    "LogmelConfig",
    "PhoneToken",
    "PhonemeVocab",
    "RidgeModel",
    "SampleSet",
    "SyntheticSpec",
    "TGMatrix",
    "WindowConfig",
    "assemble_samples",
    "cross_context_generalization",
    "decoding_window",
    "default_vocab",
    "effect_correlation",
    "extract_contours",
    "fit_projector",
    "frame_amplitude",
    "frame_pitch",
    "generalization_effect",
    "generate_synthetic",
    "label_entropy",
    "load_dataset",
    "load_features",
    "load_vocab",
    "logmel",
    "majority_baseline",
    "marching_squares",
    "onset_frame",
    "parse_alignment",
    "parse_manifest",
    "pearson",
    "project_out",
    "read_wav",
    "resolve_split",
    "ridge_fit",
    "ridge_predict",
    "ridge_scores",
    "save_features",
    "split_contexts",
    "temporal_generalization",
]
