"""
Acoustic features: logmel, amplitude, pitch
===========================================

The acoustic front end computes three aligned per-frame series from a
waveform: a 40-band log mel spectrogram, RMS amplitude, and YIN pitch.
A synthetic tone sequence with changing frequency and level makes each
series easy to eyeball.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from phoneprobe import LogmelConfig, frame_amplitude, frame_pitch, logmel

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

RATE = 16000

# %%
# One second each of 120 Hz, 200 Hz, and 320 Hz tones at different levels,
# separated by short silences.

segments = []
for freq, level in ((120.0, 0.7), (200.0, 0.35), (320.0, 0.5)):
    t = np.arange(RATE) / RATE
    segments.append(level * np.sin(2 * np.pi * freq * t))
    segments.append(np.zeros(RATE // 5))
waveform = np.concatenate(segments)

cfg = LogmelConfig(sample_rate_hz=RATE)
mel = logmel(waveform, cfg)
amplitude = frame_amplitude(waveform, cfg)
pitch = frame_pitch(waveform, cfg)
print(f"{mel.frames} frames x {mel.dims} mel bands")

# %%
# All three series share one framing, so their frame axes line up exactly.

times = np.arange(mel.frames) * cfg.hop_ms / 1000.0
fig, axes = plt.subplots(3, 1, figsize=(9, 7), sharex=True)
axes[0].imshow(mel.data.T, origin="lower", aspect="auto",
               extent=[times[0], times[-1], 0, mel.dims])
axes[0].set_ylabel("mel band")
axes[0].set_title("log mel spectrogram")
axes[1].plot(times, amplitude.values)
axes[1].set_ylabel("RMS amplitude")
axes[2].plot(times, pitch.values, ".", markersize=3)
axes[2].set_ylabel("pitch (Hz), 0 = unvoiced")
axes[2].set_xlabel("time (s)")
fig.tight_layout()
fig.savefig(OUT / "acoustic_features.png", dpi=120)
print(f"wrote {OUT / 'acoustic_features.png'}")
