"""Log mel-filterbank features and SpecAugment-style masking."""

from __future__ import annotations

import numpy as np
from scipy.signal import get_window

from hearaug.audio_io import AudioBuffer
from hearaug.melscale import hz_to_mel, mel_to_hz
from hearaug.sampling import RandomStream

N_MEL_BANDS = 80
FRAME_MS = 25.0
STRIDE_MS = 10.0
LOG_FLOOR = 1e-10

MAX_FREQ_MASKS = 2
MAX_TIME_MASKS = 2
MAX_FREQ_MASK_WIDTH = 30
MAX_TIME_MASK_WIDTH = 40


def _mel_filter_weights(n_fft: int, sample_rate: int) -> np.ndarray:
    """Triangular mel filters on rfft bins, area-normalised per band."""
    bin_freqs = np.arange(n_fft // 2 + 1) * (sample_rate / n_fft)
    edges = mel_to_hz(np.linspace(hz_to_mel(0.0), hz_to_mel(sample_rate / 2.0), N_MEL_BANDS + 2))
    weights = np.zeros((N_MEL_BANDS, len(bin_freqs)))
    for m in range(N_MEL_BANDS):
        lo, centre, hi = edges[m], edges[m + 1], edges[m + 2]
        up = (bin_freqs - lo) / max(centre - lo, 1e-12)
        down = (hi - bin_freqs) / max(hi - centre, 1e-12)
        tri = np.maximum(0.0, np.minimum(up, down))
        total = tri.sum()
        if total > 0:
            weights[m] = tri / total
    return weights


_weights_cache: dict[tuple[int, int], np.ndarray] = {}


def mel_features(buf: AudioBuffer) -> np.ndarray:
    """80-band log mel energies, 25 ms frames with a 10 ms stride.

    Only frames that fit entirely inside the signal are emitted, so 1 s at
    16 kHz yields (16000 - 400) / 160 + 1 = 98 frames. Energies are floored
    at 1e-10 before the log.
    """
    rate = buf.sample_rate
    frame = int(round(rate * FRAME_MS / 1000.0))
    stride = int(round(rate * STRIDE_MS / 1000.0))
    n_fft = 1 << (frame - 1).bit_length()
    x = buf.samples
    if len(x) < frame:
        return np.zeros((0, N_MEL_BANDS))
    n_frames = 1 + (len(x) - frame) // stride
    idx = np.arange(frame)[None, :] + stride * np.arange(n_frames)[:, None]
    window = get_window("hann", frame, fftbins=True)
    spec = np.fft.rfft(x[idx] * window[None, :], n=n_fft, axis=1)
    power = np.abs(spec) ** 2

    key = (n_fft, rate)
    weights = _weights_cache.get(key)
    if weights is None:
        weights = _mel_filter_weights(n_fft, rate)
        _weights_cache[key] = weights
    return np.log(np.maximum(power @ weights.T, LOG_FLOOR))


def mean_normalize(feat: np.ndarray) -> np.ndarray:
    """Per-utterance mean normalisation (per band, across frames)."""
    if feat.shape[0] == 0:
        return feat.copy()
    return feat - feat.mean(axis=0, keepdims=True)


def spec_augment_mask(feat: np.ndarray, rng: RandomStream) -> np.ndarray:
    """Mask random frequency and time bands, SpecAugment style.

    Draws the number of masks per axis uniformly from {0, 1, 2}; frequency
    mask widths are uniform on [0, 30] bins and time mask widths on [0, 40]
    frames, both clamped to the matrix. Masked cells are set to 0, which is
    the per-utterance mean when the input has been mean-normalised
    (see mean_normalize). Time warping is not applied.
    """
    feat = np.asarray(feat, dtype=np.float64)
    if feat.size == 0:
        raise ValueError("feature matrix must be non-empty")
    out = feat.copy()
    n_frames, n_bands = out.shape
    gen = rng.generator
    n_f = int(gen.integers(0, MAX_FREQ_MASKS + 1))
    n_t = int(gen.integers(0, MAX_TIME_MASKS + 1))
    for _ in range(n_f):
        width = min(int(gen.integers(0, MAX_FREQ_MASK_WIDTH + 1)), n_bands)
        start = int(gen.integers(0, n_bands - width + 1))
        out[:, start : start + width] = 0.0
    for _ in range(n_t):
        width = min(int(gen.integers(0, MAX_TIME_MASK_WIDTH + 1)), n_frames)
        start = int(gen.integers(0, n_frames - width + 1))
        out[start : start + width, :] = 0.0
    return out
