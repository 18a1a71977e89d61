"""Shared fixtures: synthetic speech and disposable WAV corpora."""

from __future__ import annotations

import numpy as np
import pytest
from scipy.signal import butter, lfilter

from hearaug import AudioBuffer, write_wav

RATE = 16000

VOWEL_FORMANTS = [(730, 1090, 2440), (270, 2290, 3010), (300, 870, 2240), (660, 1720, 2410)]


def synth_speech(duration: float, rate: int = RATE, seed: int = 0, rms_dbfs: float = -26.0):
    """Speech-like signal: formant-filtered pulse trains, fricative bursts, pauses.

    Returns (samples, voiced_mask); the mask marks the voiced segments.
    """
    rng = np.random.default_rng(seed)
    n_total = int(duration * rate)
    x = np.zeros(n_total)
    voiced = np.zeros(n_total, dtype=bool)
    pos = 0
    while pos < n_total:
        kind = rng.choice(["voiced", "unvoiced", "pause"], p=[0.6, 0.25, 0.15])
        dur = {
            "voiced": rng.uniform(0.15, 0.35),
            "unvoiced": rng.uniform(0.08, 0.18),
            "pause": rng.uniform(0.05, 0.12),
        }[kind]
        n = min(int(dur * rate), n_total - pos)
        if n <= 0:
            break
        if kind == "voiced":
            f0 = rng.uniform(90, 200)
            glide = rng.uniform(-0.15, 0.15)
            t = np.arange(n) / rate
            inst_f0 = f0 * (1 + glide * t / max(t[-1], 1e-6))
            phase = 2 * np.pi * np.cumsum(inst_f0) / rate
            frac = (phase / (2 * np.pi)) % 1.0
            src = np.where(frac < 0.12, 0.5 * (1 - np.cos(2 * np.pi * frac / 0.12)), 0.0)
            src -= src.mean()
            seg = np.zeros(n)
            for f_c, bw in zip(rng.permutation(VOWEL_FORMANTS)[0], (90.0, 110.0, 160.0)):
                r = np.exp(-np.pi * bw / rate)
                a = [1.0, -2 * r * np.cos(2 * np.pi * f_c / rate), r * r]
                seg += lfilter([1.0 - r], a, src)
            seg += 0.002 * rng.standard_normal(n)
            voiced[pos : pos + n] = True
        elif kind == "unvoiced":
            b, a = butter(2, [1500 / (rate / 2), min(6000.0, 0.45 * rate) / (rate / 2)], "bandpass")
            seg = 0.25 * lfilter(b, a, rng.standard_normal(n))
        else:
            seg = np.zeros(n)
        ramp = min(int(0.005 * rate), n // 2)
        if ramp > 0:
            fade = 0.5 * (1 - np.cos(np.pi * np.arange(ramp) / ramp))
            seg[:ramp] *= fade
            seg[-ramp:] *= fade[::-1]
        x[pos : pos + n] = seg
        pos += n
    rms = np.sqrt(np.mean(x**2))
    x *= 10 ** (rms_dbfs / 20.0) / max(rms, 1e-12)
    peak = np.abs(x).max()
    if peak > 0.95:
        x *= 0.95 / peak
    return x, voiced


@pytest.fixture(scope="session")
def speech_5s():
    samples, voiced = synth_speech(5.0, RATE, seed=42)
    return AudioBuffer(samples, RATE), voiced


def make_corpus(directory, n_files: int, duration: float = 0.4, seed: int = 100, format: str = "pcm16"):
    """Write a small corpus of speech-like WAVs; returns the file names."""
    directory.mkdir(parents=True, exist_ok=True)
    names = []
    for i in range(n_files):
        samples, _ = synth_speech(duration, RATE, seed=seed + i)
        name = f"utt-{i:04d}.wav"
        write_wav(directory / name, AudioBuffer(samples, RATE), format=format)
        names.append(name)
    return names
