"""WAV I/O, amplitude validation, and dB SPL calibration."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.io import wavfile

MIN_SAMPLE_RATE = 8000

#: Digital full scale corresponds to this SPL unless overridden; chosen so the
#: recruitment reference envelope (105 dB SPL) is exactly 1.0 in linear units.
DEFAULT_FULL_SCALE_DBSPL = 105.0


class WavFormatError(ValueError):
    """Raised for WAV files this toolkit does not accept (encoding, channels)."""


@dataclass(frozen=True)
class Calibration:
    """Mapping between digital full scale and absolute level.

    ``full_scale_dbspl`` is the SPL assigned to a unit-amplitude sine.
    """

    full_scale_dbspl: float = DEFAULT_FULL_SCALE_DBSPL

    def __post_init__(self):
        if not self.full_scale_dbspl > 0:
            raise ValueError(f"full_scale_dbspl must be positive, got {self.full_scale_dbspl}")


@dataclass
class AudioBuffer:
    """Mono waveform in dimensionless full-scale units with its sample rate.

    Samples are stored as float64. Values are nominally in [-1, 1]; transforms
    may overshoot transiently and clipping is only enforced when writing.
    """

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise WavFormatError(f"multichannel unsupported: expected mono, got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite (no NaN/Inf)")
        rate = int(self.sample_rate)
        if rate < MIN_SAMPLE_RATE:
            raise ValueError(f"sample_rate must be >= {MIN_SAMPLE_RATE} Hz, got {rate}")
        self.samples = samples
        self.sample_rate = rate

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


def read_wav(path: str | Path) -> AudioBuffer:
    """Read a mono PCM16 or IEEE float32 WAV file.

    PCM16 samples are scaled by 1/32768 so that +32767 maps to 32767/32768.
    Any other encoding (8/24/32-bit PCM, float64) is rejected.
    """
    path = Path(path)
    try:
        with warnings.catch_warnings():
            # scipy warns about non-audio RIFF chunks; they are harmless here
            warnings.simplefilter("ignore", wavfile.WavFileWarning)
            rate, data = wavfile.read(path)
    except WavFormatError:
        raise
    except FileNotFoundError:
        raise
    except Exception as exc:
        raise WavFormatError(f"unreadable WAV file {path}: {exc}") from exc

    if data.ndim != 1:
        raise WavFormatError(f"multichannel unsupported: {path} has {data.shape[1]} channels")
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.float32:
        samples = data.astype(np.float64)
    else:
        raise WavFormatError(f"unsupported encoding {data.dtype} in {path}: expected PCM16 or float32")
    return AudioBuffer(samples, rate)


def wav_encoding(path: str | Path) -> str:
    """Return ``"pcm16"`` or ``"float32"`` for an accepted WAV file."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", wavfile.WavFileWarning)
        _, data = wavfile.read(Path(path), mmap=True)
    if data.dtype == np.int16:
        return "pcm16"
    if data.dtype == np.float32:
        return "float32"
    raise WavFormatError(f"unsupported encoding {data.dtype} in {path}")


def write_wav(path: str | Path, buf: AudioBuffer, format: str = "float32") -> int:
    """Write ``buf`` to a WAV file, returning the number of clipped samples.

    Samples outside [-1, 1] are hard-clipped before encoding.
    ``format`` is ``"pcm16"`` or ``"float32"``.
    """
    if format not in ("pcm16", "float32"):
        raise ValueError(f"format must be 'pcm16' or 'float32', got {format!r}")
    x = buf.samples
    clip_count = int(np.count_nonzero((x < -1.0) | (x > 1.0)))
    x = np.clip(x, -1.0, 1.0)
    if format == "pcm16":
        encoded = np.clip(np.round(x * 32768.0), -32768, 32767).astype(np.int16)
    else:
        encoded = x.astype(np.float32)
    wavfile.write(Path(path), buf.sample_rate, encoded)
    return clip_count


def amplitude_to_spl(a: float, cal: Calibration) -> float:
    """Convert a linear full-scale amplitude to dB SPL under ``cal``."""
    if not a > 0:
        raise ValueError(f"amplitude must be positive, got {a}")
    return 20.0 * np.log10(a) + cal.full_scale_dbspl
