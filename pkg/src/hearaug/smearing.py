"""Spectral smearing: roex auditory matrices applied to STFT power spectra.

The pipeline analyses a waveform with an STFT, multiplies each frame's power
spectrum by a smearing matrix (the inverse of a normal-hearing auditory
matrix times a broadened one), keeps the original phase, and resynthesises.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import get_window

from hearaug.audio_io import AudioBuffer

#: Bins centred below this frequency keep identity rows: the normalised
#: deviation g = |f - f_c| / f_c blows up as f_c -> 0.
MIN_SMEAR_FREQ = 50.0

#: Ridge scale for the auditory-matrix solve.
RIDGE_SCALE = 1e-8


@dataclass(frozen=True)
class SmearingParams:
    """Lower/upper broadening factors controlling auditory-filter widening."""

    r_l: float
    r_u: float

    def __post_init__(self):
        if not self.r_l >= 1.0:
            raise ValueError(f"r_l must be >= 1.0, got {self.r_l}")
        if not self.r_u >= self.r_l:
            raise ValueError(f"r_u must be >= r_l, got r_l={self.r_l}, r_u={self.r_u}")


@dataclass(frozen=True)
class StftConfig:
    """Analysis/synthesis framing. Defaults: 512/256 Hann (32 ms / 16 ms at 16 kHz)."""

    frame_len: int = 512
    hop: int = 256
    window: str = "hann"

    def __post_init__(self):
        if self.frame_len <= 0 or self.hop <= 0:
            raise ValueError("frame_len and hop must be positive")
        if self.frame_len % self.hop != 0:
            raise ValueError(f"hop ({self.hop}) must divide frame_len ({self.frame_len})")
        w = self.window_array()
        # constant-overlap-add check: shifted window copies must tile to a constant
        acc = np.zeros(2 * self.frame_len)
        for k in range(0, 2 * self.frame_len - self.frame_len + 1, self.hop):
            acc[k : k + self.frame_len] += w
        core = acc[self.frame_len - self.hop : self.frame_len]
        if core.size and (core.max() - core.min()) > 1e-8 * max(core.max(), 1e-30):
            raise ValueError(f"window {self.window!r} does not satisfy COLA at hop {self.hop}")

    @property
    def n_bins(self) -> int:
        return self.frame_len // 2 + 1

    def window_array(self) -> np.ndarray:
        return get_window(self.window, self.frame_len, fftbins=True).astype(np.float64)


@dataclass(frozen=True)
class AuditoryMatrix:
    """Bank of calibrated roex filters, one row per FFT bin."""

    weights: np.ndarray
    bin_freqs: np.ndarray

    def __post_init__(self):
        if self.weights.shape != (len(self.bin_freqs), len(self.bin_freqs)):
            raise ValueError("weights must be square with one row per bin frequency")


@dataclass(frozen=True)
class SmearingMatrix:
    """Dense matrix applied to power spectra; build via build_smearing_matrix."""

    weights: np.ndarray


def roex_weight(g, p):
    """Rounded-exponential filter weight (1 + p*g) * exp(-p*g).

    ``g`` is the normalised deviation from the centre frequency (>= 0) and
    ``p`` the filter sharpness (> 0). Accepts scalars or arrays.
    """
    g = np.asarray(g, dtype=np.float64)
    p_arr = np.asarray(p, dtype=np.float64)
    if np.any(g < 0):
        raise ValueError("g must be non-negative")
    if np.any(p_arr <= 0):
        raise ValueError("p must be positive")
    out = (1.0 + p_arr * g) * np.exp(-p_arr * g)
    return out if out.ndim else float(out)


def filter_sharpness(f_c: float, r: float) -> float:
    """Sharpness of the roex filter at centre frequency ``f_c`` for broadening ``r``.

    Equals 4*f_c / (24.7 * (0.00437*f_c + 1) * r); broadening the filter by a
    factor r divides the sharpness by exactly r.
    """
    if not f_c > 0:
        raise ValueError(f"f_c must be positive, got {f_c}")
    if not r >= 1.0:
        raise ValueError(f"r must be >= 1, got {r}")
    return 4.0 * f_c / (24.7 * (0.00437 * f_c + 1.0) * r)


def build_auditory_matrix(
    bin_freqs: np.ndarray,
    r_l: float,
    r_u: float,
    min_smear_freq: float = MIN_SMEAR_FREQ,
) -> AuditoryMatrix:
    """Build the auditory matrix for broadening factors (r_l, r_u).

    Row i holds the roex filter centred at ``bin_freqs[i]`` sampled at every
    bin: the lower-side sharpness uses r_l, the upper side r_u, and the whole
    row is divided by the calibration term (0.00437*f_c + 1)*(r_l + r_u)/2.
    Rows centred below ``min_smear_freq`` are identity rows.
    """
    if r_u < r_l:
        raise ValueError(f"r_u ({r_u}) must be >= r_l ({r_l})")
    freqs = np.asarray(bin_freqs, dtype=np.float64)
    if freqs.ndim != 1 or np.any(np.diff(freqs) <= 0):
        raise ValueError("bin_freqs must be strictly ascending")
    n = len(freqs)
    weights = np.eye(n)
    for i, f_c in enumerate(freqs):
        if f_c < min_smear_freq:
            continue
        g = np.abs(freqs - f_c) / f_c
        p = np.where(
            freqs < f_c,
            filter_sharpness(f_c, r_l),
            filter_sharpness(f_c, r_u),
        )
        row = (1.0 + p * g) * np.exp(-p * g)
        weights[i] = row / ((0.00437 * f_c + 1.0) * (r_l + r_u) / 2.0)
    return AuditoryMatrix(weights=weights, bin_freqs=freqs)


def build_smearing_matrix(a_n: AuditoryMatrix, a_w: AuditoryMatrix) -> SmearingMatrix:
    """Solve A_N @ A_S = A_W for the smearing matrix A_S.

    A small ridge term lam*I with lam = 1e-8 * trace(A_N.T A_N) / n is added
    to A_N before solving; A_N is ill-conditioned at speech-band sizes and a
    plain inversion is numerically fragile.
    """
    an = a_n.weights
    aw = a_w.weights
    if an.shape != aw.shape:
        raise ValueError(f"dimension mismatch: A_N {an.shape} vs A_W {aw.shape}")
    n = an.shape[0]
    lam = RIDGE_SCALE * float(np.trace(an.T @ an)) / n
    try:
        a_s = np.linalg.solve(an + lam * np.eye(n), aw)
    except np.linalg.LinAlgError as exc:
        cond = float(np.linalg.cond(an))
        raise ValueError(f"auditory-matrix solve failed (cond(A_N) = {cond:.3e}): {exc}") from exc
    if not np.all(np.isfinite(a_s)):
        cond = float(np.linalg.cond(an))
        raise ValueError(f"auditory-matrix solve produced non-finite entries (cond(A_N) = {cond:.3e})")
    return SmearingMatrix(weights=a_s)


_matrix_cache: dict[tuple[float, float, int, int], SmearingMatrix] = {}
_matrix_cache_lock = threading.Lock()


def smearing_matrix_for(params: SmearingParams, n_bins: int, sample_rate: int) -> SmearingMatrix:
    """Smearing matrix for FFT bins of a given size and rate, cached.

    The solve dominates the cost of short utterances, so matrices are reused
    across calls sharing (r_l, r_u, n_bins, sample_rate).
    """
    key = (params.r_l, params.r_u, n_bins, sample_rate)
    with _matrix_cache_lock:
        cached = _matrix_cache.get(key)
    if cached is not None:
        return cached
    frame_len = 2 * (n_bins - 1)
    bin_freqs = np.arange(n_bins) * (sample_rate / frame_len)
    a_n = build_auditory_matrix(bin_freqs, 1.0, 1.0)
    a_w = build_auditory_matrix(bin_freqs, params.r_l, params.r_u)
    a_s = build_smearing_matrix(a_n, a_w)
    with _matrix_cache_lock:
        _matrix_cache[key] = a_s
    return a_s


def stft(buf: AudioBuffer, cfg: StftConfig = StftConfig()) -> np.ndarray:
    """Short-time Fourier transform, centred frames, shape (frames, bins).

    Signals shorter than one frame are zero-padded, never rejected.
    """
    if len(buf) == 0:
        raise ValueError("cannot analyse an empty buffer")
    frame, hop = cfg.frame_len, cfg.hop
    pad = frame // 2
    x = np.pad(buf.samples, (pad, pad))
    n_frames = 1 + max(0, -(-(len(x) - frame) // hop))
    total = (n_frames - 1) * hop + frame
    if total > len(x):
        x = np.pad(x, (0, total - len(x)))
    idx = np.arange(frame)[None, :] + hop * np.arange(n_frames)[:, None]
    frames = x[idx] * cfg.window_array()[None, :]
    return np.fft.rfft(frames, axis=1)


def istft(spec: np.ndarray, cfg: StftConfig, out_len: int, sample_rate: int) -> AudioBuffer:
    """Inverse STFT by weighted overlap-add with window-sum normalisation.

    The output is truncated or zero-padded to ``out_len`` samples.
    """
    spec = np.asarray(spec)
    if spec.ndim != 2 or spec.shape[1] != cfg.n_bins:
        raise ValueError(f"spectrogram shape {spec.shape} inconsistent with {cfg.n_bins} bins")
    frame, hop = cfg.frame_len, cfg.hop
    w = cfg.window_array()
    n_frames = spec.shape[0]
    total = (n_frames - 1) * hop + frame
    acc = np.zeros(total)
    wsum = np.zeros(total)
    frames = np.fft.irfft(spec, n=frame, axis=1) * w[None, :]
    for k in range(n_frames):
        acc[k * hop : k * hop + frame] += frames[k]
        wsum[k * hop : k * hop + frame] += w * w
    good = wsum > 1e-12
    acc[good] /= wsum[good]
    pad = frame // 2
    y = acc[pad : pad + out_len]
    if len(y) < out_len:
        y = np.pad(y, (0, out_len - len(y)))
    return AudioBuffer(y, sample_rate)


def apply_spectral_smearing(
    buf: AudioBuffer,
    params: SmearingParams,
    cfg: StftConfig = StftConfig(),
) -> AudioBuffer:
    """Smear ``buf``'s power spectrogram, keeping the original phase.

    Each frame's power spectrum is multiplied by the smearing matrix, negative
    smeared powers are clamped to zero, and the frame is resynthesised from
    sqrt(power) with the unmodified phase. Output length equals input length.
    """
    if len(buf) == 0:
        return AudioBuffer(buf.samples.copy(), buf.sample_rate)
    spec = stft(buf, cfg)
    a_s = smearing_matrix_for(params, cfg.n_bins, buf.sample_rate)
    power = np.abs(spec) ** 2
    smeared = np.maximum(power @ a_s.weights.T, 0.0)
    phase = np.angle(spec)
    out_spec = np.sqrt(smeared) * np.exp(1j * phase)
    return istft(out_spec, cfg, len(buf), buf.sample_rate)


def matrix_to_csv(matrix: AuditoryMatrix | SmearingMatrix, path: str | Path) -> None:
    """Dump a matrix as CSV for debugging."""
    np.savetxt(Path(path), matrix.weights, delimiter=",")
