"""Per-utterance augmentation core shared by the batch CLI and adapters."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from hearaug.audio_io import AudioBuffer, Calibration
from hearaug.recruitment import Audiogram, apply_loudness_recruitment, filterbank_for
from hearaug.sampling import Severity, derive_stream, sample_audiogram, sample_smearing_params
from hearaug.smearing import SmearingParams, apply_spectral_smearing

METHODS = ("ss", "lr", "both")


@dataclass(frozen=True)
class AugmentSettings:
    """Method, severity, and randomness configuration for augmentation."""

    method: str = "both"
    severity: Severity = Severity.MODERATE
    prob: float = 0.5
    master_seed: int = 0
    calibration: Calibration = Calibration()

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if not 0.0 <= self.prob <= 1.0:
            raise ValueError(f"prob must be in [0, 1], got {self.prob}")


@dataclass(frozen=True)
class AugmentOutcome:
    """What happened to one utterance: the decision and any sampled parameters."""

    augmented: bool
    smearing: SmearingParams | None = None
    audiogram: Audiogram | None = None
    degenerate_draw: bool = False


def augment_samples(
    samples: np.ndarray,
    sample_rate: int,
    utterance_id: str,
    settings: AugmentSettings,
) -> tuple[np.ndarray, AugmentOutcome]:
    """Augment one utterance deterministically from its derived stream.

    The stream's first draw decides augment-or-copy against ``prob``; smearing
    parameters and the audiogram (in that order, as the method requires) are
    drawn next. Results depend only on (master_seed, utterance_id, settings).
    """
    buf = AudioBuffer(samples, sample_rate)
    rng = derive_stream(settings.master_seed, utterance_id)
    if not rng.generator.random() < settings.prob:
        return buf.samples, AugmentOutcome(augmented=False)

    smearing = None
    audiogram = None
    degenerate = False
    if settings.method in ("ss", "both"):
        smearing = sample_smearing_params(settings.severity, rng)
    if settings.method in ("lr", "both"):
        audiogram, degenerate = sample_audiogram(settings.severity, rng)

    out = buf
    if smearing is not None:
        out = apply_spectral_smearing(out, smearing)
    if audiogram is not None:
        fb = filterbank_for(out.sample_rate)
        out = apply_loudness_recruitment(out, audiogram, fb, settings.calibration)
    return out.samples, AugmentOutcome(
        augmented=True,
        smearing=smearing,
        audiogram=audiogram,
        degenerate_draw=degenerate,
    )
