"""Hearing-impairment-inspired speech augmentation.

Two waveform transforms are provided: spectral smearing (broadened
auditory-filter analysis applied to the power spectrogram) and loudness
recruitment (per-band compressive gain driven by an audiogram), plus
severity-conditioned random parameter sampling and a batch CLI.
"""

from hearaug.audio_io import AudioBuffer, Calibration, WavFormatError, amplitude_to_spl, read_wav, write_wav
from hearaug.features import mel_features, mean_normalize, spec_augment_mask
from hearaug.pipeline import AugmentSettings, augment_samples
from hearaug.recruitment import (
    Audiogram,
    ChannelDecomposition,
    GammatoneFilterbank,
    analyze,
    apply_loudness_recruitment,
    design_filterbank,
    interpolate_hl,
    recruit,
    recruitment_exponent,
)
from hearaug.sampling import (
    RandomStream,
    Severity,
    SeverityLimits,
    derive_stream,
    sample_audiogram,
    sample_smearing_params,
    severity_limits,
)
from hearaug.smearing import (
    AuditoryMatrix,
    SmearingMatrix,
    SmearingParams,
    StftConfig,
    apply_spectral_smearing,
    build_auditory_matrix,
    build_smearing_matrix,
    filter_sharpness,
    istft,
    roex_weight,
    smearing_matrix_for,
    stft,
)

__version__ = "0.1.0"

__all__ = [
    "AudioBuffer",
    "Audiogram",
    "AuditoryMatrix",
    "AugmentSettings",
    "Calibration",
    "ChannelDecomposition",
    "GammatoneFilterbank",
    "RandomStream",
    "Severity",
    "SeverityLimits",
    "SmearingMatrix",
    "SmearingParams",
    "StftConfig",
    "WavFormatError",
    "amplitude_to_spl",
    "analyze",
    "apply_loudness_recruitment",
    "apply_spectral_smearing",
    "augment_samples",
    "build_auditory_matrix",
    "build_smearing_matrix",
    "derive_stream",
    "design_filterbank",
    "filter_sharpness",
    "interpolate_hl",
    "istft",
    "mean_normalize",
    "mel_features",
    "read_wav",
    "recruit",
    "recruitment_exponent",
    "roex_weight",
    "sample_audiogram",
    "sample_smearing_params",
    "severity_limits",
    "smearing_matrix_for",
    "spec_augment_mask",
    "stft",
    "write_wav",
]
