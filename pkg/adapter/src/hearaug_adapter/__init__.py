"""In-process augmentation adapter for ML data pipelines.

Thin binding over the hearaug core: per-utterance transforms and a seeded
batch map. All randomness flows through streams derived from
(master_seed, utterance_id), so shuffling or resharding a pipeline never
changes how an utterance is augmented, and results match the batch CLI
numerically for the same seed and configuration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from hearaug import AugmentSettings, Calibration, Severity, augment_samples

__version__ = "0.1.0"

__all__ = ["AdapterConfig", "augment_array", "augment_batch"]


@dataclass(frozen=True)
class AdapterConfig:
    """Mirror of the CLI configuration minus file paths."""

    method: str = "both"
    severity: Severity | str = Severity.MODERATE
    prob: float = 0.5
    master_seed: int = 0
    calibration: Calibration = Calibration()

    def __post_init__(self):
        severity = self.severity if isinstance(self.severity, Severity) else Severity(self.severity)
        object.__setattr__(self, "severity", severity)
        self.settings()  # validates method and prob

    def settings(self) -> AugmentSettings:
        return AugmentSettings(
            method=self.method,
            severity=self.severity,
            prob=self.prob,
            master_seed=self.master_seed,
            calibration=self.calibration,
        )


def augment_array(samples: np.ndarray, rate: int, utterance_id: str, cfg: AdapterConfig) -> np.ndarray:
    """Augment one utterance; numerically identical to the CLI for the same stream.

    ``samples`` must be a non-empty, finite, mono float array. Returns the
    input values unchanged when the utterance's stream decides against
    augmentation.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 1 or samples.size == 0:
        raise ValueError(f"samples must be a non-empty mono array, got shape {samples.shape}")
    out, _ = augment_samples(samples, rate, utterance_id, cfg.settings())
    return out


def augment_batch(batch: list[tuple[np.ndarray, int, str]], cfg: AdapterConfig) -> list[np.ndarray]:
    """Augment a batch element-wise, preserving order.

    Each element is (samples, rate, utterance_id) and is augmented
    independently from its own derived stream. Element failures raise with
    the element index.
    """
    if not batch:
        raise ValueError("batch must be non-empty")
    out = []
    for index, (samples, rate, utterance_id) in enumerate(batch):
        try:
            out.append(augment_array(samples, rate, utterance_id, cfg))
        except Exception as exc:
            raise ValueError(f"batch element {index} ({utterance_id!r}): {exc}") from exc
    return out
