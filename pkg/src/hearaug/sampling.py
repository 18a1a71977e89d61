"""Severity-conditioned random sampling of impairment parameters.

Each utterance gets its own counter-based random stream derived from the
master seed and the utterance id, so sampled parameters are independent of
processing order and worker count.
"""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass

import numpy as np

from hearaug.recruitment import Audiogram
from hearaug.smearing import SmearingParams

#: Smallest sampled lower broadening factor.
R_L_FLOOR = 1.001


class Severity(enum.Enum):
    MILD = "mild"
    MODERATE = "moderate"
    SEVERE = "severe"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


@dataclass(frozen=True)
class SeverityLimits:
    """Per-severity bounds: maximal broadening factors and hearing thresholds."""

    r_l_max: float
    r_u_max: float
    hl_max: tuple[float, ...]


_LIMITS = {
    Severity.MILD: SeverityLimits(r_l_max=1.1, r_u_max=1.6, hl_max=(10, 10, 10, 15, 30, 40)),
    Severity.MODERATE: SeverityLimits(r_l_max=1.6, r_u_max=2.4, hl_max=(20, 20, 25, 35, 45, 50)),
    Severity.SEVERE: SeverityLimits(r_l_max=2.0, r_u_max=4.0, hl_max=(55, 55, 55, 65, 75, 80)),
}


def severity_limits(s: Severity) -> SeverityLimits:
    """Bounds table row for a severity level."""
    return _LIMITS[s]


@dataclass
class RandomStream:
    """Deterministic per-utterance random stream (counter-based Philox)."""

    generator: np.random.Generator
    stream_id: str


def derive_stream(master_seed: int, utterance_id: str) -> RandomStream:
    """Derive the stream for one utterance from the master seed.

    The seed material is a SHA-256 hash of "<seed>|<id>", so the draw sequence
    is stable across platforms, processing order, and worker counts.
    """
    digest = hashlib.sha256(f"{master_seed}|{utterance_id}".encode("utf-8")).digest()
    entropy = int.from_bytes(digest[:16], "little")
    bitgen = np.random.Philox(np.random.SeedSequence(entropy))
    return RandomStream(generator=np.random.Generator(bitgen), stream_id=utterance_id)


def sample_smearing_params(s: Severity, rng: RandomStream) -> SmearingParams:
    """Draw broadening factors: r_l in [1.001, r_l_max), r_u in [r_l, r_u_max)."""
    limits = severity_limits(s)
    if not limits.r_l_max > R_L_FLOOR:
        raise ValueError(f"degenerate r_l range [{R_L_FLOOR}, {limits.r_l_max})")
    r_l = rng.generator.uniform(R_L_FLOOR, limits.r_l_max)
    r_u = rng.generator.uniform(r_l, limits.r_u_max)
    return SmearingParams(r_l=r_l, r_u=r_u)


def sample_audiogram(s: Severity, rng: RandomStream) -> tuple[Audiogram, bool]:
    """Draw a non-decreasing audiogram within the severity's threshold caps.

    Frequencies are processed ascending; each threshold is uniform in
    [running_max, cap). If a previous draw already sits at or above the cap
    (possible only when a draw lands exactly on the next cap), the threshold
    is clamped to the running max and the degenerate flag is set.
    """
    limits = severity_limits(s)
    thresholds = []
    running_max = 0.0
    degenerate = False
    for cap in limits.hl_max:
        if running_max >= cap:
            hl = running_max
            degenerate = True
        else:
            hl = rng.generator.uniform(running_max, cap)
        thresholds.append(hl)
        running_max = max(running_max, hl)
    return Audiogram(thresholds_db=tuple(thresholds)), degenerate
