"""HTK mel scale conversions."""

from __future__ import annotations

import numpy as np


def hz_to_mel(f):
    """Hz to mel, HTK convention."""
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    """Mel to Hz, HTK convention."""
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)
