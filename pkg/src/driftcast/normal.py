"""Standard normal tail helpers (erfc-based, no external dependency)."""

from __future__ import annotations

import math

import numpy as np


def normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def normal_sf(z: float) -> float:
    """Upper tail P(Z > z)."""
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def normal_two_sided_p(z: float) -> float:
    """P(|Z| >= |z|) for a standard normal Z."""
    return math.erfc(abs(z) / math.sqrt(2.0))


def normal_two_sided_p_array(z: np.ndarray) -> np.ndarray:
    return np.array([normal_two_sided_p(float(v)) for v in np.atleast_1d(z)])
