"""Small shared numerical helpers."""

from __future__ import annotations

import numpy as np

__all__ = ["fit_loglog_slope", "japanese_bracket"]


def fit_loglog_slope(x, y):
    """Least-squares slope of log(y) against log(x).

    Returns (slope, intercept).  Inputs must be positive.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("log-log fit needs positive data")
    slope, intercept = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope), float(intercept)


def japanese_bracket(*blocks):
    """sqrt(1 + |v|**2) over the concatenation of coordinate blocks.

    A block of shape (..., k) contributes its last axis; a block of shape
    (...) is a single scalar coordinate per point.
    """
    total = None
    for block in blocks:
        block = np.asarray(block, dtype=float)
        sq = block * block
        if block.ndim >= 2:
            sq = np.sum(sq, axis=-1)
        contrib = sq
        total = contrib if total is None else total + contrib
    return np.sqrt(1.0 + total)
