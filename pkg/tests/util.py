"""Shared measurement helpers for the test suite."""

from __future__ import annotations

import numpy as np


def refined_peak_heights(y: np.ndarray, n_peaks: int = 6) -> list[float]:
    """Heights of the first local maxima, parabola-refined to kill sampling bias."""
    y = np.asarray(y, dtype=float)
    idx = np.nonzero((y[1:-1] > y[:-2]) & (y[1:-1] > y[2:]))[0] + 1
    heights = []
    for i in idx[:n_peaks]:
        left, center, right = y[i - 1], y[i], y[i + 1]
        denom = left - 2.0 * center + right
        h = center - (left - right) ** 2 / (8.0 * denom) if denom != 0 else center
        heights.append(float(h))
    return heights


def alternation_ratio(g2: np.ndarray, baseline: float = 1.0) -> float:
    """(h0*h2)/h1^2 over consecutive g2 maxima above the long-time baseline.

    Exactly 1 for a geometrically decaying envelope; != 1 when adjacent
    peaks alternate (beating).
    """
    h = refined_peak_heights(np.asarray(g2) - baseline, n_peaks=3)
    if len(h) < 3:
        raise ValueError("need at least three maxima to measure alternation")
    return (h[0] * h[2]) / (h[1] * h[1])


def loglog_slope(x: np.ndarray, y: np.ndarray) -> float:
    """Least-squares slope of log(y) against log(x)."""
    lx, ly = np.log(np.asarray(x)), np.log(np.asarray(y))
    return float(np.polyfit(lx, ly, 1)[0])


def correlation_shift(profile_a: np.ndarray, profile_b: np.ndarray,
                      dx: float, max_shift: float) -> float:
    """Displacement of b relative to a maximizing their cross-correlation."""
    a = profile_a - profile_a.mean()
    b = profile_b - profile_b.mean()
    n_max = int(round(max_shift / dx))
    scores = [np.dot(a[:-k] if k else a, b[k:] if k else b) /
              max(len(a) - k, 1) for k in range(n_max + 1)]
    return float(np.argmax(scores) * dx)
