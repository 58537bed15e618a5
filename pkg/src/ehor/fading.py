"""Exponential (Rayleigh-power) link SNR model and its binned form.

SNR bins are half-open ``[j*dx, (j+1)*dx)`` for ``j = 0 .. n-1`` with
``dx = gamma_th / n``.  Mass at or above ``gamma_th`` means a successful
decode and is never stored in a :class:`BinPdf`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class BinPdf:
    mass: np.ndarray
    gamma_th: float

    def __post_init__(self):
        m = np.asarray(self.mass, dtype=float)
        if m.ndim != 1 or m.size == 0:
            raise ValueError("BinPdf needs a non-empty 1-D mass vector")
        if np.any(m < 0):
            raise ValueError("BinPdf mass must be non-negative")
        if m.sum() > 1.0 + 1e-9:
            raise ValueError(f"BinPdf total mass {m.sum()} exceeds 1")
        object.__setattr__(self, "mass", m)

    @property
    def n_bins(self) -> int:
        return self.mass.size

    @property
    def bin_width(self) -> float:
        return self.gamma_th / self.n_bins

    @property
    def total(self) -> float:
        return float(self.mass.sum())

    def normalized(self) -> "BinPdf":
        t = self.total
        if t <= 0:
            raise ValueError("cannot normalize a BinPdf with zero mass")
        return BinPdf(self.mass / t, self.gamma_th)


def sample_link_snr(rate: float, draw: float) -> float:
    """Inverse-CDF exponential sample: ``-ln(draw) / rate``."""
    return -math.log(draw) / rate


def exceed_prob(rate: float, x: float) -> float:
    """P(SNR >= x) for an exponential SNR with the given rate."""
    return math.exp(-rate * x)


def below_prob(rate: float, x: float) -> float:
    """P(SNR < x); uses expm1 so tiny rates keep their precision."""
    return -math.expm1(-rate * x)


def link_bin_pdf(rate: float, n_bins: int, gamma_th: float) -> BinPdf:
    edges = np.arange(n_bins + 1) * (gamma_th / n_bins)
    cdf = -np.expm1(-rate * edges)
    return BinPdf(np.diff(cdf), gamma_th)


def truncated_conv(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Discrete convolution of two bin vectors, keeping the first ``len(a)`` bins.

    Whatever rolls past the last bin is decode-success mass and is dropped.
    """
    if len(a) != len(b):
        raise ValueError(f"bin count mismatch: {len(a)} vs {len(b)}")
    return np.convolve(a, b)[: len(a)]
