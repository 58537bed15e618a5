"""Closed-form results: buffer decay law, limiting buffer PDF, OP, throughput.

A relay buffer that harvests Exp(lam) energy per slot and spends ``m`` with
probability ``b`` per slot while it holds at least ``m`` has a stationary
law iff ``psi = b * lam * m > 1``.  The law is

    g(x) = (1 - exp(q x)) / m                     0 <= x < m
    g(x) = -q exp(q x) / (m (b lam + q))          x >= m

with ``q < 0`` the non-zero root of ``b lam exp(q m) = b lam + q``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .fading import below_prob

_INV_E = math.exp(-1.0)


class NonStationaryError(ValueError):
    """A limiting-PDF query on a buffer with psi <= 1."""


class DivergentCostError(ValueError):
    pass


def lambert_w0(x: float, tol: float = 1e-15, max_iter: int = 50) -> float:
    """Principal branch of the Lambert W function for real ``x >= -1/e``.

    Halley iteration from a branch-point series (near -1/e), a log-based
    guess (large x) or ``log1p`` (elsewhere).
    """
    if math.isnan(x):
        raise ValueError("lambert_w0 of NaN")
    if x < -_INV_E:
        # allow last-ulp rounding of -1/e itself
        if x < -_INV_E * (1 + 4e-16):
            raise ValueError(f"lambert_w0 domain is x >= -1/e, got {x}")
        return -1.0
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return math.inf

    p2 = 2.0 * (math.e * x + 1.0)
    if p2 < 0.25:
        p = math.sqrt(max(p2, 0.0))
        w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p**3
    elif x < 3.0:
        w = math.log1p(x)
        if x < 0:
            w *= 0.9
    else:
        lx = math.log(x)
        w = lx - math.log(lx)

    for _ in range(max_iter):
        if w == -1.0:
            break
        ew = math.exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        if denom == 0.0:
            break
        step = f / denom
        w_new = w - step
        if w_new < -1.0:
            w_new = -1.0
        if abs(w_new - w) <= tol * (1.0 + abs(w_new)):
            w = w_new
            break
        w = w_new
    return w


@dataclass(frozen=True)
class BufferLaw:
    b: float
    lam: float
    m: float
    psi: float
    q: Optional[float]  # None when psi <= 1
    k: Optional[float]

    @property
    def stationary(self) -> bool:
        return self.q is not None

    def _require(self):
        if not self.stationary:
            raise NonStationaryError(
                f"psi = {self.psi:.6g} <= 1: the buffer has no stationary PDF"
            )


def solve_decay(b: float, lam: float, m: float) -> BufferLaw:
    """Decay constant of the limiting buffer PDF via the Lambert W function."""
    if not (0.0 <= b <= 1.0) or lam <= 0 or m <= 0:
        raise ValueError(f"need b in [0, 1], lam > 0, m > 0; got {b}, {lam}, {m}")
    psi = b * lam * m
    if psi <= 1.0:
        return BufferLaw(b, lam, m, psi, None, None)
    blam = b * lam
    w = lambert_w0(-psi * math.exp(-psi))
    tail = -w / m  # = b lam + q, kept separately: q ~ -b lam when psi is large
    q = tail - blam
    if not (q < 0.0 and tail > 0.0):
        # psi a hair above 1: the root merges with q = 0
        return BufferLaw(b, lam, m, psi, None, None)
    k = -q / (m * tail)
    return BufferLaw(b, lam, m, psi, q, k)


def limiting_pdf(law: BufferLaw, x: float) -> float:
    law._require()
    if x < 0:
        return 0.0
    if x < law.m:
        return -math.expm1(law.q * x) / law.m
    # k exp(q x) rewritten with k exp(q m) = -q / (m b lam)
    return -law.q / (law.m * law.b * law.lam) * math.exp(law.q * (x - law.m))


def limiting_cdf(law: BufferLaw, x: float) -> float:
    """P(B <= x) for the limiting law (closed-form integral of the PDF)."""
    law._require()
    if x <= 0:
        return 0.0
    q, m = law.q, law.m
    if x < m:
        return (x - math.expm1(q * x) / q) / m
    return 1.0 - math.exp(q * (x - m)) / law.psi


def prob_at_least_m(law: BufferLaw) -> float:
    """P(B >= m) = 1/psi; a non-stationary buffer is charged almost surely."""
    if not law.stationary:
        return 1.0
    return 1.0 / law.psi


def outage_probability(tc, scalars, pu1: float, pu2: float, rates) -> float:
    """Per-slot probability that D does not decode in the slot.

    ``tc`` is a :class:`~ehor.chain.TcDist`, ``scalars`` a
    :class:`~ehor.chain.ScalarSet`.
    """
    s = scalars
    p_triple = tc.p1 + tc.p2 + tc.p3
    return (
        tc.p_s * below_prob(rates.w_sd, rates.gamma_th)
        + tc.p_sr1 * s.c * (s.d * pu1 + 1.0 - pu1)
        + tc.p_sr2 * s.m * (s.n * pu2 + 1.0 - pu2)
        + p_triple * s.o * (s.f * pu2 + 1.0 - pu2) * (s.g * pu1 + 1.0 - pu1)
    )


def throughput(op: float, r0: float) -> float:
    return (1.0 - op) * r0


def timeslot_cost(op: float) -> float:
    """Expected slots spent per delivered packet."""
    if op >= 1.0:
        raise DivergentCostError("outage probability 1: no packet is ever delivered")
    return 1.0 / (1.0 - op)
