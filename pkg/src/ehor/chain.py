"""Discretised Markov-chain analytics for the TC state and combined SNR.

Three N x N chains describe the SNR D has combined while the packet waits in
{S,R1} (variant 1), {S,R2} (variant 2) and {S,R1,R2} (variant 3).  Each row
``i`` either stays (no one reaches D and the TC set does not change) or leaves
and later re-enters with a fresh entry distribution.  Their stationary
vectors feed seven failure probabilities (:class:`ScalarSet`), which feed the
6 x 6 TC transition matrix.  Relay availability probabilities PU1/PU2 close
the loop through the buffer decay law.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import closed_form
from .fading import BinPdf, below_prob, exceed_prob, link_bin_pdf, truncated_conv
from .protocol import TcState
from .scenario import DerivedRates, EnergyParams

STOCHASTIC_TOL = 1e-9
PRENORM_TOL = 1e-2
ITER_TOL = 1e-7
INNER_CAP = 100_000
TC_CAP = 100_000
OUTER_CAP = 500
PU_DAMPING = 0.5

N_TC = len(TcState)


class ChainError(ValueError):
    """A transition matrix or iterate violated its probability constraints."""


class NonConvergenceError(RuntimeError):
    def __init__(self, loop: str, residual: float, iterations: int):
        super().__init__(f"{loop} did not converge after {iterations} iterations "
                         f"(last residual {residual:.3e})")
        self.loop = loop
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class TcDist:
    p_s: float
    p_sr1: float
    p_sr2: float
    p1: float
    p2: float
    p3: float

    @classmethod
    def from_vector(cls, v) -> "TcDist":
        return cls(*(float(x) for x in v))

    def as_array(self) -> np.ndarray:
        return np.array([self.p_s, self.p_sr1, self.p_sr2, self.p1, self.p2, self.p3])

    @property
    def p_triple(self) -> float:
        return self.p1 + self.p2 + self.p3


@dataclass(frozen=True)
class ScalarSet:
    """Failure probabilities of the combined SNR over the residual.

    c, d: {S,R1} with S / R1 transmitting; m, n: {S,R2} with S / R2;
    o, g, f: {S,R1,R2} with S / R1 / R2.
    """

    c: float
    d: float
    f: float
    g: float
    m: float
    n: float
    o: float


@dataclass(frozen=True)
class FixedPointResult:
    tc: TcDist
    overall1: BinPdf
    overall2: BinPdf
    overall3: BinPdf
    scalars: ScalarSet
    pu1: float
    pu2: float
    b1: float
    b2: float
    iterations: int
    tc_matrix: np.ndarray
    t1: np.ndarray
    t2: np.ndarray
    t3: np.ndarray


def check_stm(stm: np.ndarray, tol: float = STOCHASTIC_TOL) -> np.ndarray:
    stm = np.asarray(stm, dtype=float)
    if stm.ndim != 2 or stm.shape[0] != stm.shape[1]:
        raise ChainError(f"transition matrix must be square, got shape {stm.shape}")
    if not np.all(np.isfinite(stm)):
        raise ChainError("transition matrix has non-finite entries")
    if np.any(stm < 0) or np.any(stm > 1 + tol):
        raise ChainError("transition matrix entries must lie in [0, 1]")
    dev = np.max(np.abs(stm.sum(axis=1) - 1.0))
    if dev > tol:
        raise ChainError(f"rows do not sum to 1 (max deviation {dev:.3e})")
    return stm


def _link_cdf(rate: float, x: np.ndarray) -> np.ndarray:
    return -np.expm1(-rate * x)


def _renormalize(stm: np.ndarray) -> np.ndarray:
    if np.any(stm < 0):
        raise ChainError("negative transition probability before renormalisation")
    rows = stm.sum(axis=1)
    dev = np.max(np.abs(rows - 1.0))
    if dev >= PRENORM_TOL:
        raise ChainError(f"row sums deviate from 1 by {dev:.3e} before renormalisation")
    return check_stm(stm / rows[:, None])


def _entry(pdf: np.ndarray) -> np.ndarray:
    t = pdf.sum()
    if t <= 0:
        raise ChainError("entry distribution has no mass below the threshold")
    return pdf / t


def build_overall_chain(
    variant: int,
    rates: DerivedRates,
    pu1: float,
    pu2: float,
    n_bins: int,
    tc: Optional[TcDist] = None,
    overall1: Optional[np.ndarray] = None,
    renormalize: bool = True,
) -> np.ndarray:
    """N x N chain of the combined SNR for TC set variant 1, 2 or 3.

    Row ``i`` (bin ``[i dx, (i+1) dx)``) is evaluated at residual
    ``gamma_th - (i+1) dx``.  Variant 3 needs the current TC distribution and
    the variant-1 stationary vector, because {S,R1,R2} is entered either from
    S directly or from {S,R1} carrying SNR already combined there.
    ``renormalize=False`` returns the raw matrix, before row sums are forced to 1.
    """
    if variant not in (1, 2, 3):
        raise ValueError(f"variant must be 1, 2 or 3, got {variant}")
    if not (0 <= pu1 <= 1 and 0 <= pu2 <= 1):
        raise ValueError("pu1, pu2 must be probabilities")
    gth = rates.gamma_th
    n = n_bins
    res = (n - 1 - np.arange(n)) * (gth / n)
    f_sd = _link_cdf(rates.w_sd, res)
    p_sd = link_bin_pdf(rates.w_sd, n, gth).mass

    if variant == 1:
        f_sr2 = below_prob(rates.w_sr2, gth)
        f_r1r2 = below_prob(rates.w_r1r2, gth)
        stay = f_sd * (pu1 * _link_cdf(rates.w_r1d, res) * f_sr2 * f_r1r2
                       + (1.0 - pu1) * f_sr2)
        entry = _entry(p_sd)
    elif variant == 2:
        stay = f_sd * (pu2 * _link_cdf(rates.w_r2d, res) + (1.0 - pu2))
        entry = _entry(p_sd)
    else:
        if tc is None or overall1 is None:
            raise ValueError("variant 3 needs the TC distribution and overall1")
        stay = (f_sd
                * (pu2 * _link_cdf(rates.w_r2d, res) + (1.0 - pu2))
                * (pu1 * _link_cdf(rates.w_r1d, res) + (1.0 - pu1)))
        p_r1d = link_bin_pdf(rates.w_r1d, n, gth).mass
        ov1 = np.asarray(overall1, dtype=float)
        # state _1 is entered by S -> R2 (D adds gamma_SD), _2 by R1 -> R2 (adds gamma_R1D)
        via_s = truncated_conv(ov1, p_sd)
        via_r1 = truncated_conv(ov1, p_r1d)
        total = tc.p_triple
        if total > 0:
            w1, w2, w3 = tc.p1 / total, tc.p2 / total, tc.p3 / total
        else:
            w1, w2, w3 = 0.0, 0.0, 1.0
        entry = w3 * _entry(p_sd)
        if w1 > 0:
            entry = entry + w1 * _entry(via_s)
        if w2 > 0:
            entry = entry + w2 * _entry(via_r1)

    stm = (1.0 - stay)[:, None] * entry[None, :]
    stm[np.diag_indices(n)] += stay
    return _renormalize(stm) if renormalize else stm


def stationary(stm: np.ndarray, init, tol: float = ITER_TOL,
               max_iter: int = INNER_CAP) -> np.ndarray:
    """Power iteration ``p <- p T`` until ``||p T - p||_2 < tol``.

    Returns the last iterate ``p`` whose step was below ``tol``.  If an
    iterate goes negative the previous (valid) iterate is returned.
    """
    stm = np.asarray(stm, dtype=float)
    if np.any(stm < 0):
        raise ChainError("transition matrix has negative entries")
    p = np.asarray(init, dtype=float)
    for it in range(max_iter):
        nxt = p @ stm
        if np.any(nxt < 0) or not np.all(np.isfinite(nxt)):
            return p
        step = np.linalg.norm(nxt - p)
        if step < tol:
            return p
        p = nxt
    raise NonConvergenceError("stationary", float(step), max_iter)


def derive_scalars(overall1, overall2, overall3, p_sd, p_r1d, p_r2d) -> ScalarSet:
    """Probabilities that combined SNR plus one fresh link draw stays below threshold."""
    def mass(a, b):
        return float(truncated_conv(np.asarray(a, float), np.asarray(b, float)).sum())

    return ScalarSet(
        c=mass(overall1, p_sd),
        d=mass(overall1, p_r1d),
        f=mass(overall3, p_r2d),
        g=mass(overall3, p_r1d),
        m=mass(overall2, p_sd),
        n=mass(overall2, p_r2d),
        o=mass(overall3, p_sd),
    )


def build_tc_stm(rates: DerivedRates, s: ScalarSet, pu1: float, pu2: float) -> np.ndarray:
    gth = rates.gamma_th
    e_sd, e_sr1, e_sr2 = (exceed_prob(w, gth) for w in (rates.w_sd, rates.w_sr1, rates.w_sr2))
    f_sd, f_sr1, f_sr2 = (below_prob(w, gth) for w in (rates.w_sd, rates.w_sr1, rates.w_sr2))
    e_r1r2 = exceed_prob(rates.w_r1r2, gth)

    T = np.zeros((N_TC, N_TC))
    S, SR1, SR2, P1, P2, P3 = (int(x) for x in TcState)

    T[S, S] = f_sd * f_sr2 * f_sr1 + e_sd
    T[S, SR1] = f_sd * f_sr2 * e_sr1
    T[S, SR2] = f_sd * f_sr1 * e_sr2
    T[S, P3] = f_sd * e_sr1 * e_sr2

    T[SR1, S] = (1.0 - s.c) + s.c * pu1 * (1.0 - s.d)
    T[SR1, P1] = s.c * pu1 * s.d * e_sr2 + s.c * (1.0 - pu1) * e_sr2
    T[SR1, P2] = s.c * pu1 * s.d * e_r1r2 * f_sr2
    T[SR1, SR1] = 1.0 - T[SR1, S] - T[SR1, P1] - T[SR1, P2]

    T[SR2, S] = (1.0 - s.m) + pu2 * s.m * (1.0 - s.n)
    T[SR2, SR2] = 1.0 - T[SR2, S]

    leave = (1.0 - s.o) + s.o * (pu2 * (1.0 - s.f)
                                 + (pu2 * s.f + (1.0 - pu2)) * pu1 * (1.0 - s.g))
    for k in (P1, P2, P3):
        T[k, S] = leave
        T[k, k] = 1.0 - leave

    if np.any(T < -1e-12) or np.any(T > 1 + 1e-12):
        raise ChainError("TC transition probability outside [0, 1]")
    return check_stm(np.clip(T, 0.0, 1.0))


def spend_factor_r1(tc: TcDist, s: ScalarSet, pu2: float, rates: DerivedRates) -> float:
    """Per-slot probability that R1 transmits, given it holds at least M_R1."""
    gth = rates.gamma_th
    relay_hop = below_prob(rates.w_sr2, gth) * exceed_prob(rates.w_r1r2, gth)
    pt = tc.p_triple
    return (tc.p_sr1 * s.c * ((1.0 - s.d) + s.d * relay_hop)
            + pu2 * pt * s.o * s.f * (1.0 - s.g)
            + (1.0 - pu2) * pt * s.o * (1.0 - s.g))


def spend_factor_r2(tc: TcDist, s: ScalarSet) -> float:
    """Per-slot probability that R2 transmits, given it holds at least M_R2."""
    return tc.p_sr2 * s.m * (1.0 - s.n) + tc.p_triple * s.o * (1.0 - s.f)


def _pu_from(b: float, lam: float, m: float) -> float:
    return closed_form.prob_at_least_m(closed_form.solve_decay(min(max(b, 0.0), 1.0), lam, m))


def solve_fixed_point(rates: DerivedRates, energy: EnergyParams, n_bins: int,
                      tol: float = ITER_TOL) -> FixedPointResult:
    """Nested fixed point for the TC distribution, SNR PDFs and PU1/PU2.

    Inner: stationary SNR chains and one TC power step per pass, rebuilding
    the variant-3 chain from the current TC vector, until the TC vector
    settles.  Outer: ``PU <- min(1, 1/(b lam M))`` with damping 0.5 until
    the undamped update moves PU by less than ``tol``.
    """
    n = n_bins
    gth = rates.gamma_th
    p_sd = link_bin_pdf(rates.w_sd, n, gth).mass
    p_r1d = link_bin_pdf(rates.w_r1d, n, gth).mass
    p_r2d = link_bin_pdf(rates.w_r2d, n, gth).mass
    uniform = np.full(n, 1.0 / n)

    pu1 = pu2 = 0.5
    p = np.full(N_TC, 1.0 / N_TC)
    ov3 = uniform
    total_iters = 0
    resid = np.inf
    for outer in range(1, OUTER_CAP + 1):
        t1 = build_overall_chain(1, rates, pu1, pu2, n)
        t2 = build_overall_chain(2, rates, pu1, pu2, n)
        ov1 = stationary(t1, uniform, tol)
        ov2 = stationary(t2, uniform, tol)

        for _ in range(TC_CAP):
            tc = TcDist.from_vector(p)
            t3 = build_overall_chain(3, rates, pu1, pu2, n, tc=tc, overall1=ov1)
            ov3 = stationary(t3, ov3, tol)
            scalars = derive_scalars(ov1, ov2, ov3, p_sd, p_r1d, p_r2d)
            T = build_tc_stm(rates, scalars, pu1, pu2)
            nxt = p @ T
            total_iters += 1
            if np.any(nxt < 0):
                break
            step = np.linalg.norm(nxt - p)
            if step < tol:
                break
            p = nxt
        else:
            raise NonConvergenceError("TC power iteration", float(step), TC_CAP)

        tc = TcDist.from_vector(p)
        b1 = spend_factor_r1(tc, scalars, pu2, rates)
        b2 = spend_factor_r2(tc, scalars)
        new1 = _pu_from(b1, energy.lambda1, energy.m_r1)
        new2 = _pu_from(b2, energy.lambda2, energy.m_r2)
        resid = max(abs(new1 - pu1), abs(new2 - pu2))
        if resid < tol:
            return FixedPointResult(
                tc=tc,
                overall1=BinPdf(ov1, gth),
                overall2=BinPdf(ov2, gth),
                overall3=BinPdf(ov3, gth),
                scalars=scalars,
                pu1=pu1,
                pu2=pu2,
                b1=b1,
                b2=b2,
                iterations=total_iters,
                tc_matrix=T,
                t1=t1,
                t2=t2,
                t3=t3,
            )
        pu1 = (1.0 - PU_DAMPING) * pu1 + PU_DAMPING * new1
        pu2 = (1.0 - PU_DAMPING) * pu2 + PU_DAMPING * new2
    raise NonConvergenceError("PU fixed point", float(resid), OUTER_CAP)
