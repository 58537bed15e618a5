"""One-call analytic evaluation of a scenario."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .chain import FixedPointResult, solve_fixed_point
from .closed_form import (BufferLaw, limiting_cdf, outage_probability, solve_decay,
                          throughput, timeslot_cost)
from .scenario import DerivedRates, Scenario, derive_rates


@dataclass(frozen=True)
class AnalysisReport:
    scenario: Scenario
    rates: DerivedRates
    fixed_point: FixedPointResult
    op: float
    tau: float
    tc_cost: float  # expected slots per delivered packet
    law1: BufferLaw
    law2: BufferLaw

    @property
    def tc(self):
        return self.fixed_point.tc

    @property
    def pu1(self) -> float:
        return self.fixed_point.pu1

    @property
    def pu2(self) -> float:
        return self.fixed_point.pu2

    @property
    def b1(self) -> float:
        return self.fixed_point.b1

    @property
    def b2(self) -> float:
        return self.fixed_point.b2

    @property
    def q1(self) -> Optional[float]:
        return self.law1.q

    @property
    def q2(self) -> Optional[float]:
        return self.law2.q

    def overall_pdf(self, variant: int):
        return (self.fixed_point.overall1, self.fixed_point.overall2,
                self.fixed_point.overall3)[variant - 1]

    def buffer_bin_pdf(self, relay: int, bins_per_m: int = 50,
                       range_m: float = 5.0) -> np.ndarray:
        """Limiting buffer law over the simulator's histogram cells (last = overflow)."""
        law = (self.law1, self.law2)[relay - 1]
        n = int(round(bins_per_m * range_m))
        edges = np.arange(n + 1) * (law.m / bins_per_m)
        cdf = np.array([limiting_cdf(law, x) for x in edges])
        return np.append(np.diff(cdf), 1.0 - cdf[-1])


def analyze(sc: Scenario) -> AnalysisReport:
    """Solve the fixed point and evaluate OP, throughput and slot cost.

    Raises :class:`~ehor.chain.NonConvergenceError` if an iteration fails
    to settle.
    """
    rates = derive_rates(sc)
    fp = solve_fixed_point(rates, sc.energy, sc.bins)
    op = outage_probability(fp.tc, fp.scalars, fp.pu1, fp.pu2, rates)
    cost = timeslot_cost(op) if op < 1.0 else math.inf
    return AnalysisReport(
        scenario=sc,
        rates=rates,
        fixed_point=fp,
        op=op,
        tau=throughput(op, sc.radio.r0),
        tc_cost=cost,
        law1=solve_decay(min(fp.b1, 1.0), sc.energy.lambda1, sc.energy.m_r1),
        law2=solve_decay(min(fp.b2, 1.0), sc.energy.lambda2, sc.energy.m_r2),
    )
