"""``ehor``: analytic and/or simulated OP sweeps written to CSV.

Columns (fixed order; groups appear only when computed):

* ``p_s_dbm``
* analytic: ``op tau tc_cost pu1 pu2 b1 b2 psi1 psi2 q1 q2`` and
  ``tc_s tc_sr1 tc_sr2 tc_sr1r2_1 tc_sr1r2_2 tc_sr1r2_3``
* per simulated mode (prefix ``mrc_`` / ``non_mrc_``): ``op op_se tau
  tc_cost tc_cost_se pu1 pu2`` and the six ``tc_*`` occupancies; the MRC
  group then adds ``tv_gamma1 tv_gamma2 tv_gamma3 tv_buffer1 tv_buffer2``
  (total variation against the analytic PDFs) when analytics were run

Analytic columns carry the ``an_`` prefix.  Floats are written with
``repr`` so reruns are byte-identical; an undefined value is an empty cell.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from .analysis import AnalysisReport, analyze
from .chain import NonConvergenceError
from .montecarlo import (DEFAULT_SLOTS, DEFAULT_WARMUP, MODES, SimConfig, SimStats,
                         SimulationError, run_simulation, total_variation)
from .scenario import Scenario, ScenarioError, load_scenario_file, reference_scenario

EXIT_USAGE = 2
EXIT_NONCONVERGENCE = 3

TC_NAMES = ("s", "sr1", "sr2", "sr1r2_1", "sr1r2_2", "sr1r2_3")
ANALYTIC_COLS = ("op", "tau", "tc_cost", "pu1", "pu2", "b1", "b2",
                 "psi1", "psi2", "q1", "q2") + tuple(f"tc_{n}" for n in TC_NAMES)
SIM_COLS = ("op", "op_se", "tau", "tc_cost", "tc_cost_se", "pu1", "pu2") + tuple(
    f"tc_{n}" for n in TC_NAMES)
TV_COLS = ("tv_gamma1", "tv_gamma2", "tv_gamma3", "tv_buffer1", "tv_buffer2")


@dataclass(frozen=True)
class SweepSpec:
    start: float
    stop: float
    step: float
    parameter: str = "p_s_dbm"

    def __post_init__(self):
        if not (self.step > 0):
            raise ValueError("sweep step must be positive")
        if self.start > self.stop:
            raise ValueError("sweep start must not exceed stop")

    def values(self) -> List[float]:
        n = int(math.floor((self.stop - self.start) / self.step + 1e-9))
        return [self.start + k * self.step for k in range(n + 1)]


def parse_sweep(text: str) -> SweepSpec:
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"sweep must be start:stop:step, got {text!r}")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise ValueError(f"non-numeric sweep {text!r}") from None
    return SweepSpec(start, stop, step)


def columns(analytic: bool, sim_modes: Sequence[str]) -> List[str]:
    cols = ["p_s_dbm"]
    if analytic:
        cols += [f"an_{c}" for c in ANALYTIC_COLS]
    for m in sim_modes:
        cols += [f"{m}_{c}" for c in SIM_COLS]
        if analytic and m == "mrc":
            cols += [f"{m}_{c}" for c in TV_COLS]
    return cols


def analytic_fields(rep: AnalysisReport) -> Dict[str, Optional[float]]:
    out = {
        "op": rep.op, "tau": rep.tau, "tc_cost": rep.tc_cost,
        "pu1": rep.pu1, "pu2": rep.pu2, "b1": rep.b1, "b2": rep.b2,
        "psi1": rep.law1.psi, "psi2": rep.law2.psi, "q1": rep.q1, "q2": rep.q2,
    }
    for name, v in zip(TC_NAMES, rep.tc.as_array()):
        out[f"tc_{name}"] = float(v)
    return {f"an_{k}": v for k, v in out.items()}


def sim_fields(st: SimStats, r0: float, rep: Optional[AnalysisReport]) -> Dict[str, Optional[float]]:
    pu1, pu2 = st.pu
    out = {
        "op": st.op, "op_se": st.op_se, "tau": (1.0 - st.op) * r0,
        "tc_cost": st.cost_mean, "tc_cost_se": st.cost_se, "pu1": pu1, "pu2": pu2,
    }
    for name, v in zip(TC_NAMES, st.tc):
        out[f"tc_{name}"] = float(v)
    if rep is not None:
        for v in (1, 2, 3):
            hist = st.overall_hist[v - 1]
            out[f"tv_gamma{v}"] = (total_variation(st.overall_pdf(v), rep.overall_pdf(v).normalized())
                                   if hist.sum() else None)
        for relay in (1, 2):
            law = (rep.law1, rep.law2)[relay - 1]
            out[f"tv_buffer{relay}"] = (total_variation(st.buffer_pdf(relay), rep.buffer_bin_pdf(relay))
                                        if law.stationary else None)
    return {f"{st.mode}_{k}": v for k, v in out.items()}


@dataclass(frozen=True)
class PointJob:
    scenario: Scenario
    analytic: bool
    sim_modes: tuple
    slots: int
    warmup: int
    seed: int


def run_point(job: PointJob) -> Dict[str, Optional[float]]:
    sc = job.scenario
    row: Dict[str, Optional[float]] = {"p_s_dbm": sc.radio.p_s_dbm}
    rep = analyze(sc) if job.analytic else None
    if rep is not None:
        row.update(analytic_fields(rep))
    for mode in job.sim_modes:
        cfg = SimConfig(slots=job.slots, warmup=job.warmup, seed=job.seed, mode=mode)
        # the analytic PDFs describe the MRC receiver only
        ref = rep if mode == "mrc" else None
        row.update(sim_fields(run_simulation(sc, cfg), sc.radio.r0, ref))
    return row


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def worker_count(n_jobs: int) -> int:
    raw = os.environ.get("EHOR_THREADS")
    cap = os.cpu_count() or 1
    if raw:
        try:
            cap = int(raw)
        except ValueError:
            raise ValueError(f"EHOR_THREADS must be an integer, got {raw!r}") from None
        if cap < 1:
            raise ValueError("EHOR_THREADS must be at least 1")
    return max(1, min(cap, n_jobs))


def run_jobs(jobs: List[PointJob]) -> List[Dict[str, Optional[float]]]:
    workers = worker_count(len(jobs))
    if workers == 1:
        return [run_point(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_point, jobs))  # map keeps sweep order


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ehor",
        description="Outage/throughput of a two-relay energy-harvesting OR network with MRC.",
    )
    p.add_argument("--scenario", help="scenario file (default: built-in reference layout)")
    p.add_argument("--mode", choices=("analytic", "simulate", "both"), default="analytic")
    p.add_argument("--slots", type=int, default=DEFAULT_SLOTS,
                   help="simulated slots per point, warmup included")
    p.add_argument("--warmup", type=int, default=DEFAULT_WARMUP)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--bins", type=int, help="override the scenario's SNR bin count")
    p.add_argument("--sweep", help="source power sweep start:stop:step in dBm")
    p.add_argument("--sim-mode", choices=MODES + ("both",), default="both")
    p.add_argument("--out", default="ehor_results.csv")
    return p


def _summary(row: Dict[str, Optional[float]]) -> str:
    parts = [f"P={row['p_s_dbm']:g} dBm"]
    for key, label in (("an_op", "OP"), ("mrc_op", "OP_mrc"), ("non_mrc_op", "OP_non_mrc")):
        if row.get(key) is not None:
            parts.append(f"{label}={row[key]:.6f}")
    return "  ".join(parts)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        sc = load_scenario_file(args.scenario) if args.scenario else reference_scenario()
        if args.bins is not None:
            sc = sc.with_bins(args.bins)
        powers = parse_sweep(args.sweep).values() if args.sweep else [sc.radio.p_s_dbm]
        analytic = args.mode in ("analytic", "both")
        sim_modes: tuple = ()
        if args.mode in ("simulate", "both"):
            sim_modes = MODES if args.sim_mode == "both" else (args.sim_mode,)
            SimConfig(slots=args.slots, warmup=args.warmup, seed=args.seed)  # validate early
        jobs = [PointJob(sc.with_power(pw), analytic, sim_modes, args.slots, args.warmup, args.seed)
                for pw in powers]
        worker_count(len(jobs))  # rejects a bad EHOR_THREADS up front
    except (ScenarioError, SimulationError, ValueError, OSError) as exc:
        print(f"ehor: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        rows = run_jobs(jobs)
    except NonConvergenceError as exc:
        print(f"ehor: analytic solver failed: {exc.loop} (residual {exc.residual:.3e}, "
              f"{exc.iterations} iterations)", file=sys.stderr)
        return EXIT_NONCONVERGENCE

    cols = columns(analytic, sim_modes)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in rows:
            w.writerow([fmt(row.get(c)) for c in cols])

    for row in rows:
        print(_summary(row))
    print(f"wrote {len(rows)} row(s) to {args.out}")
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
