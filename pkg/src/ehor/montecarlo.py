"""Seeded slot-by-slot Monte Carlo of the OR/MRC energy-harvesting network.

Random numbers come from Philox4x64-10 (counter-based) keyed with the
64-bit seed, counter starting at zero, converted to doubles as
``(x >> 11) * 2**-53`` (numpy's ``Generator.random``).  Each slot consumes
eight uniforms in the fixed order SD, SR1, SR2, R1R2, R1D, R2D, harvest R1,
harvest R2; a uniform ``u`` becomes the variate ``-ln(1 - u) / rate``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numba
import numpy as np

from .energy import RelayBuffer, commit_slot
from .fading import BinPdf
from .protocol import SlotDraws, TcState, decide_core, decide_slot
from .scenario import Scenario, derive_rates

MODES = ("mrc", "non_mrc")
DEFAULT_SLOTS = 1_000_000
DEFAULT_WARMUP = 10_000
CHUNK = 1 << 16
DRAWS_PER_SLOT = 8

# bits of the per-slot event mask: "combined SNR + this link stays below threshold"
EV_C, EV_D, EV_M, EV_N, EV_O, EV_F, EV_G = (1 << k for k in range(7))
EVENT_BITS = {"c": EV_C, "d": EV_D, "m": EV_M, "n": EV_N, "o": EV_O, "f": EV_F, "g": EV_G}
EVENT_STATES = {"c": (1,), "d": (1,), "m": (2,), "n": (2,),
                "o": (3, 4, 5), "f": (3, 4, 5), "g": (3, 4, 5)}


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    slots: int = DEFAULT_SLOTS
    warmup: int = DEFAULT_WARMUP
    seed: int = 1
    mode: str = "mrc"
    energy_bins_per_m: int = 50
    energy_range_m: float = 5.0
    overall_bins: Optional[int] = None  # defaults to the scenario's bin count
    batches: int = 100

    def __post_init__(self):
        if self.slots <= 0:
            raise SimulationError("slots must be positive")
        if not (0 <= self.warmup < self.slots):
            raise SimulationError("need 0 <= warmup < slots")
        if self.mode not in MODES:
            raise SimulationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not (0 <= self.seed < 2**64):
            raise SimulationError("seed must be an unsigned 64-bit integer")


@dataclass
class Trace:
    """Per-slot record; every field describes the slot *before* its decision."""

    state: np.ndarray
    gamma: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    transmitter: np.ndarray
    delivered: np.ndarray
    events: np.ndarray


@dataclass
class SimStats:
    mode: str
    slot_count: int
    warmup: int
    outage_slots: int
    deliveries: int
    occupancy: np.ndarray
    overall_hist: np.ndarray  # 3 x N counts for {S,R1}, {S,R2}, {S,R1,R2}
    gamma_th: float
    buffer_hist: Tuple[np.ndarray, np.ndarray]  # counts; last cell is overflow
    buffer_bin_width: Tuple[float, float]
    relay_m: Tuple[float, float]
    cost_mean: float
    cost_var: float
    cost_n: int
    op_se: float
    spends: Tuple[int, int]
    charged: Tuple[int, int]
    event_counts: Dict[str, Tuple[int, int]] = field(default_factory=dict)

    @property
    def measured(self) -> int:
        return self.slot_count - self.warmup

    @property
    def op(self) -> float:
        return self.outage_slots / self.measured

    @property
    def throughput_factor(self) -> float:
        return 1.0 - self.op

    @property
    def tc(self) -> np.ndarray:
        return self.occupancy / self.measured

    @property
    def pu(self) -> Tuple[float, float]:
        return self.charged[0] / self.measured, self.charged[1] / self.measured

    @property
    def cost_se(self) -> float:
        if self.cost_n < 2:
            return math.nan
        return math.sqrt(self.cost_var / self.cost_n)

    def scalar_freq(self, name: str) -> float:
        hits, total = self.event_counts[name]
        return hits / total if total else math.nan

    def overall_pdf(self, variant: int) -> BinPdf:
        return BinPdf(empirical_pdf(self.overall_hist[variant - 1]), self.gamma_th)

    def buffer_pdf(self, relay: int) -> np.ndarray:
        return empirical_pdf(self.buffer_hist[relay - 1])


def empirical_pdf(counts) -> np.ndarray:
    """Normalise histogram counts to unit mass."""
    c = np.asarray(counts, dtype=float)
    if c.size == 0 or c.sum() <= 0:
        raise SimulationError("empirical_pdf needs a non-empty histogram")
    return c / c.sum()


def histogram(values, edges) -> np.ndarray:
    """Counts over half-open bins ``[e_j, e_{j+1})`` plus one overflow cell."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise SimulationError("histogram of no samples")
    edges = np.asarray(edges, dtype=float)
    idx = np.searchsorted(edges, v, side="right") - 1
    nb = len(edges) - 1
    idx = np.where(idx >= nb, nb, idx)
    idx = np.where(v < edges[0], nb, idx)
    return np.bincount(idx, minlength=nb + 1)


def total_variation(p, q) -> float:
    p = np.asarray(getattr(p, "mass", p), dtype=float)
    q = np.asarray(getattr(q, "mass", q), dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"bin mismatch: {p.shape} vs {q.shape}")
    return 0.5 * float(np.abs(p - q).sum())


def make_generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed))


def draw_chunk(gen: np.random.Generator, n: int, rates: np.ndarray) -> np.ndarray:
    """``n`` slots of (six link SNRs, two harvests); ``rates`` has length 8."""
    u = gen.random((n, DRAWS_PER_SLOT))
    return -np.log1p(-u) / rates


@numba.njit(cache=True)
def _run_chunk(vals, mrc, gth, m1, m2, carry, off,
               o_state, o_gamma, o_b1, o_b2, o_tx, o_dl, o_ev):
    state = int(carry[0])
    g = carry[1]
    b1 = carry[2]
    b2 = carry[3]
    for i in range(vals.shape[0]):
        sd = vals[i, 0]
        sr1 = vals[i, 1]
        sr2 = vals[i, 2]
        r1r2 = vals[i, 3]
        r1d = vals[i, 4]
        r2d = vals[i, 5]
        if not mrc:
            g = 0.0
        k = off + i
        o_state[k] = state
        o_gamma[k] = g
        o_b1[k] = b1
        o_b2[k] = b2
        ev = 0
        if state == 1:
            if g + sd < gth:
                ev |= 1
            if g + r1d < gth:
                ev |= 2
        elif state == 2:
            if g + sd < gth:
                ev |= 4
            if g + r2d < gth:
                ev |= 8
        elif state >= 3:
            if g + sd < gth:
                ev |= 16
            if g + r2d < gth:
                ev |= 32
            if g + r1d < gth:
                ev |= 64
        o_ev[k] = ev
        tx, dl, s1, s2, ns, ng, rx = decide_core(
            state, g, sd, sr1, sr2, r1r2, r1d, r2d, b1 >= m1, b2 >= m2, gth)
        o_tx[k] = tx
        o_dl[k] = dl
        b1 = b1 - (m1 if s1 else 0.0) + vals[i, 6]
        b2 = b2 - (m2 if s2 else 0.0) + vals[i, 7]
        state = ns
        g = ng
    carry[0] = state
    carry[1] = g
    carry[2] = b1
    carry[3] = b2


def _rate_vector(sc: Scenario) -> Tuple[np.ndarray, float]:
    r = derive_rates(sc)
    rates = np.array(r.as_tuple() + (sc.energy.lambda1, sc.energy.lambda2))
    return rates, r.gamma_th


def _empty_trace(n: int) -> Trace:
    return Trace(
        state=np.empty(n, np.int8),
        gamma=np.empty(n),
        b1=np.empty(n),
        b2=np.empty(n),
        transmitter=np.empty(n, np.int8),
        delivered=np.empty(n, np.bool_),
        events=np.empty(n, np.uint8),
    )


def simulate_trace(sc: Scenario, cfg: SimConfig) -> Trace:
    """Run ``cfg.slots`` slots from empty buffers in state S."""
    rates, gth = _rate_vector(sc)
    gen = make_generator(cfg.seed)
    tr = _empty_trace(cfg.slots)
    carry = np.zeros(4)
    mrc = cfg.mode == "mrc"
    for off in range(0, cfg.slots, CHUNK):
        n = min(CHUNK, cfg.slots - off)
        vals = draw_chunk(gen, n, rates)
        _run_chunk(vals, mrc, gth, sc.energy.m_r1, sc.energy.m_r2, carry, off,
                   tr.state, tr.gamma, tr.b1, tr.b2, tr.transmitter, tr.delivered, tr.events)
    return tr


def simulate_trace_reference(sc: Scenario, cfg: SimConfig) -> Trace:
    """Slow pure-Python twin of :func:`simulate_trace` built on the public
    ``decide_slot`` / ``commit_slot`` API; used to cross-check the kernel."""
    rates, gth = _rate_vector(sc)
    gen = make_generator(cfg.seed)
    m1, m2 = sc.energy.m_r1, sc.energy.m_r2
    tr = _empty_trace(cfg.slots)
    state, g = TcState.S, 0.0
    buf1, buf2 = RelayBuffer(), RelayBuffer()
    k = 0
    for off in range(0, cfg.slots, CHUNK):
        n = min(CHUNK, cfg.slots - off)
        for row in draw_chunk(gen, n, rates).tolist():
            if cfg.mode == "non_mrc":
                g = 0.0
            draws = SlotDraws(*row[:6])
            out = decide_slot(state, g, draws, buf1.peb, buf2.peb, gth, m1, m2)
            tr.state[k], tr.gamma[k], tr.b1[k], tr.b2[k] = state, g, buf1.peb, buf2.peb
            tr.transmitter[k], tr.delivered[k] = out.transmitter, out.delivered
            tr.events[k] = _events_py(int(state), g, draws, gth)
            buf1 = commit_slot(buf1, out.spend_r1, row[6])
            buf2 = commit_slot(buf2, out.spend_r2, row[7])
            state, g = out.next, out.next_gamma_overall
            k += 1
    return tr


def _events_py(state: int, g: float, d: SlotDraws, gth: float) -> int:
    below = lambda x: g + x < gth  # noqa: E731
    ev = 0
    if state == 1:
        ev |= EV_C * below(d.gamma_sd) | EV_D * below(d.gamma_r1d)
    elif state == 2:
        ev |= EV_M * below(d.gamma_sd) | EV_N * below(d.gamma_r2d)
    elif state >= 3:
        ev |= (EV_O * below(d.gamma_sd) | EV_F * below(d.gamma_r2d)
               | EV_G * below(d.gamma_r1d))
    return ev


def summarize(tr: Trace, sc: Scenario, cfg: SimConfig) -> SimStats:
    w = cfg.warmup
    st = tr.state[w:]
    dl = tr.delivered[w:]
    measured = st.size
    gth = derive_rates(sc).gamma_th
    nb = cfg.overall_bins or sc.bins

    occupancy = np.bincount(st, minlength=len(TcState)).astype(np.int64)

    gedges = np.arange(nb + 1) * (gth / nb)
    overall = np.zeros((3, nb), dtype=np.int64)
    gam = tr.gamma[w:]
    for v, sel in enumerate((st == 1, st == 2, st >= 3)):
        if sel.any():
            overall[v] = histogram(gam[sel], gedges)[:nb]

    buf_hists, widths = [], []
    for arr, m in ((tr.b1[w:], sc.energy.m_r1), (tr.b2[w:], sc.energy.m_r2)):
        width = m / cfg.energy_bins_per_m
        n_e = int(round(cfg.energy_range_m * cfg.energy_bins_per_m))
        buf_hists.append(histogram(arr, np.arange(n_e + 1) * width))
        widths.append(width)

    hits = np.flatnonzero(dl)
    gaps = np.diff(hits)
    cost_n = gaps.size
    cost_mean = float(gaps.mean()) if cost_n else math.nan
    cost_var = float(gaps.var(ddof=1)) if cost_n > 1 else math.nan

    nbatch = min(cfg.batches, measured)
    size = measured // nbatch
    batch_op = 1.0 - dl[: size * nbatch].reshape(nbatch, size).mean(axis=1)
    op_se = float(batch_op.std(ddof=1) / math.sqrt(nbatch)) if nbatch > 1 else math.nan

    ev = tr.events[w:]
    event_counts = {}
    for name, bit in EVENT_BITS.items():
        sel = np.isin(st, EVENT_STATES[name])
        event_counts[name] = (int(np.count_nonzero(ev[sel] & bit)), int(sel.sum()))

    tx = tr.transmitter[w:]
    m1, m2 = sc.energy.m_r1, sc.energy.m_r2
    return SimStats(
        mode=cfg.mode,
        slot_count=cfg.slots,
        warmup=w,
        outage_slots=int(measured - dl.sum()),
        deliveries=int(dl.sum()),
        occupancy=occupancy,
        overall_hist=overall,
        gamma_th=gth,
        buffer_hist=(buf_hists[0], buf_hists[1]),
        buffer_bin_width=(widths[0], widths[1]),
        relay_m=(m1, m2),
        cost_mean=cost_mean,
        cost_var=cost_var,
        cost_n=cost_n,
        op_se=op_se,
        spends=(int(np.count_nonzero(tx == 1)), int(np.count_nonzero(tx == 2))),
        charged=(int(np.count_nonzero(tr.b1[w:] >= m1)), int(np.count_nonzero(tr.b2[w:] >= m2))),
        event_counts=event_counts,
    )


def run_simulation(sc: Scenario, cfg: SimConfig) -> SimStats:
    return summarize(simulate_trace(sc, cfg), sc, cfg)
