"""Opportunistic-routing slot decision for the S / R1 / R2 / D network.

Each slot, given the transmitter-candidate (TC) state, the SNR that D has
already combined for the in-flight packet, this slot's six link SNRs and
whether each relay holds at least one transmission worth of energy, the
protocol picks a transmitter and the next TC state.

Priority when several nodes could serve the same receiver is S, then R2,
then R1.  S is mains powered; relays may only transmit with
``buffer >= M``.  A broadcast that D hears without decoding is combined
(MRC) into ``gamma_overall``; a delivery resets the packet to state S with
nothing accumulated.

The decision itself lives in :func:`decide_core`, a numba kernel shared by
the public :func:`decide_slot` and the Monte Carlo loop.  :data:`ROWS` spells
out every row as an explicit conjunction and is used as an independent
oracle in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Callable, List, NamedTuple, Optional

import numba


class TcState(IntEnum):
    S = 0
    SR1 = 1
    SR2 = 2
    SR1R2_1 = 3  # S -> R2 while {S, R1} held the packet
    SR1R2_2 = 4  # R1 -> R2 while {S, R1} held the packet
    SR1R2_3 = 5  # S -> R1, R2 in one broadcast


class Transmitter(IntEnum):
    S = 0
    R1 = 1
    R2 = 2
    SILENT = 3


TRIPLE_STATES = (TcState.SR1R2_1, TcState.SR1R2_2, TcState.SR1R2_3)


class SlotDraws(NamedTuple):
    gamma_sd: float
    gamma_sr1: float
    gamma_sr2: float
    gamma_r1r2: float
    gamma_r1d: float
    gamma_r2d: float


@dataclass(frozen=True)
class SlotOutcome:
    transmitter: Transmitter
    delivered: bool
    spend_r1: float
    spend_r2: float
    next: TcState
    next_gamma_overall: float
    delivered_snr: Optional[float]


class ProtocolError(ValueError):
    pass


def residual_threshold(gamma_th: float, gamma_overall: float) -> float:
    """SNR still missing at D for the current packet."""
    if not (0.0 <= gamma_overall < gamma_th):
        raise ProtocolError(
            f"gamma_overall={gamma_overall} outside [0, {gamma_th}); "
            "a packet at threshold is already delivered"
        )
    return gamma_th - gamma_overall


@numba.njit(cache=True)
def decide_core(state, g, sd, sr1, sr2, r1r2, r1d, r2d, b1_ok, b2_ok, gth):
    """Return ``(transmitter, delivered, spend1, spend2, next_state, next_g, rx_snr)``.

    ``rx_snr`` is the SNR D received this slot from the transmitter (0 when
    silent or when D was not the effective receiver and heard nothing new).
    """
    if state == 0:
        if sd >= gth:
            return 0, True, False, False, 0, 0.0, sd
        if sr1 >= gth and sr2 >= gth:
            return 0, False, False, False, 5, sd, sd
        if sr2 >= gth:
            return 0, False, False, False, 2, sd, sd
        if sr1 >= gth:
            return 0, False, False, False, 1, sd, sd
        return 3, False, False, False, 0, 0.0, 0.0

    if g + sd >= gth:
        return 0, True, False, False, 0, 0.0, sd

    if state == 1:
        if b1_ok and g + r1d >= gth:
            return 1, True, True, False, 0, 0.0, r1d
        if sr2 >= gth:
            return 0, False, False, False, 3, g + sd, sd
        if b1_ok and r1r2 >= gth:
            return 1, False, True, False, 4, g + r1d, r1d
        return 3, False, False, False, 1, g, 0.0

    if state == 2:
        if b2_ok and g + r2d >= gth:
            return 2, True, False, True, 0, 0.0, r2d
        return 3, False, False, False, 2, g, 0.0

    # states 3, 4, 5: all three nodes hold the packet
    if b2_ok and g + r2d >= gth:
        return 2, True, False, True, 0, 0.0, r2d
    if b1_ok and g + r1d >= gth:
        return 1, True, True, False, 0, 0.0, r1d
    return 3, False, False, False, state, g, 0.0


def decide_slot(
    state: TcState,
    gamma_overall: float,
    draws: SlotDraws,
    b1: float,
    b2: float,
    gamma_th: float,
    m_r1: float,
    m_r2: float,
) -> SlotOutcome:
    """Apply the OR protocol to one slot.

    Parameters
    ----------
    state, gamma_overall
        Current TC state and the SNR D has combined so far for this packet.
        ``gamma_overall`` must be 0 in state S and below ``gamma_th`` always.
    draws
        This slot's linear link SNRs.
    b1, b2
        Relay primary-buffer levels (mJ) at the start of the slot.
    gamma_th, m_r1, m_r2
        Decoding threshold and per-transmission relay energy costs.
    """
    state = TcState(state)
    if state == TcState.S and gamma_overall != 0.0:
        raise ProtocolError("state S carries no accumulated SNR")
    residual_threshold(gamma_th, gamma_overall)
    tx, delivered, sp1, sp2, nxt, ng, rx = decide_core(
        int(state), float(gamma_overall), *map(float, draws),
        b1 >= m_r1, b2 >= m_r2, float(gamma_th),
    )
    return SlotOutcome(
        transmitter=Transmitter(tx),
        delivered=bool(delivered),
        spend_r1=m_r1 if sp1 else 0.0,
        spend_r2=m_r2 if sp2 else 0.0,
        next=TcState(nxt),
        next_gamma_overall=float(ng),
        delivered_snr=float(gamma_overall + rx) if delivered else None,
    )


# --- explicit row table -----------------------------------------------------


class Ctx(NamedTuple):
    g: float
    d: SlotDraws
    b1_ok: bool
    b2_ok: bool
    gth: float

    def s_to_d(self):
        return self.g + self.d.gamma_sd >= self.gth

    def r1_to_d(self):
        return self.g + self.d.gamma_r1d >= self.gth

    def r2_to_d(self):
        return self.g + self.d.gamma_r2d >= self.gth

    def s_to_r1(self):
        return self.d.gamma_sr1 >= self.gth

    def s_to_r2(self):
        return self.d.gamma_sr2 >= self.gth

    def r1_to_r2(self):
        return self.d.gamma_r1r2 >= self.gth


class Row(NamedTuple):
    state: TcState
    name: str
    transmitter: Transmitter
    delivers: bool
    next: Optional[TcState]  # None: stay in the current state
    condition: Callable[[Ctx], bool]


def _triple_rows(st: TcState) -> List[Row]:
    return [
        Row(st, "S->D", Transmitter.S, True, TcState.S, lambda c: c.s_to_d()),
        Row(st, "R2->D", Transmitter.R2, True, TcState.S,
            lambda c: not c.s_to_d() and c.b2_ok and c.r2_to_d()),
        Row(st, "R1->D", Transmitter.R1, True, TcState.S,
            lambda c: not c.s_to_d() and not (c.b2_ok and c.r2_to_d())
            and c.b1_ok and c.r1_to_d()),
        Row(st, "silent", Transmitter.SILENT, False, None,
            lambda c: not c.s_to_d() and not (c.b2_ok and c.r2_to_d())
            and not (c.b1_ok and c.r1_to_d())),
    ]


ROWS: List[Row] = [
    Row(TcState.S, "S->D", Transmitter.S, True, TcState.S, lambda c: c.s_to_d()),
    Row(TcState.S, "S->R1,R2", Transmitter.S, False, TcState.SR1R2_3,
        lambda c: c.s_to_r1() and c.s_to_r2() and not c.s_to_d()),
    Row(TcState.S, "S->R2", Transmitter.S, False, TcState.SR2,
        lambda c: c.s_to_r2() and not c.s_to_r1() and not c.s_to_d()),
    Row(TcState.S, "S->R1", Transmitter.S, False, TcState.SR1,
        lambda c: c.s_to_r1() and not c.s_to_r2() and not c.s_to_d()),
    Row(TcState.S, "silent", Transmitter.SILENT, False, None,
        lambda c: not c.s_to_r1() and not c.s_to_r2() and not c.s_to_d()),

    Row(TcState.SR1, "S->D", Transmitter.S, True, TcState.S, lambda c: c.s_to_d()),
    Row(TcState.SR1, "R1->D", Transmitter.R1, True, TcState.S,
        lambda c: c.r1_to_d() and c.b1_ok and not c.s_to_d()),
    Row(TcState.SR1, "S->R2 (R1 charged)", Transmitter.S, False, TcState.SR1R2_1,
        lambda c: c.s_to_r2() and not c.r1_to_d() and c.b1_ok and not c.s_to_d()),
    Row(TcState.SR1, "S->R2 (R1 depleted)", Transmitter.S, False, TcState.SR1R2_1,
        lambda c: c.s_to_r2() and not c.b1_ok and not c.s_to_d()),
    Row(TcState.SR1, "R1->R2", Transmitter.R1, False, TcState.SR1R2_2,
        lambda c: c.r1_to_r2() and not c.s_to_r2() and not c.r1_to_d()
        and c.b1_ok and not c.s_to_d()),
    Row(TcState.SR1, "silent", Transmitter.SILENT, False, None,
        lambda c: not c.s_to_d() and not c.s_to_r2()
        and (not c.b1_ok or (not c.r1_to_d() and not c.r1_to_r2()))),

    Row(TcState.SR2, "S->D", Transmitter.S, True, TcState.S, lambda c: c.s_to_d()),
    Row(TcState.SR2, "R2->D", Transmitter.R2, True, TcState.S,
        lambda c: c.r2_to_d() and c.b2_ok and not c.s_to_d()),
    Row(TcState.SR2, "silent", Transmitter.SILENT, False, None,
        lambda c: not c.s_to_d() and not (c.r2_to_d() and c.b2_ok)),
] + [row for st in TRIPLE_STATES for row in _triple_rows(st)]


def rows_for(state: TcState) -> List[Row]:
    return [r for r in ROWS if r.state == state]


def firing_rows(state: TcState, gamma_overall: float, draws: SlotDraws,
                b1_ok: bool, b2_ok: bool, gamma_th: float) -> List[Row]:
    ctx = Ctx(gamma_overall, draws, b1_ok, b2_ok, gamma_th)
    return [r for r in rows_for(TcState(state)) if r.condition(ctx)]
