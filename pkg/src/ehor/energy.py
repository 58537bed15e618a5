"""Harvest-store-use relay buffers.

Harvested energy lands in the secondary buffer (SEB) during a slot and is
moved to the primary buffer (PEB) at slot end, so it can never pay for a
transmission in the slot it was harvested.  Both buffers are unbounded and
lossless.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class EnergyError(ValueError):
    pass


@dataclass(frozen=True)
class RelayBuffer:
    peb: float = 0.0
    seb: float = 0.0

    def __post_init__(self):
        if self.peb < 0 or self.seb < 0:
            raise EnergyError(f"negative buffer level: peb={self.peb}, seb={self.seb}")

    def can_transmit(self, m: float) -> bool:
        return self.peb >= m


def sample_harvest(lam: float, draw: float) -> float:
    """Exponential harvest with rate ``lam`` (1/mJ) from a uniform draw in (0, 1]."""
    return -math.log(draw) / lam


def commit_slot(buf: RelayBuffer, spend: float, harvest: float) -> RelayBuffer:
    """End-of-slot update: pay ``spend`` from the PEB, then move the SEB harvest in."""
    if spend < 0 or harvest < 0:
        raise EnergyError("spend and harvest must be non-negative")
    if spend > buf.peb:
        raise EnergyError(f"spend {spend} exceeds stored energy {buf.peb}")
    seb = buf.seb + harvest
    return RelayBuffer(peb=buf.peb - spend + seb, seb=0.0)
