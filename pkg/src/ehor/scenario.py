"""Scenario description: geometry, radio and energy parameters, link rates.

A scenario file is plain ``key = value`` text::

    # reference layout
    s = 0, 0
    r1 = 30, 20
    r2 = 60, -20
    d = 100, 0
    alpha = -3
    p_s_dbm = 12
    n0_dbm = -50
    r0 = 2
    m_r1_mj = 12
    m_r2_mj = 10
    lambda1_db = -11
    lambda2_db = -12
    bins = 100

Powers are converted dBm -> mW, energies are mJ and every SNR is linear.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from itertools import combinations
from typing import Dict, Tuple

Point = Tuple[float, float]

DEFAULT_BINS = 100

_COORD_KEYS = ("s", "r1", "r2", "d")
_FLOAT_KEYS = (
    "alpha",
    "p_s_dbm",
    "n0_dbm",
    "r0",
    "m_r1_mj",
    "m_r2_mj",
    "lambda1_db",
    "lambda2_db",
)
_INT_KEYS = ("bins",)
KNOWN_KEYS = _COORD_KEYS + _FLOAT_KEYS + _INT_KEYS


class ScenarioError(ValueError):
    """Base class for scenario problems."""


class ScenarioParseError(ScenarioError):
    """Malformed scenario text."""


class ScenarioValidationError(ScenarioError):
    """Well-formed text describing an impossible scenario."""


def dbm_to_mw(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0)


def harvest_rate_from_db(lambda_db: float) -> float:
    """Exponential harvest rate (1/mJ) for a value given in dB.

    The mean harvest per slot is ``10**(lambda_db/10)`` mJ, so the rate is its
    reciprocal: -15 dB gives a rate of about 31.62 /mJ.
    """
    return 10.0 ** (-lambda_db / 10.0)


@dataclass(frozen=True)
class NodeLayout:
    s: Point
    r1: Point
    r2: Point
    d: Point

    def distance(self, a: str, b: str) -> float:
        pa, pb = getattr(self, a), getattr(self, b)
        return math.hypot(pa[0] - pb[0], pa[1] - pb[1])

    def scaled(self, factor: float) -> "NodeLayout":
        def mul(p):
            return (p[0] * factor, p[1] * factor)

        return NodeLayout(mul(self.s), mul(self.r1), mul(self.r2), mul(self.d))


@dataclass(frozen=True)
class RadioParams:
    p_s_dbm: float
    n0_dbm: float
    alpha: float
    r0: float


@dataclass(frozen=True)
class EnergyParams:
    m_r1: float
    m_r2: float
    lambda1_db: float
    lambda2_db: float

    @property
    def lambda1(self) -> float:
        return harvest_rate_from_db(self.lambda1_db)

    @property
    def lambda2(self) -> float:
        return harvest_rate_from_db(self.lambda2_db)


@dataclass(frozen=True)
class DerivedRates:
    """Exponential rates of every link SNR plus the decoding threshold.

    Each rate is the reciprocal of the mean link SNR.
    """

    w_sd: float
    w_sr1: float
    w_sr2: float
    w_r1r2: float
    w_r1d: float
    w_r2d: float
    gamma_th: float

    def as_tuple(self):
        """Link rates in the simulator draw order SD, SR1, SR2, R1R2, R1D, R2D."""
        return (self.w_sd, self.w_sr1, self.w_sr2, self.w_r1r2, self.w_r1d, self.w_r2d)


@dataclass(frozen=True)
class Scenario:
    layout: NodeLayout
    radio: RadioParams
    energy: EnergyParams
    bins: int = DEFAULT_BINS

    def __post_init__(self):
        validate(self)

    def with_power(self, p_s_dbm: float) -> "Scenario":
        return replace(self, radio=replace(self.radio, p_s_dbm=p_s_dbm))

    def with_bins(self, bins: int) -> "Scenario":
        return replace(self, bins=bins)


def validate(sc: Scenario) -> None:
    pts = {k: getattr(sc.layout, k) for k in _COORD_KEYS}
    for a, b in combinations(_COORD_KEYS, 2):
        if sc.layout.distance(a, b) <= 0.0:
            raise ScenarioValidationError(f"nodes {a} and {b} coincide at {pts[a]}")
    for k, p in pts.items():
        if not all(math.isfinite(v) for v in p):
            raise ScenarioValidationError(f"non-finite coordinate for {k}: {p}")
    r = sc.radio
    if not (r.r0 > 0 and math.isfinite(r.r0)):
        raise ScenarioValidationError(f"r0 must be positive, got {r.r0}")
    for name in ("p_s_dbm", "n0_dbm", "alpha"):
        if not math.isfinite(getattr(r, name)):
            raise ScenarioValidationError(f"{name} must be finite")
    e = sc.energy
    if not (e.m_r1 > 0 and e.m_r2 > 0):
        raise ScenarioValidationError("relay energy costs m_r1_mj, m_r2_mj must be positive")
    for name in ("lambda1_db", "lambda2_db"):
        if not math.isfinite(getattr(e, name)):
            raise ScenarioValidationError(f"{name} must be finite")
    if not (e.lambda1 > 0 and e.lambda2 > 0):
        raise ScenarioValidationError("harvest rates must be positive")
    if not (isinstance(sc.bins, int) and sc.bins >= 1):
        raise ScenarioValidationError(f"bins must be a positive integer, got {sc.bins!r}")


def _parse_point(key: str, raw: str, lineno: int) -> Point:
    parts = [p.strip() for p in raw.split(",")]
    if len(parts) != 2:
        raise ScenarioParseError(f"line {lineno}: {key} needs 'x, y', got {raw!r}")
    try:
        return (float(parts[0]), float(parts[1]))
    except ValueError:
        raise ScenarioParseError(f"line {lineno}: bad coordinate for {key}: {raw!r}") from None


def parse_scenario_text(text: str) -> Dict[str, object]:
    """Parse scenario text into a raw key -> value mapping (no validation)."""
    values: Dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioParseError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ScenarioParseError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ScenarioParseError(f"line {lineno}: duplicate key {key!r}")
        if not raw:
            raise ScenarioParseError(f"line {lineno}: empty value for {key!r}")
        if key in _COORD_KEYS:
            values[key] = _parse_point(key, raw, lineno)
        elif key in _INT_KEYS:
            try:
                values[key] = int(raw)
            except ValueError:
                raise ScenarioParseError(f"line {lineno}: {key} must be an integer") from None
        else:
            try:
                values[key] = float(raw)
            except ValueError:
                raise ScenarioParseError(f"line {lineno}: {key} must be a number") from None
    return values


def load_scenario(text: str) -> Scenario:
    """Build a validated :class:`Scenario` from scenario file contents."""
    v = parse_scenario_text(text)
    missing = [k for k in _COORD_KEYS + _FLOAT_KEYS if k not in v]
    if missing:
        raise ScenarioParseError(f"missing keys: {', '.join(missing)}")
    return Scenario(
        layout=NodeLayout(v["s"], v["r1"], v["r2"], v["d"]),
        radio=RadioParams(
            p_s_dbm=v["p_s_dbm"], n0_dbm=v["n0_dbm"], alpha=v["alpha"], r0=v["r0"]
        ),
        energy=EnergyParams(
            m_r1=v["m_r1_mj"],
            m_r2=v["m_r2_mj"],
            lambda1_db=v["lambda1_db"],
            lambda2_db=v["lambda2_db"],
        ),
        bins=v.get("bins", DEFAULT_BINS),
    )


def load_scenario_file(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return load_scenario(fh.read())


def snr_threshold(r0: float) -> float:
    return 2.0**r0 - 1.0


def derive_rates(sc: Scenario) -> DerivedRates:
    """Per-link exponential SNR rates ``W = N0 / (P_tx * d**alpha)``.

    The relay transmit power equals its per-slot energy cost (unit slots), so
    ``m_r1_mj`` / ``m_r2_mj`` are used directly as milliwatts.
    """
    lay, rad, en = sc.layout, sc.radio, sc.energy
    n0 = dbm_to_mw(rad.n0_dbm)
    p_s = dbm_to_mw(rad.p_s_dbm)

    def rate(a: str, b: str, p_tx: float) -> float:
        return n0 / (p_tx * lay.distance(a, b) ** rad.alpha)

    return DerivedRates(
        w_sd=rate("s", "d", p_s),
        w_sr1=rate("s", "r1", p_s),
        w_sr2=rate("s", "r2", p_s),
        w_r1r2=rate("r1", "r2", en.m_r1),
        w_r1d=rate("r1", "d", en.m_r1),
        w_r2d=rate("r2", "d", en.m_r2),
        gamma_th=snr_threshold(rad.r0),
    )


def reference_scenario(p_s_dbm: float = 12.0, bins: int = DEFAULT_BINS) -> Scenario:
    """The outage/throughput sweep setup: M = 12/10 mJ, lambda = -11/-12 dB."""
    return Scenario(
        layout=NodeLayout((0.0, 0.0), (30.0, 20.0), (60.0, -20.0), (100.0, 0.0)),
        radio=RadioParams(p_s_dbm=p_s_dbm, n0_dbm=-50.0, alpha=-3.0, r0=2.0),
        energy=EnergyParams(m_r1=12.0, m_r2=10.0, lambda1_db=-11.0, lambda2_db=-12.0),
        bins=bins,
    )


def buffer_study_scenario(p_s_dbm: float = 12.0, bins: int = DEFAULT_BINS) -> Scenario:
    """The limiting buffer PDF setup: M = 10/8 mJ, lambda = -15/-12 dB."""
    return Scenario(
        layout=NodeLayout((0.0, 0.0), (30.0, 20.0), (60.0, -20.0), (100.0, 0.0)),
        radio=RadioParams(p_s_dbm=p_s_dbm, n0_dbm=-50.0, alpha=-3.0, r0=2.0),
        energy=EnergyParams(m_r1=10.0, m_r2=8.0, lambda1_db=-15.0, lambda2_db=-12.0),
        bins=bins,
    )
