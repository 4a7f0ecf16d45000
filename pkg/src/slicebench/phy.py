"""Static NR radio-layer knowledge.

MCS table 1 lookups (downlink 64-QAM table), TDD duty-cycle accounting for the
default 106-PRB / 30 kHz grid, and the free-space link-budget model that maps
UE distance to an effective received power.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import NamedTuple

import numpy as np

from slicebench.errors import ConfigError, DomainError

# Only this index window is supported by the link adaptation model.
MCS_MIN = 6
MCS_MAX = 28

FSPL_CONST_DB = 32.44  # free-space loss constant for d in km, f in MHz


class Modulation(enum.Enum):
    """Modulation order; enum value is bits per symbol (Q_m)."""

    QPSK = 2
    QAM16 = 4
    QAM64 = 6

    @property
    def bits_per_symbol(self) -> int:
        return self.value


@dataclass(frozen=True)
class McsEntry:
    """One MCS table row: modulation order and target code rate."""

    index: int
    modulation: Modulation
    qm: int
    code_rate_x1024: int

    @property
    def code_rate(self) -> float:
        return self.code_rate_x1024 / 1024.0


@lru_cache(maxsize=1)
def _full_table() -> tuple[McsEntry, ...]:
    """Load the bundled 29-row MCS table (indices 0-28)."""
    text = resources.files("slicebench.data").joinpath("mcs_table_1.csv").read_text()
    rows = list(csv.DictReader(text.splitlines()))
    if len(rows) != 29:
        raise ConfigError(f"bundled MCS table must have 29 rows, found {len(rows)}")
    entries = []
    for row in rows:
        entries.append(
            McsEntry(
                index=int(row["index"]),
                modulation=Modulation[row["modulation"]],
                qm=int(row["qm"]),
                code_rate_x1024=int(row["code_rate_x1024"]),
            )
        )
    entries.sort(key=lambda e: e.index)
    return tuple(entries)


def mcs_params(index: int) -> McsEntry:
    """Return the (qm, code_rate) table row for a supported MCS index."""
    if not MCS_MIN <= index <= MCS_MAX:
        raise DomainError(
            f"MCS index {index} unsupported; valid range is [{MCS_MIN}, {MCS_MAX}]"
        )
    return _full_table()[index]


@lru_cache(maxsize=1)
def mcs_arrays() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectors (indices, qm, code_rate) over the supported window 6..28."""
    entries = _full_table()[MCS_MIN : MCS_MAX + 1]
    idx = np.array([e.index for e in entries], dtype=np.int64)
    qm = np.array([e.qm for e in entries], dtype=np.float64)
    rate = np.array([e.code_rate for e in entries], dtype=np.float64)
    return idx, qm, rate


def tdd_duty_fraction(
    dl_slots: int,
    ul_slots: int,
    mixed_dl_symbols: int = 0,
    mixed_ul_symbols: int = 0,
    symbols_per_slot: int = 14,
) -> float:
    """Fraction of symbols carrying downlink over one TDD period.

    A mixed slot exists whenever it contributes any symbols; its DL share
    counts toward the numerator.
    """
    if min(dl_slots, ul_slots, mixed_dl_symbols, mixed_ul_symbols) < 0:
        raise DomainError("TDD pattern counts must be non-negative")
    if mixed_dl_symbols + mixed_ul_symbols > symbols_per_slot:
        raise DomainError("mixed slot cannot carry more symbols than a slot holds")
    mixed_slot = 1 if (mixed_dl_symbols + mixed_ul_symbols) > 0 else 0
    total_symbols = (dl_slots + ul_slots + mixed_slot) * symbols_per_slot
    if total_symbols == 0:
        raise DomainError("TDD pattern is empty")
    return (dl_slots * symbols_per_slot + mixed_dl_symbols) / total_symbols


# Default pattern: 7 DL slots + 2 UL slots + one mixed slot with 6 DL symbols,
# i.e. (7*14 + 6) / (10*14) = 104/140.
DEFAULT_DL_DUTY = tdd_duty_fraction(7, 2, mixed_dl_symbols=6, mixed_ul_symbols=4)


@dataclass(frozen=True)
class RadioConfig:
    """Radio grid, TDD, overhead, and link-budget constants."""

    prb_total: int = 106
    sc_per_prb: int = 12
    symbols_per_slot: int = 14
    slots_per_sec: int = 2000
    dl_duty: float = DEFAULT_DL_DUTY
    overhead: float = 0.14
    n_layers: int = 1
    noise_floor_db: float = -80.0
    carrier_mhz: float = 3600.0
    gain_term_db: float = 83.84
    prx_bounds_db: tuple[float, float] = (-23.0, -7.0)

    def __post_init__(self) -> None:
        if self.prb_total <= 0:
            raise ConfigError("prb_total must be positive")
        if not 0.0 < self.dl_duty <= 1.0:
            raise ConfigError("dl_duty must lie in (0, 1]")
        if not 0.0 <= self.overhead < 1.0:
            raise ConfigError("overhead must lie in [0, 1)")
        if self.prx_bounds_db[0] >= self.prx_bounds_db[1]:
            raise ConfigError("prx_bounds_db lower bound must be below upper bound")

    @property
    def symbol_duration_s(self) -> float:
        return 1.0 / (self.slots_per_sec * self.symbols_per_slot)


def duty_cycle(cfg: RadioConfig) -> float:
    """Downlink duty-cycle fraction of the configured TDD pattern."""
    return cfg.dl_duty


@dataclass(frozen=True)
class LinkBudgetQuery:
    """Distance and combined Ptx+Gtx+Grx term for one received-power lookup."""

    distance_km: float
    ptx_gains_db: float | None = None  # None -> use RadioConfig.gain_term_db


class ReceivedPower(NamedTuple):
    raw_db: float
    clipped_db: float


def received_power(q: LinkBudgetQuery, cfg: RadioConfig) -> ReceivedPower:
    """Effective received power: gain term minus free-space path loss, clipped.

    The clipped value is a relative channel-quality scalar; no absolute dBm
    calibration is implied.
    """
    if q.distance_km <= 0:
        raise DomainError(f"distance must be positive, got {q.distance_km} km")
    gains = cfg.gain_term_db if q.ptx_gains_db is None else q.ptx_gains_db
    fspl = (
        20.0 * math.log10(q.distance_km)
        + 20.0 * math.log10(cfg.carrier_mhz)
        + FSPL_CONST_DB
    )
    raw = gains - fspl
    lo, hi = cfg.prx_bounds_db
    return ReceivedPower(raw_db=raw, clipped_db=min(max(raw, lo), hi))


def distance_for_prx(raw_prx_db: float, cfg: RadioConfig) -> float:
    """Invert the link budget: distance (km) whose unclipped power is raw_prx_db."""
    exponent = (
        cfg.gain_term_db
        - raw_prx_db
        - 20.0 * math.log10(cfg.carrier_mhz)
        - FSPL_CONST_DB
    ) / 20.0
    return 10.0**exponent
