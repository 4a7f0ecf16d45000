"""Throughput estimators that drive training rewards.

Three sources: a distribution-aware theoretical estimator (link-adaptation
profile times the per-MCS rate formula), a trace-based practical estimator
(full-allocation measurements scaled proportionally by PRBs), and the hybrid
ensemble mixing the two. Plus the MCS-selection profile model and CSV loaders
for profiles, traces, and per-MCS BLER overrides.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

import numpy as np

from slicebench import phy
from slicebench.errors import ConfigError, DomainError

log = logging.getLogger(__name__)

N_MCS = phy.MCS_MAX - phy.MCS_MIN + 1  # 23 supported indices

# Conventional NR link-adaptation BLER target; used for every MCS unless a
# per-MCS override table is supplied.
DEFAULT_BLER = 0.1


def default_bler() -> np.ndarray:
    """BLER vector over MCS 6..28."""
    return np.full(N_MCS, DEFAULT_BLER)


def load_bler_csv(path: str) -> np.ndarray:
    """Per-MCS BLER override, CSV header ``mcs,bler``; unlisted MCS keep the default."""
    bler = default_bler()
    with open(path, newline="") as fh:
        reader = csv.DictReader(_strip_comments(fh))
        if reader.fieldnames != ["mcs", "bler"]:
            raise ConfigError(f"BLER CSV must have header 'mcs,bler', got {reader.fieldnames}")
        for row in reader:
            mcs = int(row["mcs"])
            value = float(row["bler"])
            if not phy.MCS_MIN <= mcs <= phy.MCS_MAX:
                raise ConfigError(f"BLER row for unsupported MCS {mcs}")
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"BLER for MCS {mcs} out of [0,1]: {value}")
            bler[mcs - phy.MCS_MIN] = value
    return bler


def _strip_comments(lines) -> list[str]:
    return [ln for ln in lines if not ln.lstrip().startswith("#")]


def t_mcs(
    prbs: int,
    mcs: int,
    bler: float,
    cfg: phy.RadioConfig | None = None,
    grid_scaled: bool = False,
) -> float:
    """Per-MCS throughput (Mbps) of a PRB allocation, literal rate formula.

    (prbs/prb_total) * N_sc * N_symb * N_slots * Q_m * R_m * N_layers
    * dl_duty * (1 - overhead) * (1 - BLER), divided by 1e6.

    ``grid_scaled`` additionally multiplies by prb_total (full-grid subcarrier
    count instead of a single PRB's); off by default and excluded from the
    acceptance numbers.
    """
    cfg = cfg or phy.RadioConfig()
    if not 0 <= prbs <= cfg.prb_total:
        raise DomainError(f"prbs must lie in [0, {cfg.prb_total}], got {prbs}")
    if not 0.0 <= bler <= 1.0:
        raise DomainError(f"bler must lie in [0, 1], got {bler}")
    entry = phy.mcs_params(mcs)
    bps = (
        (prbs / cfg.prb_total)
        * cfg.sc_per_prb
        * cfg.symbols_per_slot
        * cfg.slots_per_sec
        * entry.qm
        * entry.code_rate
        * cfg.n_layers
        * cfg.dl_duty
        * (1.0 - cfg.overhead)
        * (1.0 - bler)
    )
    if grid_scaled:
        bps *= cfg.prb_total
    return bps / 1e6


@dataclass(frozen=True)
class McsProfile:
    """Link-adaptation distribution P(mcs | prx) over a received-power grid."""

    prx_grid: np.ndarray  # sorted, dB
    dist: np.ndarray  # shape (len(prx_grid), 23), rows on the simplex

    def __post_init__(self) -> None:
        grid = np.asarray(self.prx_grid, dtype=np.float64)
        dist = np.asarray(self.dist, dtype=np.float64)
        object.__setattr__(self, "prx_grid", grid)
        object.__setattr__(self, "dist", dist)
        if grid.size == 0:
            raise ConfigError("MCS profile is empty")
        if np.any(np.diff(grid) <= 0):
            raise ConfigError("profile prx grid must be strictly increasing")
        if dist.shape != (grid.size, N_MCS):
            raise ConfigError(
                f"profile distribution must have shape ({grid.size}, {N_MCS})"
            )
        if np.any(dist < 0):
            raise ConfigError("profile probabilities must be non-negative")
        sums = dist.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > 1e-9):
            raise ConfigError("each profile row must sum to 1 within 1e-9")

    def row_for(self, prx_db: float) -> np.ndarray:
        """Distribution at the nearest grid point (ties to the lower point)."""
        k = int(np.argmin(np.abs(self.prx_grid - prx_db)))
        return self.dist[k]

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["prx_db", "mcs", "probability"])
            for i, prx in enumerate(self.prx_grid):
                for j in range(N_MCS):
                    writer.writerow([float(prx), phy.MCS_MIN + j, repr(float(self.dist[i, j]))])

    @classmethod
    def from_csv(cls, path: str) -> "McsProfile":
        rows: dict[float, np.ndarray] = {}
        with open(path, newline="") as fh:
            reader = csv.DictReader(_strip_comments(fh))
            if reader.fieldnames != ["prx_db", "mcs", "probability"]:
                raise ConfigError(
                    f"profile CSV must have header 'prx_db,mcs,probability', got {reader.fieldnames}"
                )
            for row in reader:
                prx = float(row["prx_db"])
                mcs = int(row["mcs"])
                if not phy.MCS_MIN <= mcs <= phy.MCS_MAX:
                    raise ConfigError(f"profile row for unsupported MCS {mcs}")
                vec = rows.setdefault(prx, np.zeros(N_MCS))
                vec[mcs - phy.MCS_MIN] = float(row["probability"])
        if not rows:
            raise ConfigError(f"profile CSV {path} has no data rows")
        grid = np.array(sorted(rows))
        dist = np.stack([rows[p] for p in grid])
        return cls(prx_grid=grid, dist=dist)


@dataclass(frozen=True)
class ThroughputTrace:
    """Measured (or synthesized) full-allocation throughput vs received power."""

    prx_grid: np.ndarray  # sorted, dB
    mbps_at_full: np.ndarray  # Mbps at prb_total PRBs

    def __post_init__(self) -> None:
        grid = np.asarray(self.prx_grid, dtype=np.float64)
        mbps = np.asarray(self.mbps_at_full, dtype=np.float64)
        object.__setattr__(self, "prx_grid", grid)
        object.__setattr__(self, "mbps_at_full", mbps)
        if grid.size == 0:
            raise ConfigError("throughput trace is empty")
        if np.any(np.diff(grid) <= 0):
            raise ConfigError("trace prx grid must be strictly increasing")
        if mbps.shape != grid.shape:
            raise ConfigError("trace throughput column must match the grid length")
        if np.any(mbps < 0):
            raise ConfigError("trace throughput must be non-negative")
        # Real measurements can dip; keep raw values but flag the anomaly.
        if np.any(np.diff(mbps) < 0):
            log.warning(
                "throughput trace is not monotone in received power; "
                "interpolating raw values"
            )

    def interpolate(self, prx_db: float) -> float:
        """Linear interpolation, clamped to the grid edges."""
        return float(np.interp(prx_db, self.prx_grid, self.mbps_at_full))

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["prx_db", "mbps_full_allocation"])
            for prx, mbps in zip(self.prx_grid, self.mbps_at_full):
                writer.writerow([float(prx), repr(float(mbps))])

    @classmethod
    def from_csv(cls, path: str) -> "ThroughputTrace":
        grid, mbps = [], []
        with open(path, newline="") as fh:
            reader = csv.DictReader(_strip_comments(fh))
            if reader.fieldnames != ["prx_db", "mbps_full_allocation"]:
                raise ConfigError(
                    "trace CSV must have header 'prx_db,mbps_full_allocation', "
                    f"got {reader.fieldnames}"
                )
            for row in reader:
                grid.append(float(row["prx_db"]))
                mbps.append(float(row["mbps_full_allocation"]))
        if not grid:
            raise ConfigError(f"trace CSV {path} has no data rows")
        order = np.argsort(grid)
        return cls(
            prx_grid=np.asarray(grid)[order], mbps_at_full=np.asarray(mbps)[order]
        )


@dataclass(frozen=True)
class HybridWeight:
    """Ensemble weight: lam on the practical source, 1-lam on the theoretical."""

    lam: float = 0.5

    def __post_init__(self) -> None:
        if not 0.0 <= self.lam <= 1.0:
            raise ConfigError(f"hybrid weight must lie in [0, 1], got {self.lam}")


def per_mcs_throughputs(
    prbs: int,
    cfg: phy.RadioConfig | None = None,
    bler: np.ndarray | None = None,
    grid_scaled: bool = False,
) -> np.ndarray:
    """Vector of t_mcs over the supported MCS window (Mbps)."""
    cfg = cfg or phy.RadioConfig()
    bler = default_bler() if bler is None else bler
    if not 0 <= prbs <= cfg.prb_total:
        raise DomainError(f"prbs must lie in [0, {cfg.prb_total}], got {prbs}")
    _, qm, rate = phy.mcs_arrays()
    prefactor = (
        (prbs / cfg.prb_total)
        * cfg.sc_per_prb
        * cfg.symbols_per_slot
        * cfg.slots_per_sec
        * cfg.n_layers
        * cfg.dl_duty
        * (1.0 - cfg.overhead)
    )
    if grid_scaled:
        prefactor *= cfg.prb_total
    return prefactor * qm * rate * (1.0 - bler) / 1e6


def theoretical_throughput(
    prx_db: float,
    prbs: int,
    profile: McsProfile,
    cfg: phy.RadioConfig | None = None,
    bler: np.ndarray | None = None,
    grid_scaled: bool = False,
) -> float:
    """Profile-weighted sum of per-MCS throughputs (Mbps)."""
    weights = profile.row_for(prx_db)
    return float(weights @ per_mcs_throughputs(prbs, cfg, bler, grid_scaled))


def practical_throughput(
    prx_db: float, prbs: int, trace: ThroughputTrace, prb_total: int = 106
) -> float:
    """Full-allocation trace value at prx, scaled proportionally by PRBs."""
    if not 0 <= prbs <= prb_total:
        raise DomainError(f"prbs must lie in [0, {prb_total}], got {prbs}")
    return trace.interpolate(prx_db) * (prbs / prb_total)


def hybrid_throughput(
    prx_db: float,
    prbs: int,
    trace: ThroughputTrace,
    profile: McsProfile,
    w: HybridWeight | float,
    cfg: phy.RadioConfig | None = None,
    bler: np.ndarray | None = None,
    grid_scaled: bool = False,
) -> float:
    """lam * practical + (1 - lam) * theoretical (Mbps)."""
    if not isinstance(w, HybridWeight):
        w = HybridWeight(float(w))
    cfg = cfg or phy.RadioConfig()
    practical = practical_throughput(prx_db, prbs, trace, cfg.prb_total)
    theoretical = theoretical_throughput(prx_db, prbs, profile, cfg, bler, grid_scaled)
    return w.lam * practical + (1.0 - w.lam) * theoretical


def default_prx_grid(cfg: phy.RadioConfig | None = None, step_db: float = 1.0) -> np.ndarray:
    """Received-power grid spanning the configured bounds (default 1 dB spacing)."""
    cfg = cfg or phy.RadioConfig()
    lo, hi = cfg.prx_bounds_db
    n = int(round((hi - lo) / step_db)) + 1
    return lo + step_db * np.arange(n)


def synthesize_profile(
    prx_grid: np.ndarray,
    slope: float,
    spread: float,
    base_mcs: float = float(phy.MCS_MIN),
) -> McsProfile:
    """Synthetic link-adaptation profile over a received-power grid.

    Mean MCS rises linearly from ``base_mcs`` at the grid minimum with the
    given slope (indices per dB), clamped to the supported window; each row is
    a discretized Gaussian over MCS 6..28 with standard deviation ``spread``,
    renormalized to the simplex.
    """
    if spread <= 0:
        raise DomainError(f"spread must be positive, got {spread}")
    grid = np.asarray(prx_grid, dtype=np.float64)
    if grid.size == 0:
        raise ConfigError("prx grid for profile synthesis is empty")
    indices = np.arange(phy.MCS_MIN, phy.MCS_MAX + 1, dtype=np.float64)
    rows = []
    for prx in grid:
        mu = float(np.clip(base_mcs + slope * (prx - grid[0]), phy.MCS_MIN, phy.MCS_MAX))
        z = -0.5 * ((indices - mu) / spread) ** 2
        z -= z.max()  # keeps tiny spreads finite (degenerates to a point mass)
        w = np.exp(z)
        rows.append(w / w.sum())
    return McsProfile(prx_grid=grid, dist=np.stack(rows))


# Default profile parameters: mean MCS sweeps the full 6..28 window across the
# 16 dB received-power span, with a moderate adaptation spread.
DEFAULT_PROFILE_SLOPE = (phy.MCS_MAX - phy.MCS_MIN) / 16.0
DEFAULT_PROFILE_SPREAD = 1.5

# Efficiency gap between full-allocation measurements and the theoretical
# estimator (protocol overheads not captured by the rate formula).
DEFAULT_TRACE_EFFICIENCY = 0.85


def default_profile(cfg: phy.RadioConfig | None = None) -> McsProfile:
    """Bundled synthetic link-adaptation profile on the default 17-point grid."""
    return synthesize_profile(
        default_prx_grid(cfg), DEFAULT_PROFILE_SLOPE, DEFAULT_PROFILE_SPREAD
    )


def default_trace(
    cfg: phy.RadioConfig | None = None,
    profile: McsProfile | None = None,
    efficiency: float = DEFAULT_TRACE_EFFICIENCY,
) -> ThroughputTrace:
    """Bundled full-allocation trace: efficiency-scaled theoretical throughput."""
    cfg = cfg or phy.RadioConfig()
    profile = profile or default_profile(cfg)
    mbps = np.array(
        [
            efficiency * theoretical_throughput(prx, cfg.prb_total, profile, cfg)
            for prx in profile.prx_grid
        ]
    )
    return ThroughputTrace(prx_grid=profile.prx_grid.copy(), mbps_at_full=mbps)
