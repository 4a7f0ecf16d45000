"""Monte-Carlo OFDM link-layer simulator.

Reproduces the single-user downlink chain: random payload bits -> Gray QAM
mapping per the MCS modulation -> PRB subcarrier grid -> orthonormal IFFT +
cyclic prefix -> flat unit-gain channel with AWGN -> FFT -> hard-decision
demapping -> bit comparison -> throughput.

Forward error correction is abstracted to rate scaling: information throughput
is channel-correct bits times the MCS code rate. At the operating SNRs of the
allocation environment (received power tens of dB above the noise floor) a
real decoder would be error-free, so the abstraction does not change any
downstream number; ``fec_model`` is the seam for plugging in a real decoder.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from slicebench import kernels, phy
from slicebench.errors import DomainError

# fec_model(correct_bits, entry) -> information bits credited to the run.
FecModel = Callable[[int, phy.McsEntry], float]


def rate_scaling_fec(correct_bits: int, entry: phy.McsEntry) -> float:
    """Default FEC abstraction: scale channel-correct bits by the code rate."""
    return correct_bits * entry.code_rate


@dataclass(frozen=True)
class LinkRunSpec:
    """One simulator query: allocation, MCS, channel, and run size."""

    prbs: int
    mcs: int
    prx_db: float
    noise_db: float = -80.0
    n_ofdm_symbols: int = 100
    fft_size: int = 2048
    cp_len: int = 144
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.prbs:
            raise DomainError("prbs must be non-negative")
        if self.n_ofdm_symbols < 1:
            raise DomainError("n_ofdm_symbols must be at least 1")
        if self.fft_size < self.prbs * 12:
            raise DomainError(
                f"fft_size {self.fft_size} too small for {self.prbs} PRBs "
                f"({self.prbs * 12} subcarriers)"
            )
        if self.fft_size & (self.fft_size - 1):
            raise DomainError("fft_size must be a power of two")
        if self.cp_len < 0:
            raise DomainError("cp_len must be non-negative")


@dataclass(frozen=True)
class LinkRunResult:
    tx_bits: int
    correct_bits: int
    bit_error_rate: float
    throughput_bps: float


def simulate_link(
    spec: LinkRunSpec,
    cfg: phy.RadioConfig | None = None,
    fec_model: FecModel = rate_scaling_fec,
    grid_dump_path: str | None = None,
) -> LinkRunResult:
    """Run the OFDM chain for one spec; deterministic for a fixed seed.

    An empty allocation returns a zero-throughput result rather than raising.
    ``grid_dump_path`` optionally writes the transmit resource grid as CSV
    (row = subcarrier, one re/im column pair per OFDM symbol).
    """
    cfg = cfg or phy.RadioConfig()
    if spec.prbs > cfg.prb_total:
        raise DomainError(f"prbs must not exceed {cfg.prb_total}")
    entry = phy.mcs_params(spec.mcs)
    if spec.prbs == 0:
        return LinkRunResult(0, 0, 0.0, 0.0)

    n_sc = spec.prbs * cfg.sc_per_prb
    qm = entry.qm
    n_sym = spec.n_ofdm_symbols
    rng = np.random.default_rng(spec.seed)

    bits = rng.integers(0, 2, size=n_sc * qm * n_sym, dtype=np.uint8)
    symbols = kernels.map_bits(bits, qm).reshape(n_sym, n_sc)

    # Occupied band centred in the FFT grid; flat channel makes the offset
    # immaterial, kept for chain fidelity.
    grid = np.zeros((n_sym, spec.fft_size), dtype=np.complex128)
    start = (spec.fft_size - n_sc) // 2
    grid[:, start : start + n_sc] = symbols
    if grid_dump_path is not None:
        _dump_grid(grid_dump_path, grid[:, start : start + n_sc])

    tx_time = np.fft.ifft(grid, axis=1, norm="ortho")
    if spec.cp_len:
        tx_time = np.concatenate([tx_time[:, -spec.cp_len :], tx_time], axis=1)

    amplitude = 10.0 ** (spec.prx_db / 20.0)
    noise_power = 10.0 ** (spec.noise_db / 10.0)
    noise_scale = math.sqrt(noise_power / 2.0)
    noise = noise_scale * (
        rng.standard_normal(tx_time.shape) + 1j * rng.standard_normal(tx_time.shape)
    )
    rx_time = amplitude * tx_time + noise

    rx_freq = np.fft.fft(rx_time[:, spec.cp_len :], axis=1, norm="ortho")
    rx_symbols = rx_freq[:, start : start + n_sc] / amplitude

    rx_bits = kernels.demap_hard(rx_symbols.reshape(-1), qm)
    errors = kernels.count_bit_errors(bits, rx_bits)
    tx_bits = int(bits.size)
    correct = tx_bits - errors

    info_bits = fec_model(correct, entry)
    airtime_s = n_sym * cfg.symbol_duration_s
    return LinkRunResult(
        tx_bits=tx_bits,
        correct_bits=correct,
        bit_error_rate=errors / tx_bits,
        throughput_bps=info_bits / airtime_s,
    )


def _dump_grid(path: str, occupied: np.ndarray) -> None:
    n_sym, n_sc = occupied.shape
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["subcarrier"]
        for s in range(n_sym):
            header += [f"sym{s}_re", f"sym{s}_im"]
        writer.writerow(header)
        for k in range(n_sc):
            row: list[object] = [k]
            for s in range(n_sym):
                row += [occupied[s, k].real, occupied[s, k].imag]
            writer.writerow(row)


def _qfunc(x: float) -> float:
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def ber_analytic(modulation: phy.Modulation, ebno_db: float) -> float:
    """Gray-coded AWGN bit-error-rate approximation for one modulation.

    Square M-QAM first-term approximation
    ``(4/log2 M)(1 - 1/sqrt(M)) Q(sqrt(3 log2(M)/(M-1) * Eb/N0))``,
    which reduces to ``Q(sqrt(2 Eb/N0))`` for QPSK.
    """
    ebno = 10.0 ** (ebno_db / 10.0)
    m = 2**modulation.bits_per_symbol
    log2m = modulation.bits_per_symbol
    coef = (4.0 / log2m) * (1.0 - 1.0 / math.sqrt(m))
    return coef * _qfunc(math.sqrt(3.0 * log2m / (m - 1.0) * ebno))


def prx_for_ebno_db(ebno_db: float, qm: int, noise_db: float = -80.0) -> float:
    """Received power that yields the requested per-bit SNR.

    Per-subcarrier symbol SNR is 10**((prx-noise)/10) and each uncoded symbol
    carries qm bits, so Es/N0 = qm * Eb/N0.
    """
    return noise_db + ebno_db + 10.0 * math.log10(qm)
