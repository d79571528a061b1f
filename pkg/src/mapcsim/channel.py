"""Propagation and PHY abstraction: TGax enterprise path loss, frozen
log-normal shadowing, SINR under arbitrary interferer sets, and MCS/rate
selection against a PER-threshold table.

Path loss in dB at distance d (>= 1 m) through `walls` room boundaries:

    PL(d) = 40.05 + 20 log10(min(d, B_p) f_c / 2.4)
            + [d > B_p] 35 log10(d / B_p) + 7 walls + shadow_db

Linear link gain is h = 10^(-PL/10). All transmissions use fixed power
P_max, so the SINR at receiver i served by transmitter j with concurrent
interferers K is  P h_ij / (W + sum_k P h_ik).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .topology import Deployment


@dataclass
class ChannelParams:
    breakpoint_m: float = 10.0  # B_p
    bandwidth_mhz: float = 80.0
    carrier_ghz: float = 6.0  # f_c
    shadowing_sigma_db: float = 5.0
    noise_w: float = 3.2e-13
    tx_power_w: float = 0.2  # P_max = 200 mW
    cca_dbm: float = -82.0

    def validate(self) -> None:
        if self.breakpoint_m < 1.0:
            raise ValueError("breakpoint distance must be >= 1 m")
        for name in ("bandwidth_mhz", "carrier_ghz", "noise_w", "tx_power_w"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class PhyParams:
    subcarriers: int = 980  # data subcarriers at 80 MHz
    spatial_streams: int = 2
    symbol_time_s: float = 12.8e-6
    guard_time_s: float = 0.8e-6
    frame_bits: int = 12000
    # Step PER model: a link operates exactly at the selection bound of its
    # chosen MCS, so every transmitted frame succeeds with 1 - operating_per.
    operating_per: float = 1e-2

    def validate(self) -> None:
        if min(self.subcarriers, self.spatial_streams, self.frame_bits) <= 0:
            raise ValueError("PHY counts must be positive")
        if self.symbol_time_s <= 0 or self.guard_time_s <= 0:
            raise ValueError("PHY durations must be positive")
        if not 0.0 <= self.operating_per < 1.0:
            raise ValueError("operating_per must be in [0, 1)")


# 802.11be constellation/coding pairs, MCS 0..13.
_MCS_BITS_CODING = [
    (1, (1, 2)), (2, (1, 2)), (2, (3, 4)), (4, (1, 2)), (4, (3, 4)),
    (6, (2, 3)), (6, (3, 4)), (6, (5, 6)), (8, (3, 4)), (8, (5, 6)),
    (10, (3, 4)), (10, (5, 6)), (12, (3, 4)), (12, (5, 6)),
]

# Default operating thresholds (dB): minimum-sensitivity-derived ladder,
# anchored at 0 dB for MCS 0 with the standard ~3 dB sensitivity steps.
# Replaceable calibration data, not a claim of measured PER curves: load a
# custom table via McsTable.from_csv to substitute link-level results.
_DEFAULT_MIN_SNR_DB = [0.0, 3.0, 5.0, 8.0, 12.0, 16.0, 17.0, 18.0,
                       23.0, 25.0, 28.0, 30.0, 33.0, 35.0]


@dataclass
class McsTable:
    """Ordered MCS rows: (bits per symbol, coding rate, min operating SINR).

    A row's min_snr_db is the lowest SINR at which the step PER model holds
    PER < 1e-2; both the threshold column and the data rate must increase
    strictly with the index.
    """

    bits_per_symbol: np.ndarray  # (n,) int
    coding_rate: np.ndarray  # (n,) float
    min_snr_db: np.ndarray  # (n,) float

    def __len__(self) -> int:
        return len(self.min_snr_db)

    def validate(self) -> None:
        if not np.all(np.diff(self.min_snr_db) > 0):
            raise ValueError("min_snr_db must be strictly increasing")
        rates = self.bits_per_symbol * self.coding_rate
        if not np.all(np.diff(rates) > 0):
            raise ValueError("data rate must be strictly increasing with MCS index")

    @classmethod
    def default(cls) -> "McsTable":
        table = cls(
            bits_per_symbol=np.array([b for b, _ in _MCS_BITS_CODING], dtype=np.int64),
            coding_rate=np.array([n / d for _, (n, d) in _MCS_BITS_CODING], dtype=float),
            min_snr_db=np.array(_DEFAULT_MIN_SNR_DB, dtype=float),
        )
        table.validate()
        return table

    @classmethod
    def from_csv(cls, path: str | Path) -> "McsTable":
        """Load `index,n_bps,coding_rate_num,coding_rate_den,min_snr_db` rows.

        Header required; indices must ascend from 0 without gaps.
        """
        rows = []
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            required = {"index", "n_bps", "coding_rate_num", "coding_rate_den", "min_snr_db"}
            if reader.fieldnames is None or not required.issubset(reader.fieldnames):
                raise ValueError(f"MCS csv must have header columns {sorted(required)}")
            for rec in reader:
                rows.append(
                    (
                        int(rec["index"]),
                        int(rec["n_bps"]),
                        int(rec["coding_rate_num"]),
                        int(rec["coding_rate_den"]),
                        float(rec["min_snr_db"]),
                    )
                )
        rows.sort()
        if not rows or [r[0] for r in rows] != list(range(len(rows))):
            raise ValueError("MCS csv indices must be 0..n-1 without gaps")
        table = cls(
            bits_per_symbol=np.array([r[1] for r in rows], dtype=np.int64),
            coding_rate=np.array([r[2] / r[3] for r in rows], dtype=float),
            min_snr_db=np.array([r[4] for r in rows], dtype=float),
        )
        table.validate()
        return table

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["index", "n_bps", "coding_rate_num", "coding_rate_den", "min_snr_db"])
            for i in range(len(self)):
                num, den = _MCS_BITS_CODING[i][1] if i < len(_MCS_BITS_CODING) else (0, 1)
                frac = self.coding_rate[i]
                if not math.isclose(num / den, frac):
                    num, den = frac.as_integer_ratio()
                writer.writerow([i, int(self.bits_per_symbol[i]), num, den, self.min_snr_db[i]])


def path_loss_db(d: float, walls: int, shadow_db: float, p: ChannelParams) -> float:
    """TGax enterprise path loss in dB; rejects d < 1 m."""
    if d < 1.0:
        raise ValueError(f"path loss undefined below 1 m (got {d})")
    eff = min(d, p.breakpoint_m)
    pl = 40.05 + 20.0 * math.log10(eff * p.carrier_ghz / 2.4) + 7.0 * walls + shadow_db
    if d > p.breakpoint_m:
        pl += 35.0 * math.log10(d / p.breakpoint_m)
    return pl


@dataclass
class ChannelRealization:
    """Frozen per-episode linear gains from every AP to every STA.

    gain[i, j] is the STA-i <- AP-j link gain; shadowing is drawn once per
    unordered node pair so reciprocal links share the same realization.
    """

    gain: np.ndarray  # (N, J)

    def serving_gains(self, sta_to_ap: np.ndarray) -> np.ndarray:
        return self.gain[np.arange(len(sta_to_ap)), sta_to_ap]


def realize_channel(dep: Deployment, p: ChannelParams, seed) -> ChannelRealization:
    """Draw per-link shadowing (normal in dB, std sigma) and freeze gains."""
    rng = np.random.default_rng(seed)
    j_count, n_count = dep.ap_count, dep.sta_count
    # One draw per unordered (AP, STA) pair; with the AP-then-STA node
    # indexing every such pair is unique, so a flat (N, J) draw suffices.
    shadow = rng.normal(0.0, p.shadowing_sigma_db, size=(n_count, j_count))
    gain = np.empty((n_count, j_count), dtype=float)
    for i in range(n_count):
        sta_node = j_count + i
        for j in range(j_count):
            d = max(dep.distance(sta_node, j), 1.0)
            walls = dep.walls_between(sta_node, j)
            gain[i, j] = 10.0 ** (-path_loss_db(d, walls, shadow[i, j], p) / 10.0)
    return ChannelRealization(gain=gain)


def sinr(
    receiver: int,
    transmitter: int,
    interferers: set[int] | frozenset[int],
    ch: ChannelRealization,
    p: ChannelParams,
) -> float:
    """Linear SINR at STA `receiver` from AP `transmitter` against the
    interfering AP set; all transmitters use P_max."""
    if transmitter in interferers:
        raise ValueError("serving AP cannot be its own interferer")
    signal = p.tx_power_w * ch.gain[receiver, transmitter]
    interference = sum(p.tx_power_w * ch.gain[receiver, k] for k in interferers)
    return signal / (p.noise_w + interference)


def sinr_db(receiver, transmitter, interferers, ch, p) -> float:
    return 10.0 * math.log10(sinr(receiver, transmitter, interferers, ch, p))


def select_mcs(sinr_value_db: float, t: McsTable) -> int | None:
    """Highest index whose operating threshold is met; None if even MCS 0
    fails (an unusable link, a legal outcome)."""
    idx = int(np.searchsorted(t.min_snr_db, sinr_value_db, side="right")) - 1
    return idx if idx >= 0 else None


def data_rate(mcs: int, t: McsTable, phy: PhyParams) -> float:
    """PHY data rate in bits/s for one MCS row."""
    if not 0 <= mcs < len(t):
        raise IndexError(f"MCS index {mcs} out of range")
    bits_per_symbol = t.bits_per_symbol[mcs] * t.coding_rate[mcs] * phy.subcarriers * phy.spatial_streams
    return float(bits_per_symbol / (phy.symbol_time_s + phy.guard_time_s))
