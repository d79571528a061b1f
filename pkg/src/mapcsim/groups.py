"""SR group enumeration and admission.

A candidate group picks at most one STA per AP. A group is admitted when
every member keeps at least 1/|group| of its interference-free rate while
all other members transmit concurrently:

    |M| * rate_concurrent_i / rate_single_i >= 1   for every member i

(inclusive at equality: the bound is the minimum acceptable rate). Admitted
groups form the fixed, deterministically ordered action catalog for an
episode; singletons always pass, so the catalog is never empty.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np

from .channel import ChannelParams, ChannelRealization, McsTable, PhyParams, data_rate, select_mcs, sinr_db
from .topology import Deployment


class UnusableLinkError(RuntimeError):
    """A STA cannot sustain even the lowest MCS with no interference."""


@dataclass(frozen=True)
class SrGroup:
    members: tuple[tuple[int, int], ...]  # ((ap, sta), ...) sorted, distinct APs
    mcs_concurrent: tuple[int, ...]  # per member, under intra-group interference
    rate_concurrent: tuple[float, ...]  # bits/s per member
    rate_single: tuple[float, ...]  # bits/s per member, interference-free

    @property
    def stas(self) -> tuple[int, ...]:
        return tuple(sta for _, sta in self.members)

    @property
    def aps(self) -> tuple[int, ...]:
        return tuple(ap for ap, _ in self.members)

    def __len__(self) -> int:
        return len(self.members)


def single_tx_sinr_db(sta: int, ch: ChannelRealization, dep: Deployment, params: ChannelParams) -> float:
    return sinr_db(sta, int(dep.sta_to_ap[sta]), frozenset(), ch, params)


def single_tx_rate(
    sta: int,
    ch: ChannelRealization,
    dep: Deployment,
    params: ChannelParams,
    table: McsTable,
    phy: PhyParams,
) -> float:
    """Interference-free rate of a STA's serving link; raises if unusable."""
    mcs = select_mcs(single_tx_sinr_db(sta, ch, dep, params), table)
    if mcs is None:
        raise UnusableLinkError(f"STA {sta} has no usable MCS even without interference")
    return data_rate(mcs, table, phy)


def enumerate_candidates(dep: Deployment) -> list[tuple[tuple[int, int], ...]]:
    """All nonempty member sets with at most one STA per AP.

    Count is prod_j (N_j + 1) - 1; ordering is lexicographic by the sorted
    (ap, sta) member tuples so catalogs are reproducible.
    """
    per_ap: list[list[tuple[int, int] | None]] = []
    for ap in range(dep.ap_count):
        stas = np.flatnonzero(dep.sta_to_ap == ap)
        per_ap.append([None] + [(ap, int(s)) for s in stas])
    candidates = []
    for combo in itertools.product(*per_ap):
        members = tuple(m for m in combo if m is not None)
        if members:
            candidates.append(members)
    candidates.sort()
    return candidates


def admit_group(
    members: tuple[tuple[int, int], ...],
    ch: ChannelRealization,
    dep: Deployment,
    params: ChannelParams,
    table: McsTable,
    phy: PhyParams,
    single_rates: dict[int, float] | None = None,
) -> SrGroup | None:
    """Evaluate one candidate against the concurrent-rate bound.

    Each member's SINR counts every other member's AP as an interferer. A
    member with no usable MCS, or one falling below rate_single/|members|,
    rejects the whole group.
    """
    members = tuple(sorted(members))
    size = len(members)
    mcs_list: list[int] = []
    rate_c: list[float] = []
    rate_s: list[float] = []
    for ap, sta in members:
        interferers = frozenset(a for a, _ in members if a != ap)
        mcs = select_mcs(sinr_db(sta, ap, interferers, ch, params), table)
        if mcs is None:
            return None
        rate = data_rate(mcs, table, phy)
        if single_rates is not None:
            single = single_rates[sta]
        else:
            single = single_tx_rate(sta, ch, dep, params, table, phy)
        if size * rate / single < 1.0:
            return None
        mcs_list.append(mcs)
        rate_c.append(rate)
        rate_s.append(single)
    return SrGroup(
        members=members,
        mcs_concurrent=tuple(mcs_list),
        rate_concurrent=tuple(rate_c),
        rate_single=tuple(rate_s),
    )


@dataclass
class GroupCatalog:
    """Admitted groups in deterministic order; index = action id.

    Padded arrays (member_sta/member_ap/rate_concurrent, shape (Z, J) with
    -1 / 0 padding and a validity mask) support vectorized scheduling.
    """

    groups: list[SrGroup]
    sta_count: int

    def __post_init__(self) -> None:
        z = len(self.groups)
        width = max((len(g) for g in self.groups), default=1)
        self.member_sta = np.full((z, width), -1, dtype=np.int64)
        self.member_ap = np.full((z, width), -1, dtype=np.int64)
        self.member_valid = np.zeros((z, width), dtype=bool)
        self.rate_concurrent = np.zeros((z, width), dtype=float)
        self.contains_sta = np.zeros((z, self.sta_count), dtype=bool)
        for zi, g in enumerate(self.groups):
            for m, (ap, sta) in enumerate(g.members):
                self.member_sta[zi, m] = sta
                self.member_ap[zi, m] = ap
                self.member_valid[zi, m] = True
                self.rate_concurrent[zi, m] = g.rate_concurrent[m]
                self.contains_sta[zi, sta] = True

    def __len__(self) -> int:
        return len(self.groups)

    def groups_containing(self, sta: int) -> np.ndarray:
        return np.flatnonzero(self.contains_sta[:, sta])

    def to_json(self) -> str:
        doc = {
            "sta_count": self.sta_count,
            "groups": [
                {
                    "members": [list(m) for m in g.members],
                    "mcs_concurrent": list(g.mcs_concurrent),
                    "rate_concurrent": list(g.rate_concurrent),
                    "rate_single": list(g.rate_single),
                }
                for g in self.groups
            ],
        }
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "GroupCatalog":
        doc = json.loads(text)
        groups = [
            SrGroup(
                members=tuple((int(a), int(s)) for a, s in g["members"]),
                mcs_concurrent=tuple(int(v) for v in g["mcs_concurrent"]),
                rate_concurrent=tuple(float(v) for v in g["rate_concurrent"]),
                rate_single=tuple(float(v) for v in g["rate_single"]),
            )
            for g in doc["groups"]
        ]
        return cls(groups=groups, sta_count=int(doc["sta_count"]))


def build_catalog(
    dep: Deployment,
    ch: ChannelRealization,
    params: ChannelParams,
    table: McsTable,
    phy: PhyParams,
) -> GroupCatalog:
    """Evaluate every candidate once for the deployment (shadowing frozen).

    Raises UnusableLinkError if any single link fails: the scenario is then
    malformed rather than merely sparse.
    """
    single_rates = {
        sta: single_tx_rate(sta, ch, dep, params, table, phy)
        for sta in range(dep.sta_count)
    }
    groups = []
    for members in enumerate_candidates(dep):
        g = admit_group(members, ch, dep, params, table, phy, single_rates)
        if g is not None:
            groups.append(g)
    return GroupCatalog(groups=groups, sta_count=dep.sta_count)
