"""Scenario configuration: one JSON document, keys named after the standard
simulation-parameter table (µs/ms/GHz/MHz/mW units as listed there),
converted to SI internally.

A scenario fully determines an episode given a seed: world geometry and
shadowing come from the deployment seed (the episode seed unless
`fixed_deployment_seed` pins them), traffic realization and MAC randomness
from the episode seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import ChannelParams, ChannelRealization, McsTable, PhyParams, realize_channel
from .groups import GroupCatalog, build_catalog
from .mac import Episode, MacParams
from .topology import Deployment, DeploymentConfig, generate_deployment
from .traffic import BURSTY, POISSON, ArrivalStream, TrafficProfile


@dataclass
class ScenarioConfig:
    deployment: DeploymentConfig = field(default_factory=DeploymentConfig)
    channel: ChannelParams = field(default_factory=ChannelParams)
    phy: PhyParams = field(default_factory=PhyParams)
    mac: MacParams = field(default_factory=MacParams)
    mcs_table: McsTable = field(default_factory=McsTable.default)
    t_sim: float = 5.0
    queue_capacity: int = 10_000  # rho_max
    h_max: float = 1e-3  # observation gain normalizer
    beta: float = 1e-3  # long-term reward scale
    nu: float = 1e-6  # long-term reward guard
    load_range_mbps: tuple[float, float] = (10.0, 90.0)
    traffic_models: tuple[str, ...] = (POISSON, BURSTY)  # drawn uniformly per STA
    on_mean_ms: float = 1.0
    off_mean_ms: float = 10.0
    fixed_deployment_seed: int | None = None

    def validate(self) -> None:
        self.deployment.validate()
        self.channel.validate()
        self.phy.validate()
        self.mac.validate()
        self.mcs_table.validate()
        if self.t_sim <= 0:
            raise ValueError("T_sim must be positive")
        if self.beta <= 0 or self.nu <= 0:
            raise ValueError("beta and nu must be positive")
        lo, hi = self.load_range_mbps
        if not 0 < lo <= hi:
            raise ValueError("load range must satisfy 0 < min <= max")
        for m in self.traffic_models:
            if m not in (POISSON, BURSTY):
                raise ValueError(f"unknown traffic model {m!r}")

    @property
    def sta_count(self) -> int:
        return self.deployment.ap_count * self.deployment.stas_per_ap


_US = 1e-6
_MS = 1e-3


def scenario_from_dict(doc: dict) -> ScenarioConfig:
    """Build a scenario from the parameter-table JSON document."""

    def get(key, default):
        return doc.get(key, default)

    deployment = DeploymentConfig(
        ap_count=int(get("J", 4)),
        stas_per_ap=int(get("N_j", 4)),
        inter_ap_distance=float(get("inter_ap_distance", 30.0)),
        sta_distance_range=tuple(get("d_STA", (1.0, 10.0))),
        room_height=float(get("room_height", 30.0)),
    )
    channel = ChannelParams(
        breakpoint_m=float(get("B_p", 10.0)),
        bandwidth_mhz=float(get("B", 80.0)),
        carrier_ghz=float(get("f_c", 6.0)),
        shadowing_sigma_db=float(get("sigma", 5.0)),
        noise_w=float(get("W", 3.2e-13)),
        tx_power_w=float(get("P_max", 200.0)) * 1e-3,  # mW in the table
        cca_dbm=float(get("CCA", -82.0)),
    )
    phy = PhyParams(
        subcarriers=int(get("N_SC", 980)),
        spatial_streams=int(get("N_SS", 2)),
        symbol_time_s=float(get("T_OFDM", 12.8)) * _US,
        guard_time_s=float(get("T_GI", 0.8)) * _US,
        frame_bits=int(get("L", 12000)),
        operating_per=float(get("operating_per", 1e-2)),
    )
    mac = MacParams(
        t_icf=float(get("T_MAPC_ICF", 74.4)) * _US,
        t_icr=float(get("T_MAPC_ICR", 88.0)) * _US,
        t_tf=float(get("T_MAPC_TF", 74.4)) * _US,
        t_back=float(get("T_BACK", 100.0)) * _US,
        t_sifs=float(get("T_SIFS", 16.0)) * _US,
        t_difs=float(get("T_DIFS", 34.0)) * _US,
        t_slot=float(get("T_e", 9.0)) * _US,
        cw_min=int(get("CW_min", 15)),
        cw_max=int(get("CW_max", 1023)),
        txop_duration=float(get("T_max", 5.0)) * _MS,
    )
    mcs_csv = get("mcs_table_csv", None)
    mcs_table = McsTable.from_csv(mcs_csv) if mcs_csv else McsTable.default()
    scenario = ScenarioConfig(
        deployment=deployment,
        channel=channel,
        phy=phy,
        mac=mac,
        mcs_table=mcs_table,
        t_sim=float(get("T_sim", 5.0)),
        queue_capacity=int(get("rho_max", 10_000)),
        h_max=float(get("h_max", 1e-3)),
        beta=float(get("beta", 1e-3)),
        nu=float(get("nu", 1e-6)),
        load_range_mbps=tuple(get("omega_range", (10.0, 90.0))),
        traffic_models=tuple(get("traffic_models", (POISSON, BURSTY))),
        on_mean_ms=float(get("T_ON", 1.0)),
        off_mean_ms=float(get("T_OFF", 10.0)),
        fixed_deployment_seed=get("fixed_deployment_seed", None),
    )
    scenario.validate()
    return scenario


def scenario_to_dict(s: ScenarioConfig) -> dict:
    return {
        "J": s.deployment.ap_count,
        "N_j": s.deployment.stas_per_ap,
        "inter_ap_distance": s.deployment.inter_ap_distance,
        "d_STA": list(s.deployment.sta_distance_range),
        "room_height": s.deployment.room_height,
        "B_p": s.channel.breakpoint_m,
        "B": s.channel.bandwidth_mhz,
        "f_c": s.channel.carrier_ghz,
        "sigma": s.channel.shadowing_sigma_db,
        "W": s.channel.noise_w,
        "P_max": s.channel.tx_power_w * 1e3,
        "CCA": s.channel.cca_dbm,
        "N_SC": s.phy.subcarriers,
        "N_SS": s.phy.spatial_streams,
        "T_OFDM": s.phy.symbol_time_s / _US,
        "T_GI": s.phy.guard_time_s / _US,
        "L": s.phy.frame_bits,
        "operating_per": s.phy.operating_per,
        "T_MAPC_ICF": s.mac.t_icf / _US,
        "T_MAPC_ICR": s.mac.t_icr / _US,
        "T_MAPC_TF": s.mac.t_tf / _US,
        "T_BACK": s.mac.t_back / _US,
        "T_SIFS": s.mac.t_sifs / _US,
        "T_DIFS": s.mac.t_difs / _US,
        "T_e": s.mac.t_slot / _US,
        "CW_min": s.mac.cw_min,
        "CW_max": s.mac.cw_max,
        "T_max": s.mac.txop_duration / _MS,
        "T_sim": s.t_sim,
        "rho_max": s.queue_capacity,
        "h_max": s.h_max,
        "beta": s.beta,
        "nu": s.nu,
        "omega_range": list(s.load_range_mbps),
        "traffic_models": list(s.traffic_models),
        "T_ON": s.on_mean_ms,
        "T_OFF": s.off_mean_ms,
        "fixed_deployment_seed": s.fixed_deployment_seed,
    }


def load_config(path: str | Path) -> dict:
    with open(path) as fh:
        return json.load(fh)


@dataclass
class World:
    """Frozen per-deployment state shared by every TXOP of an episode."""

    deployment: Deployment
    channel: ChannelRealization
    catalog: GroupCatalog
    serving_gain: np.ndarray


def build_world(scenario: ScenarioConfig, world_seed: int) -> World:
    dep_ss, shadow_ss = np.random.SeedSequence(world_seed).spawn(2)
    dep = generate_deployment(scenario.deployment, dep_ss)
    ch = realize_channel(dep, scenario.channel, shadow_ss)
    catalog = build_catalog(dep, ch, scenario.channel, scenario.mcs_table, scenario.phy)
    return World(
        deployment=dep,
        channel=ch,
        catalog=catalog,
        serving_gain=ch.serving_gains(dep.sta_to_ap),
    )


def build_traffic(scenario: ScenarioConfig, seed_seq: np.random.SeedSequence) -> list[ArrivalStream]:
    """Per-STA model/load draws plus independent per-STA RNG streams."""
    n = scenario.sta_count
    children = seed_seq.spawn(n + 1)
    profile_rng = np.random.default_rng(children[0])
    model_idx = profile_rng.integers(0, len(scenario.traffic_models), size=n)
    lo, hi = scenario.load_range_mbps
    loads = profile_rng.uniform(lo, hi, size=n) * 1e6
    streams = []
    for i in range(n):
        profile = TrafficProfile(
            model=scenario.traffic_models[model_idx[i]],
            load_bps=float(loads[i]),
            frame_bits=scenario.phy.frame_bits,
            on_mean_s=scenario.on_mean_ms * _MS,
            off_mean_s=scenario.off_mean_ms * _MS,
        )
        streams.append(ArrivalStream(profile, np.random.default_rng(children[i + 1])))
    return streams


def build_episode(scenario: ScenarioConfig, seed: int, world: World | None = None) -> tuple[Episode, World]:
    """Assemble a runnable episode; reuse `world` to share a fixed deployment."""
    scenario.validate()
    if world is None:
        world_seed = (
            scenario.fixed_deployment_seed
            if scenario.fixed_deployment_seed is not None
            else seed
        )
        world = build_world(scenario, world_seed)
    traffic_ss, mac_ss = np.random.SeedSequence(seed).spawn(2)
    streams = build_traffic(scenario, traffic_ss)
    episode = Episode(
        catalog=world.catalog,
        serving_gain=world.serving_gain,
        streams=streams,
        mac=scenario.mac,
        phy=scenario.phy,
        t_sim=scenario.t_sim,
        rng=np.random.default_rng(mac_ss),
        ap_count=world.deployment.ap_count,
        queue_capacity=scenario.queue_capacity,
    )
    return episode, world
