"""Enterprise deployment geometry: rooms in a row, one AP per room, random STAs.

Node indexing convention used across the package: APs occupy indices
``0..J-1``, STAs occupy ``J..J+N-1`` (global STA ``i`` is node ``J + i``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Room:
    """Axis-aligned rectangle [x0, x1] x [y0, y1] in meters."""

    x0: float
    y0: float
    x1: float
    y1: float

    def contains(self, x: float, y: float) -> bool:
        return self.x0 <= x <= self.x1 and self.y0 <= y <= self.y1

    def center(self) -> tuple[float, float]:
        return (0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))


def row_layout(ap_count: int, room_width: float, room_height: float) -> list[Room]:
    """Contiguous 1 x J row of equal rooms, shared y-extent."""
    return [
        Room(j * room_width, 0.0, (j + 1) * room_width, room_height)
        for j in range(ap_count)
    ]


@dataclass
class DeploymentConfig:
    ap_count: int = 4
    stas_per_ap: int = 4
    inter_ap_distance: float = 30.0  # m, also the room width in the row layout
    sta_distance_range: tuple[float, float] = (1.0, 10.0)  # [d_min, d_max] m
    room_height: float = 30.0  # m
    rooms: list[Room] | None = None  # explicit layout; default: row_layout

    def layout(self) -> list[Room]:
        if self.rooms is not None:
            return list(self.rooms)
        return row_layout(self.ap_count, self.inter_ap_distance, self.room_height)

    def validate(self) -> None:
        if self.ap_count < 1:
            raise ValueError("ap_count must be >= 1")
        if self.stas_per_ap < 1:
            raise ValueError("stas_per_ap must be >= 1")
        d_min, d_max = self.sta_distance_range
        if d_min < 1.0:
            raise ValueError("sta distance d_min must be >= 1 m (path-loss domain)")
        if d_max < d_min:
            raise ValueError("sta_distance_range must satisfy d_min <= d_max")
        rooms = self.layout()
        if len(rooms) != self.ap_count:
            raise ValueError("layout must provide exactly one room per AP")
        # Rooms must form a contiguous row (shared y-extent, abutting in x);
        # wall counting relies on this.
        for a, b in zip(rooms, rooms[1:]):
            if not (np.isclose(a.x1, b.x0) and a.y0 == b.y0 and a.y1 == b.y1):
                raise ValueError("rooms must form a contiguous row along x")
        # The STA annulus around each room's AP must fit inside the room.
        for r in rooms:
            cx, cy = r.center()
            margin = min(cx - r.x0, r.x1 - cx, cy - r.y0, r.y1 - cy)
            if d_max > margin:
                raise ValueError(
                    f"room {r} cannot contain STAs at distance {d_max} m from its AP"
                )


@dataclass
class Deployment:
    """Static world of one episode: positions, association, wall geometry."""

    ap_positions: np.ndarray  # (J, 2) m
    sta_positions: np.ndarray  # (N, 2) m
    sta_to_ap: np.ndarray  # (N,) serving AP index per STA
    rooms: list[Room] = field(default_factory=list)

    @property
    def ap_count(self) -> int:
        return len(self.ap_positions)

    @property
    def sta_count(self) -> int:
        return len(self.sta_positions)

    def node_position(self, node: int) -> np.ndarray:
        """Position of a node under the AP-then-STA indexing convention."""
        j = self.ap_count
        if 0 <= node < j:
            return self.ap_positions[node]
        if j <= node < j + self.sta_count:
            return self.sta_positions[node - j]
        raise IndexError(f"node {node} out of range")

    def distance(self, node_a: int, node_b: int) -> float:
        return float(np.linalg.norm(self.node_position(node_a) - self.node_position(node_b)))

    def walls_between(self, node_a: int, node_b: int) -> int:
        """Room boundaries crossed by the straight segment between two nodes.

        With a row layout these are the interior vertical walls strictly
        between the two x coordinates, so the count is symmetric and zero
        for co-room pairs.
        """
        xa = self.node_position(node_a)[0]
        xb = self.node_position(node_b)[0]
        lo, hi = min(xa, xb), max(xa, xb)
        walls = 0
        for room in self.rooms[:-1]:
            if lo < room.x1 < hi:
                walls += 1
        return walls

    def sta_ap_distance(self, sta: int) -> float:
        return float(
            np.linalg.norm(self.sta_positions[sta] - self.ap_positions[self.sta_to_ap[sta]])
        )

    def to_json(self) -> str:
        doc = {
            "ap_positions": self.ap_positions.tolist(),
            "sta_positions": self.sta_positions.tolist(),
            "sta_to_ap": self.sta_to_ap.tolist(),
            "rooms": [[r.x0, r.y0, r.x1, r.y1] for r in self.rooms],
        }
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Deployment":
        doc = json.loads(text)
        return cls(
            ap_positions=np.asarray(doc["ap_positions"], dtype=float),
            sta_positions=np.asarray(doc["sta_positions"], dtype=float),
            sta_to_ap=np.asarray(doc["sta_to_ap"], dtype=np.int64),
            rooms=[Room(*r) for r in doc["rooms"]],
        )


def generate_deployment(cfg: DeploymentConfig, seed) -> Deployment:
    """Place one AP at each room center and STAs uniformly around them.

    STA offsets are drawn uniform in angle and uniform in radius over
    [d_min, d_max] (radius re-clipped to >= 1 m). Deterministic per seed.
    """
    cfg.validate()
    rng = np.random.default_rng(seed)
    rooms = cfg.layout()
    ap_positions = np.array([r.center() for r in rooms], dtype=float)

    d_min, d_max = cfg.sta_distance_range
    n = cfg.ap_count * cfg.stas_per_ap
    sta_to_ap = np.repeat(np.arange(cfg.ap_count), cfg.stas_per_ap)
    angles = rng.uniform(0.0, 2.0 * np.pi, size=n)
    radii = np.maximum(rng.uniform(d_min, d_max, size=n), 1.0)
    offsets = np.stack([radii * np.cos(angles), radii * np.sin(angles)], axis=1)
    sta_positions = ap_positions[sta_to_ap] + offsets

    return Deployment(
        ap_positions=ap_positions,
        sta_positions=sta_positions,
        sta_to_ap=sta_to_ap,
        rooms=rooms,
    )
