"""Routing instances: vehicles with starts and capacities, ride requests, distances."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

START, PICKUP, DROPOFF = "vehicle-start", "pickup", "dropoff"


class InstanceError(ValueError):
    """Invalid instance document or inconsistent instance data."""


@dataclass(frozen=True)
class Location:
    id: str
    coords: Optional[tuple[float, float]] = None
    role: str = ""


@dataclass(frozen=True)
class Request:
    pickup: str
    dropoff: str
    passengers: int = 1


@dataclass(frozen=True)
class Vehicle:
    id: str
    start: str
    capacity: int


class DistanceMatrix:
    """Dense matrix of nonnegative distances over a tuple of location ids."""

    def __init__(self, ids: Sequence[str], values):
        self.ids = tuple(ids)
        self.values = np.array(values, dtype=float)
        n = len(self.ids)
        if self.values.shape != (n, n):
            raise InstanceError(f"distance matrix must be {n}x{n}, got {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise InstanceError("distances must be finite")
        if np.any(self.values < 0):
            raise InstanceError("distances must be nonnegative")
        if np.any(np.diag(self.values) != 0):
            raise InstanceError("distance matrix diagonal must be zero")
        self._pos = {lid: i for i, lid in enumerate(self.ids)}

    def __call__(self, u: str, v: str) -> float:
        return float(self.values[self._pos[u], self._pos[v]])

    def __eq__(self, other) -> bool:
        if not isinstance(other, DistanceMatrix):
            return NotImplemented
        return self.ids == other.ids and np.array_equal(self.values, other.values)

    __hash__ = None

    def max_offdiag(self, ids: Optional[Iterable[str]] = None) -> float:
        if ids is None:
            vals = self.values
        else:
            idx = [self._pos[i] for i in ids]
            vals = self.values[np.ix_(idx, idx)]
        return float(vals.max()) if vals.size else 0.0

    @classmethod
    def euclidean(cls, ids: Sequence[str], coords: Sequence[tuple[float, float]]) -> "DistanceMatrix":
        pts = np.asarray(coords, dtype=float).reshape(len(ids), 2)
        diff = pts[:, None, :] - pts[None, :, :]
        values = np.sqrt((diff**2).sum(-1))
        np.fill_diagonal(values, 0.0)
        return cls(ids, values)


@dataclass(frozen=True)
class RoutingInstance:
    name: str
    locations: tuple[Location, ...]
    vehicles: tuple[Vehicle, ...]
    requests: tuple[Request, ...]
    distances: DistanceMatrix

    @property
    def num_requests(self) -> int:
        return len(self.requests)

    @property
    def num_vehicles(self) -> int:
        return len(self.vehicles)

    @property
    def path_length(self) -> int:
        """S = 2C + 1, the longest path a vehicle can need (start included)."""
        return 2 * len(self.requests) + 1

    @cached_property
    def shared(self) -> tuple[str, ...]:
        """Pickups and dropoffs, ordered s1, f1, s2, f2, ..."""
        return tuple(lid for r in self.requests for lid in (r.pickup, r.dropoff))

    @property
    def pickups(self) -> tuple[str, ...]:
        return tuple(r.pickup for r in self.requests)

    @property
    def dropoffs(self) -> tuple[str, ...]:
        return tuple(r.dropoff for r in self.requests)

    @cached_property
    def signed_passengers(self) -> dict[str, int]:
        """+p at each pickup, -p at its dropoff."""
        out = {}
        for r in self.requests:
            out[r.pickup] = r.passengers
            out[r.dropoff] = -r.passengers
        return out

    def vehicle(self, vid: str) -> Vehicle:
        for v in self.vehicles:
            if v.id == vid:
                return v
        raise KeyError(vid)

    def vehicle_nodes(self, vehicle: Vehicle) -> tuple[str, ...]:
        """The per-vehicle location set: its own start followed by the shared set."""
        return (vehicle.start,) + self.shared

    def w(self, u: str, v: str) -> float:
        return self.distances(u, v)


def normalization_factor(
    distances: DistanceMatrix,
    epsilon: Optional[float] = None,
    ids: Optional[Iterable[str]] = None,
) -> float:
    """W = epsilon + max distance, so every normalized weight w/W is < 1.

    The default epsilon is ``1e-6 * max(w)``, or ``1e-6`` when all distances vanish.
    """
    wmax = distances.max_offdiag(ids)
    if epsilon is None:
        epsilon = 1e-6 * wmax if wmax > 0 else 1e-6
    if not epsilon > 0:
        raise ValueError("epsilon must be strictly positive")
    return wmax + epsilon


# JSON ingestion ----------------------------------------------------------

def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise InstanceError(msg)


def instance_from_dict(doc: dict) -> RoutingInstance:
    _require(isinstance(doc, dict), "instance document must be a JSON object")
    for section in ("locations", "vehicles", "requests"):
        _require(isinstance(doc.get(section), list), f"missing list {section!r}")

    raw_locs = []
    seen = set()
    for entry in doc["locations"]:
        lid = str(entry["id"])
        _require(lid not in seen, f"duplicate location id {lid!r}")
        seen.add(lid)
        has_x, has_y = "x" in entry, "y" in entry
        _require(has_x == has_y, f"location {lid!r} needs both x and y or neither")
        coords = (float(entry["x"]), float(entry["y"])) if has_x else None
        raw_locs.append((lid, coords))

    roles: dict[str, str] = {}

    def assign(lid: str, role: str, where: str) -> None:
        _require(lid in seen, f"{where} references unknown location {lid!r}")
        prev = roles.get(lid)
        if role == START and prev == START:
            return
        _require(prev is None, f"location {lid!r} used as both {prev} and {role}")
        roles[lid] = role

    vehicles = []
    vids = set()
    for entry in doc["vehicles"]:
        vid = str(entry["id"])
        _require(vid not in vids, f"duplicate vehicle id {vid!r}")
        vids.add(vid)
        cap = entry.get("capacity")
        _require(isinstance(cap, int) and not isinstance(cap, bool) and cap >= 1,
                 f"vehicle {vid!r} capacity must be an integer >= 1")
        assign(str(entry["start"]), START, f"vehicle {vid!r}")
        vehicles.append(Vehicle(vid, str(entry["start"]), cap))

    requests = []
    for k, entry in enumerate(doc["requests"]):
        s, f = str(entry["pickup"]), str(entry["dropoff"])
        _require(s != f, f"request {k} has identical pickup and dropoff")
        p = entry.get("passengers", 1)
        _require(isinstance(p, int) and not isinstance(p, bool) and p >= 1,
                 f"request {k} passengers must be an integer >= 1")
        assign(s, PICKUP, f"request {k} pickup")
        assign(f, DROPOFF, f"request {k} dropoff")
        requests.append(Request(s, f, p))

    locations = tuple(Location(lid, c, roles.get(lid, "")) for lid, c in raw_locs)
    ids = [loc.id for loc in locations]

    table = doc.get("distances")
    if table is not None:
        values = np.zeros((len(ids), len(ids)))
        coords = {loc.id: loc.coords for loc in locations}
        for a, u in enumerate(ids):
            row = table.get(u, {})
            for b, v in enumerate(ids):
                if a == b:
                    values[a, b] = float(row.get(v, 0.0))
                elif v in row:
                    values[a, b] = float(row[v])
                elif coords[u] is not None and coords[v] is not None:
                    values[a, b] = math.dist(coords[u], coords[v])
                else:
                    raise InstanceError(f"no distance from {u!r} to {v!r}")
        distances = DistanceMatrix(ids, values)
    else:
        missing = [loc.id for loc in locations if loc.coords is None]
        _require(not missing, f"no distance matrix and no coordinates for {missing}")
        distances = DistanceMatrix.euclidean(ids, [loc.coords for loc in locations])

    return RoutingInstance(str(doc.get("name", "")), locations, tuple(vehicles), tuple(requests), distances)


def parse_instance(text: str) -> RoutingInstance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    try:
        return instance_from_dict(doc)
    except (KeyError, TypeError) as exc:
        raise InstanceError(f"malformed instance document: {exc!r}") from None


def load_instance(path) -> RoutingInstance:
    return parse_instance(Path(path).read_text())


def instance_to_dict(inst: RoutingInstance) -> dict:
    locs = []
    for loc in inst.locations:
        entry = {"id": loc.id}
        if loc.coords is not None:
            entry["x"], entry["y"] = loc.coords
        locs.append(entry)
    ids = inst.distances.ids
    return {
        "name": inst.name,
        "locations": locs,
        "vehicles": [{"id": v.id, "start": v.start, "capacity": v.capacity} for v in inst.vehicles],
        "requests": [
            {"pickup": r.pickup, "dropoff": r.dropoff, "passengers": r.passengers} for r in inst.requests
        ],
        "distances": {
            u: {v: float(inst.distances.values[a, b]) for b, v in enumerate(ids)}
            for a, u in enumerate(ids)
        },
    }


def dumps_instance(inst: RoutingInstance) -> str:
    return json.dumps(instance_to_dict(inst), indent=1)


def generate_instance(
    seed: int,
    vehicles: int,
    requests: int,
    capacity_range: tuple[int, int] = (1, 4),
    box: float = 10.0,
) -> RoutingInstance:
    """Seeded random instance with uniform coordinates in ``[0, box]^2``.

    Passenger counts are drawn from ``1..max capacity`` so every request fits
    in at least one vehicle on its own.
    """
    if vehicles < 1 or requests < 0:
        raise ValueError("need at least one vehicle and a nonnegative request count")
    lo, hi = capacity_range
    if not 1 <= lo <= hi:
        raise ValueError("capacity_range must satisfy 1 <= lo <= hi")
    rng = np.random.default_rng(seed)
    caps = [int(c) for c in rng.integers(lo, hi + 1, size=vehicles)]
    ids = [f"d{a + 1}" for a in range(vehicles)]
    for k in range(requests):
        ids += [f"s{k + 1}", f"f{k + 1}"]
    coords = [(float(x), float(y)) for x, y in rng.uniform(0.0, box, size=(len(ids), 2))]
    pax = [int(p) for p in rng.integers(1, max(caps) + 1, size=requests)]
    doc = {
        "name": f"random-seed{seed}-A{vehicles}-C{requests}",
        "locations": [{"id": i, "x": x, "y": y} for i, (x, y) in zip(ids, coords)],
        "vehicles": [{"id": f"v{a + 1}", "start": f"d{a + 1}", "capacity": caps[a]} for a in range(vehicles)],
        "requests": [
            {"pickup": f"s{k + 1}", "dropoff": f"f{k + 1}", "passengers": pax[k]} for k in range(requests)
        ],
    }
    return instance_from_dict(doc)


TINY_1 = {
    "name": "TINY-1",
    "locations": [
        {"id": "d", "x": 0.0, "y": 0.0},
        {"id": "s", "x": 1.0, "y": 0.0},
        {"id": "f", "x": 2.0, "y": 0.0},
    ],
    "vehicles": [{"id": "v1", "start": "d", "capacity": 4}],
    "requests": [{"pickup": "s", "dropoff": "f", "passengers": 1}],
}


def tiny_instance() -> RoutingInstance:
    """The canonical one-vehicle, one-request fixture."""
    return instance_from_dict(TINY_1)
