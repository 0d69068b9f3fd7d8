"""Backhaul network of one congested base station (BS1) and its IAB donors.

Node 0 is the core network. Every base station has a wired link to the
core; BS1 additionally has a wireless link to each of BS2..BSN. A slice of
BS1 is carried either over BS1's own wired link or over a one-hop wireless
link to a donor followed by the donor's wired link.

Residual capacities are derived on demand from the donors' access loads
and the active allocations, never cached.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .errors import DomainError, InvalidTopologyError

CORE = 0
CONGESTED_BS = 1


class LinkKind(enum.Enum):
    WIRED = "wired"
    WIRELESS = "wireless"


class Direction(enum.Enum):
    DL = "dl"
    UL = "ul"


@dataclass(frozen=True)
class Node:
    id: int
    name: str
    location: tuple[float, float] | None = None


@dataclass(frozen=True)
class Link:
    kind: LinkKind
    source: int
    target: int
    capacity_dl: float
    capacity_ul: float

    def __post_init__(self):
        if self.source == self.target:
            raise InvalidTopologyError(f"self-loop on node {self.source}")
        if self.capacity_dl < 0 or self.capacity_ul < 0:
            raise InvalidTopologyError("link capacity must be non-negative")

    @property
    def key(self) -> tuple[int, int]:
        return (self.source, self.target)

    def capacity(self, direction: Direction) -> float:
        return self.capacity_dl if direction is Direction.DL else self.capacity_ul


@dataclass(frozen=True)
class Allocation:
    slice_id: int
    link_path: tuple[Link, ...]
    demand_dl: float
    demand_ul: float
    interval_index: int

    def demand(self, direction: Direction) -> float:
        return self.demand_dl if direction is Direction.DL else self.demand_ul


@dataclass(frozen=True)
class AllocationResult:
    accepted: bool
    allocation: Allocation | None = None

    def __bool__(self):
        return self.accepted


@dataclass
class Topology:
    nodes: dict[int, Node]
    links: dict[tuple[int, int], Link]
    active_allocations: list[Allocation] = field(default_factory=list)
    current_bs_loads: dict[int, tuple[float, float]] = field(default_factory=dict)

    @property
    def n_bs(self) -> int:
        return len(self.nodes) - 1

    @property
    def bs_ids(self) -> range:
        return range(1, self.n_bs + 1)

    def link(self, source: int, target: int) -> Link:
        try:
            return self.links[(source, target)]
        except KeyError:
            raise DomainError(f"no link {source}->{target}") from None

    def set_bs_loads(self, loads: dict[int, tuple[float, float]]) -> None:
        """Replace the access loads of the donor stations.

        Stations missing from ``loads`` are treated as idle.
        """
        new = {}
        for bs, (dl, ul) in loads.items():
            if bs not in self.nodes or bs == CORE:
                raise DomainError(f"unknown base station {bs}")
            if dl < 0 or ul < 0:
                raise DomainError(f"negative load for BS{bs}: ({dl}, {ul})")
            wired = self.link(bs, CORE)
            if dl > wired.capacity_dl or ul > wired.capacity_ul:
                raise DomainError(f"load of BS{bs} exceeds its link capacity")
            new[bs] = (float(dl), float(ul))
        self.current_bs_loads = {bs: new.get(bs, (0.0, 0.0)) for bs in self.bs_ids}

    def candidate_path(self, choice: int) -> tuple[Link, ...]:
        if choice not in self.bs_ids:
            raise DomainError(f"choice {choice} is not a base station of this topology")
        if choice == CONGESTED_BS:
            return (self.link(CONGESTED_BS, CORE),)
        return (self.link(CONGESTED_BS, choice), self.link(choice, CORE))

    def _access_load(self, link: Link, direction: Direction) -> float:
        # BS1's own traffic reaches its wired link only through allocations.
        donor = link.target if link.kind is LinkKind.WIRELESS else link.source
        if donor == CONGESTED_BS:
            return 0.0
        dl, ul = self.current_bs_loads.get(donor, (0.0, 0.0))
        return dl if direction is Direction.DL else ul

    def residual(self, link: Link, direction: Direction) -> float:
        if self.links.get(link.key) != link:
            raise DomainError(f"link {link.key} is not part of this topology")
        used = self._access_load(link, direction)
        for alloc in self.active_allocations:
            if link in alloc.link_path:
                used += alloc.demand(direction)
        return max(0.0, link.capacity(direction) - used)

    def path_residual(self, choice: int) -> tuple[float, float]:
        """Bottleneck (DL, UL) residual over the path of ``choice``."""
        path = self.candidate_path(choice)
        return (
            min(self.residual(link, Direction.DL) for link in path),
            min(self.residual(link, Direction.UL) for link in path),
        )

    def try_allocate(
        self,
        slice_id: int,
        choice: int,
        demand_dl: float,
        demand_ul: float,
        interval_index: int,
    ) -> AllocationResult:
        if demand_dl < 0 or demand_ul < 0:
            raise DomainError("demands must be non-negative")
        path = self.candidate_path(choice)
        for link in path:
            if (
                self.residual(link, Direction.DL) < demand_dl
                or self.residual(link, Direction.UL) < demand_ul
            ):
                return AllocationResult(False)
        alloc = Allocation(slice_id, path, float(demand_dl), float(demand_ul), interval_index)
        self.active_allocations.append(alloc)
        return AllocationResult(True, alloc)

    def release_interval(self) -> None:
        self.active_allocations.clear()

    def snapshot(self) -> tuple:
        """Hashable view of the mutable state."""
        return (
            tuple(self.active_allocations),
            tuple(sorted(self.current_bs_loads.items())),
        )


def build_topology(n_bs: int = 7, wired_mbps: float = 1000.0, wireless_mbps: float = 1000.0) -> Topology:
    if n_bs < 2:
        raise InvalidTopologyError(f"need at least 2 base stations, got {n_bs}")
    nodes = {CORE: Node(CORE, "core")}
    for k in range(1, n_bs + 1):
        nodes[k] = Node(k, f"BS{k}")
    links = {}
    for k in range(1, n_bs + 1):
        link = Link(LinkKind.WIRED, k, CORE, float(wired_mbps), float(wired_mbps))
        links[link.key] = link
    for k in range(2, n_bs + 1):
        link = Link(LinkKind.WIRELESS, CONGESTED_BS, k, float(wireless_mbps), float(wireless_mbps))
        links[link.key] = link
    topo = Topology(nodes, links)
    topo.set_bs_loads({})
    return topo
