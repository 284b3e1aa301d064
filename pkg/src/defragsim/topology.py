"""Two-tier spine-leaf cluster fabric.

Racks of multi-GPU hosts hang off ToR switches; every ToR connects to the
spine layer through a fixed number of uplinks. Only host NICs and ToR
uplinks are capacity-constrained; the switching fabrics themselves are
non-blocking. Intra-host traffic (NVLink) is not modeled.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class LinkKind(Enum):
    HOST_NIC = "host-nic"
    TOR_UPLINK = "tor-uplink"


class Direction(Enum):
    UP = "up"
    DOWN = "down"


@dataclass(frozen=True)
class LinkId:
    """One direction of a capacity-constrained link.

    For HOST_NIC, ``index`` is the global GPU/NIC index of the host slot.
    For TOR_UPLINK, ``index`` is the uplink index within the rack.
    """

    kind: LinkKind
    rack: int
    index: int
    direction: Direction


@dataclass(frozen=True)
class GpuId:
    rack: int
    host: int
    slot: int


class TopologyError(ValueError):
    pass


@dataclass(frozen=True)
class ClusterTopology:
    num_racks: int
    hosts_per_rack: int
    gpus_per_host: int
    uplinks_per_tor: int
    nic_bandwidth: float  # bits/second
    uplink_bandwidth: float  # bits/second
    num_spines: int

    def __post_init__(self):
        for name in ("num_racks", "hosts_per_rack", "gpus_per_host",
                     "uplinks_per_tor", "num_spines"):
            if getattr(self, name) < 1:
                raise TopologyError(f"{name} must be >= 1")
        if self.nic_bandwidth <= 0 or self.uplink_bandwidth <= 0:
            raise TopologyError("bandwidths must be positive")
        if (self.uplinks_per_tor % self.num_spines != 0
                and self.num_spines != self.uplinks_per_tor):
            raise TopologyError(
                "uplinks_per_tor must be a multiple of num_spines")

    @property
    def total_gpus(self) -> int:
        return self.num_racks * self.hosts_per_rack * self.gpus_per_host

    @property
    def gpus_per_rack(self) -> int:
        return self.hosts_per_rack * self.gpus_per_host

    @property
    def oversubscription_ratio(self) -> float:
        return (self.hosts_per_rack * self.gpus_per_host * self.nic_bandwidth
                ) / (self.uplinks_per_tor * self.uplink_bandwidth)

    def spine_for_uplink(self, uplink: int) -> int:
        # Uplink i on every ToR connects to spine i mod num_spines, so a
        # "color = uplink index" assignment is globally consistent.
        return uplink % self.num_spines

    def nic_link(self, gpu: GpuId, direction: Direction) -> LinkId:
        index = gpu.host * self.gpus_per_host + gpu.slot
        return LinkId(LinkKind.HOST_NIC, gpu.rack, index, direction)

    def uplink_link(self, rack: int, uplink: int,
                    direction: Direction) -> LinkId:
        if not 0 <= uplink < self.uplinks_per_tor:
            raise TopologyError(f"uplink index {uplink} out of range")
        return LinkId(LinkKind.TOR_UPLINK, rack, uplink, direction)

    def link_capacity(self, link: LinkId) -> float:
        if link.kind is LinkKind.HOST_NIC:
            return self.nic_bandwidth
        return self.uplink_bandwidth


def make_two_tier(racks: int, hosts_per_rack: int, gpus_per_host: int,
                  uplinks: int, nic_bw: float, uplink_bw: float,
                  spines: int) -> ClusterTopology:
    """Build a two-tier topology, validating all counts."""
    return ClusterTopology(
        num_racks=racks,
        hosts_per_rack=hosts_per_rack,
        gpus_per_host=gpus_per_host,
        uplinks_per_tor=uplinks,
        nic_bandwidth=nic_bw,
        uplink_bandwidth=uplink_bw,
        num_spines=spines,
    )


def path_between(topology: ClusterTopology, src: GpuId, dst: GpuId,
                 chosen_uplink_src: int = 0,
                 chosen_uplink_dst: int = 0) -> list[LinkId]:
    """Return the sequence of capacity-constrained links from src to dst.

    Same host: empty path (intra-host interconnect is out of model).
    Same rack: src NIC up, dst NIC down.
    Cross rack: src NIC up, src-ToR uplink up, dst-ToR uplink down,
    dst NIC down. The uplink choice on each side is the caller's routing
    decision.
    """
    if src == dst:
        raise TopologyError("src and dst must differ")
    if src.rack == dst.rack and src.host == dst.host:
        return []
    if src.rack == dst.rack:
        return [
            topology.nic_link(src, Direction.UP),
            topology.nic_link(dst, Direction.DOWN),
        ]
    return [
        topology.nic_link(src, Direction.UP),
        topology.uplink_link(src.rack, chosen_uplink_src, Direction.UP),
        topology.uplink_link(dst.rack, chosen_uplink_dst, Direction.DOWN),
        topology.nic_link(dst, Direction.DOWN),
    ]
