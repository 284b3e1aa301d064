"""Per-rack fragmentation degrees and the constructive placement bound.

A rack's fragmentation degree is the number of DP rings present on the
rack that span at least two racks; each such ring sends exactly one flow
out of every rack it spans. A fragmented job with TP degree d contributes
d rings (hence d flows) per spanned rack, and pipeline stages count as
independent jobs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .scheduler import Placement, SchedulerError
from .topology import ClusterTopology
from .workload import JobSpec, replica_groups


@dataclass(frozen=True)
class FragmentationReport:
    per_rack: tuple[int, ...]
    total_fragmented_groups: int

    @property
    def max_degree(self) -> int:
        return max(self.per_rack, default=0)


def group_rack_span(placement: Placement, job: JobSpec) -> list[frozenset[int]]:
    """Rack set spanned by each DP ring of a job."""
    spans = []
    for group in replica_groups(job):
        spans.append(frozenset(placement.locate(w).rack
                               for w in group.members))
    return spans


def fragmentation_degree(placement: Placement,
                         jobs: Iterable[JobSpec] | None = None
                         ) -> FragmentationReport:
    """Exact per-rack degrees, recomputed from scratch."""
    if jobs is None:
        jobs = placement.jobs.values()
    per_rack = [0] * placement.topology.num_racks
    fragmented = 0
    for job in jobs:
        for span in group_rack_span(placement, job):
            if len(span) >= 2:
                fragmented += 1
                for rack in span:
                    per_rack[rack] += 1
    return FragmentationReport(per_rack=tuple(per_rack),
                               total_fragmented_groups=fragmented)


def threshold_violated(report: FragmentationReport,
                       threshold: float) -> set[int]:
    """Racks whose degree exceeds the threshold."""
    return {rack for rack, degree in enumerate(report.per_rack)
            if degree > threshold}


def sequential_placement(jobs: Iterable[JobSpec],
                         topology: ClusterTopology) -> Placement:
    """Place jobs' workers sequentially across the cluster left to right.

    For pure DP jobs this guarantees a max per-rack fragmentation degree
    of two: each rack sees at most one job spilling in from the left and
    one spilling out to the right. With TP the bound becomes 2 * max TP
    degree, one ring per TP rank.
    """
    placement = Placement(topology)
    rack, host = 0, 0
    for job in jobs:
        unit = job.tp_degree
        units = job.num_workers // unit
        placed = 0
        while placed < units:
            if rack >= topology.num_racks:
                raise SchedulerError("total job size exceeds cluster capacity")
            if placement.free_slots(rack, host) >= unit:
                base = placed * unit
                for k in range(unit):
                    placement.assign((job.job_id, base + k), rack, host)
                placed += 1
            else:
                host += 1
                if host >= topology.hosts_per_rack:
                    host = 0
                    rack += 1
        placement.jobs[job.job_id] = job
    return placement
