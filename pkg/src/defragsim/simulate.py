"""Discrete-event simulation driver.

Wires the scheduler, defragmentation controller, routing strategy, job
execution model, and the max-min flow network into one deterministic
event loop. All events sharing a timestamp are handled before flow rates
are recomputed once, so completion times do not depend on heap ordering
accidents.

An algorithm is a (defragmentation on/off, routing strategy) pair:
``ecmp``, ``crux``, ``sglb``, ``spray`` and ``perfect`` are routing-only
baselines; ``defrag-perfect`` is the full system and ``defrag-ecmp`` /
``defrag-crux`` isolate the contribution of placement control.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass

from .controller import ControllerConfig, DefragController
from .flowsim import EventQueue, FlowNetwork
from .fragmentation import fragmentation_degree
from .jobmodel import (
    JobPhase, JobRun, MigrationBatch, BatchPhase, REINIT_SECONDS,
    plan_iteration_flows, shard_bytes,
)
from .routing import (
    SPRAY_COLOR, FlowDemand, RoutingAssignment, SglbRouting, make_strategy,
)
from .scheduler import Scheduler, plan_racks
from .topology import ClusterTopology, Direction, GpuId, LinkId, LinkKind, \
    path_between
from .workload import JobSpec, Trace, ideal_duration

log = logging.getLogger(__name__)

ALGORITHMS = ("defrag-perfect", "perfect", "ecmp", "crux", "sglb", "spray",
              "defrag-ecmp", "defrag-crux")

# same-timestamp handling order
RANK_FLOW = 0
RANK_COMPUTE = 1
RANK_ARRIVAL = 2
RANK_REINIT = 3
RANK_EPOCH = 4

SGLB_EPOCH_SECONDS = 1.0


def parse_algorithm(name: str) -> tuple[bool, str]:
    """Split an algorithm name into (defrag enabled, routing strategy)."""
    if name not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {name!r}; "
                         f"choose from {', '.join(ALGORITHMS)}")
    if name.startswith("defrag-"):
        return True, name.removeprefix("defrag-")
    return False, name


@dataclass
class JobRecord:
    job_id: int
    model: str
    num_workers: int
    arrival: float
    started: float
    finished: float
    ideal: float
    downtime: float
    migrations: int

    @property
    def queue_wait(self) -> float:
        return self.started - self.arrival

    @property
    def slowdown(self) -> float:
        return (self.finished - self.started) / self.ideal


@dataclass
class DefragEvent:
    time: float
    move_count: int
    solve_time: float
    nodes_explored: int
    optimal: bool
    duration: float = 0.0  # barrier start to resume


@dataclass
class SimulationResult:
    algorithm: str
    seed: int
    records: list[JobRecord]
    defrag_events: list[DefragEvent]
    # (t, max rack degree, fragmented groups, max uplink utilization)
    frag_series: list[tuple[float, int, int, float]]
    event_log_hash: str
    isolation_violations: int
    makespan: float


class Simulation:
    def __init__(self, topology: ClusterTopology, trace: Trace,
                 algorithm: str, threshold: float | None = None,
                 solver_time_limit: float = 10.0,
                 max_moves: int | None = 16,
                 check_isolation: bool = False):
        self.topology = topology
        self.trace = trace
        self.algorithm = algorithm
        if threshold is None:
            threshold = float(topology.uplinks_per_tor)
        defrag_on, routing_name = parse_algorithm(algorithm)
        self.routing = make_strategy(routing_name)
        self.scheduler = Scheduler(topology)
        self.controller = DefragController(
            self.scheduler.placement,
            ControllerConfig(threshold=threshold,
                             solver_time_limit=solver_time_limit,
                             max_moves=max_moves,
                             enabled=defrag_on))
        self.net = FlowNetwork(self._link_capacity)
        self.queue = EventQueue()
        self.runs: dict[int, JobRun] = {}
        self.assignment = RoutingAssignment()
        self.check_isolation = check_isolation
        self.isolation_violations = 0

        self.batch: MigrationBatch | None = None
        self._batch_seq = 0
        self._batch_jobs: dict[int, JobSpec] = {}  # specs per active batch
        self._current_event: DefragEvent | None = None

        # flow key -> (demand key or None, src, dst) for path rebuilds
        self._flow_info: dict = {}
        self._transfer_demands: list[FlowDemand] = []
        self._pending_arrivals = 0
        self._records: list[JobRecord] = []
        self._defrag_events: list[DefragEvent] = []
        self._frag_series: list[tuple[float, int, int]] = []
        self._log = hashlib.blake2b(digest_size=16)
        self.now = 0.0

    # -- capacities --------------------------------------------------------

    def _link_capacity(self, link: LinkId) -> float:
        if link.kind is LinkKind.HOST_NIC:
            return self.topology.nic_bandwidth
        if link.index == SPRAY_COLOR:
            # fluid aggregate of every uplink on the ToR
            return (self.topology.uplink_bandwidth
                    * self.topology.uplinks_per_tor)
        return self.topology.uplink_bandwidth

    # -- event log -----------------------------------------------------------

    def _trace_event(self, *parts) -> None:
        self._log.update(("|".join(map(str, parts)) + "\n").encode())

    # -- main loop -----------------------------------------------------------

    def run(self) -> SimulationResult:
        for job in self.trace.jobs:
            self.queue.push(job.arrival_time, RANK_ARRIVAL, ("arrival", job))
            self._pending_arrivals += 1
        if isinstance(self.routing, SglbRouting) and self.trace.jobs:
            self.queue.push(SGLB_EPOCH_SECONDS, RANK_EPOCH, ("epoch",))

        while self.queue:
            t = self.queue.peek_time()
            self.net.settle_to(t)
            self.now = t
            self._flows_dirty = False
            self._placement_dirty = False
            while self.queue and self.queue.peek_time() == t:
                _, _, payload = self.queue.pop()
                self._dispatch(payload)
            if self._placement_dirty:
                self._record_fragmentation()
                self._maybe_defrag()
                self._reassign_routing()
            if self._flows_dirty:
                if isinstance(self.routing, SglbRouting):
                    # adaptive balancing reacts to the live flow mix, not
                    # just placement changes
                    demands = self._current_demands()
                    if demands and self.routing.rebalance(
                            demands, self.topology.uplinks_per_tor,
                            self.assignment):
                        self._reroute_live_flows()
                self._recompute_network()

        assert not self.runs and not self.scheduler.queue, \
            "simulation drained with jobs still active"
        return SimulationResult(
            algorithm=self.algorithm,
            seed=self.trace.seed,
            records=self._records,
            defrag_events=self._defrag_events,
            frag_series=self._frag_series,
            event_log_hash=self._log.hexdigest(),
            isolation_violations=self.isolation_violations,
            makespan=self.now,
        )

    def _dispatch(self, payload) -> None:
        kind = payload[0]
        if kind == "arrival":
            self._on_arrival(payload[1])
        elif kind == "compute":
            self._on_compute_done(payload[1], payload[2])
        elif kind == "flow":
            self._on_flow_done(payload[1], payload[2])
        elif kind == "reinit":
            self._on_reinit_done(payload[1])
        elif kind == "epoch":
            self._on_epoch()
        else:  # pragma: no cover
            raise AssertionError(f"unknown event {kind}")

    # -- event handlers --------------------------------------------------------

    def _on_arrival(self, job: JobSpec) -> None:
        self._pending_arrivals -= 1
        self._trace_event("arrival", self.now, job.job_id)
        if self.batch is not None:
            # admissions pause while a migration batch is in flight so the
            # plan's destination slots stay reserved
            self.scheduler.queue.append(job)
            return
        if self.scheduler.place_job(job):
            self._start_job(job)
            self._placement_dirty = True

    def _start_job(self, job: JobSpec) -> None:
        run = JobRun(job=job, start_time=self.now)
        self.runs[job.job_id] = run
        self._schedule_compute(run)
        self._trace_event("start", self.now, job.job_id)

    def _schedule_compute(self, run: JobRun) -> None:
        assert run.phase is JobPhase.COMPUTE
        self.queue.push(self.now + run.job.compute_time, RANK_COMPUTE,
                        ("compute", run.job.job_id, run.iteration))

    def _on_compute_done(self, job_id: int, iteration: int) -> None:
        run = self.runs.get(job_id)
        if run is None or run.phase is not JobPhase.COMPUTE \
                or run.iteration != iteration:
            return  # stale (job migrated or finished meanwhile)
        run.phase = JobPhase.COMM
        self._launch_iteration_flows(run)
        if not run.pending_flows:
            self._finish_iteration(run)

    def _launch_iteration_flows(self, run: JobRun) -> None:
        placement = self.scheduler.placement
        for pf in plan_iteration_flows(run.job, placement.locate):
            key = (pf.key, run.iteration)
            demand_key = pf.demand.key if pf.demand else None
            path = self._path_for(pf.src, pf.dst, demand_key)
            self.net.add_flow(key, path, pf.size_bytes)
            self._flow_info[key] = (demand_key, pf.src, pf.dst)
            run.pending_flows.add(key)
        self._flows_dirty = True

    def _path_for(self, src: GpuId, dst: GpuId, demand_key) -> tuple:
        if src.rack == dst.rack:
            return tuple(path_between(self.topology, src, dst))
        color = self.assignment.colors[demand_key]
        if color == SPRAY_COLOR:
            return (
                self.topology.nic_link(src, Direction.UP),
                LinkId(LinkKind.TOR_UPLINK, src.rack, SPRAY_COLOR,
                       Direction.UP),
                LinkId(LinkKind.TOR_UPLINK, dst.rack, SPRAY_COLOR,
                       Direction.DOWN),
                self.topology.nic_link(dst, Direction.DOWN),
            )
        return tuple(path_between(self.topology, src, dst, color, color))

    def _on_flow_done(self, key, generation: int) -> None:
        if generation != self.net.generation or key not in self.net.flows:
            return  # superseded by a later rate recomputation
        self.net.remove_flow(key)
        self._flow_info.pop(key, None)
        self._flows_dirty = True
        self._trace_event("flow", self.now, key)
        if key[0] == "mig":
            batch = self.batch
            assert batch is not None and batch.phase is BatchPhase.TRANSFER
            batch.pending_transfers.discard(key)
            if not batch.pending_transfers:
                self._commit_batch()
            return
        job_id = key[0][0]
        run = self.runs[job_id]
        run.pending_flows.discard(key)
        if run.phase is JobPhase.COMM and not run.pending_flows:
            self._finish_iteration(run)

    def _finish_iteration(self, run: JobRun) -> None:
        run.finish_iteration(self.now)
        if run.phase is JobPhase.COMPUTE:
            self._schedule_compute(run)
        elif run.phase is JobPhase.BARRIERED:
            self._on_job_barriered(run)
        elif run.phase is JobPhase.DONE:
            self._on_job_done(run)

    def _on_job_done(self, run: JobRun) -> None:
        job = run.job
        self._trace_event("finish", self.now, job.job_id)
        del self.runs[job.job_id]
        self._records.append(JobRecord(
            job_id=job.job_id,
            model=job.template.name,
            num_workers=job.num_workers,
            arrival=job.arrival_time,
            started=run.start_time,
            finished=self.now,
            ideal=ideal_duration(job, self.topology),
            downtime=run.downtime,
            migrations=run.migrations,
        ))
        if self.batch is not None:
            # a departing job's pending moves are moot
            self.batch.waiting_jobs.discard(job.job_id)
            self.batch.moves = [mv for mv in self.batch.moves
                                if mv.worker[0] != job.job_id]
            self.scheduler.placement.remove_job(job.job_id)
            if not self.batch.waiting_jobs \
                    and self.batch.phase is BatchPhase.BARRIER:
                self._start_transfers()
            return
        admitted = self.scheduler.release_job(job.job_id)
        for new_job in admitted:
            self._start_job(new_job)
        self._placement_dirty = True

    # -- defragmentation -----------------------------------------------------

    def _maybe_defrag(self) -> None:
        if self.batch is not None:
            return
        decision = self.controller.check()
        if decision is None:
            return
        self._trace_event("defrag", self.now, decision.plan.move_count)
        stats = decision.plan.stats
        self._current_event = DefragEvent(
            time=self.now, move_count=stats.move_count,
            solve_time=stats.solve_time,
            nodes_explored=stats.nodes_explored, optimal=stats.optimal)
        self.batch = MigrationBatch(batch_id=self._batch_seq,
                                    moves=list(decision.moves),
                                    created_at=self.now)
        self._batch_seq += 1
        for job_id in sorted(self.batch.affected_jobs):
            run = self.runs[job_id]
            if not run.pause_if_idle(self.now):
                self.batch.waiting_jobs.add(job_id)
        if not self.batch.waiting_jobs:
            self._start_transfers()

    def _on_job_barriered(self, run: JobRun) -> None:
        batch = self.batch
        assert batch is not None
        batch.waiting_jobs.discard(run.job.job_id)
        if not batch.waiting_jobs and batch.phase is BatchPhase.BARRIER:
            self._start_transfers()

    def _start_transfers(self) -> None:
        batch = self.batch
        batch.phase = BatchPhase.TRANSFER
        batch.transfer_started_at = self.now
        if not batch.moves:
            self._commit_batch()
            return
        placement = self.scheduler.placement
        # one checkpoint flow per moving worker, to a provisional slot on
        # the destination host
        slot_cursor: dict[tuple[int, int], int] = {}
        demands = []
        flows = []
        for i, mv in enumerate(batch.moves):
            src = placement.locate(mv.worker)
            slot = slot_cursor.get((mv.dst_rack, mv.dst_host), 0)
            slot_cursor[(mv.dst_rack, mv.dst_host)] = slot + 1
            dst = GpuId(mv.dst_rack, mv.dst_host,
                        slot % self.topology.gpus_per_host)
            key = ("mig", batch.batch_id, i)
            demand = FlowDemand(key=key, job_id=mv.worker[0],
                                src_rack=src.rack, dst_rack=dst.rack,
                                kind="migration")
            demands.append(demand)
            flows.append((key, src, dst, shard_bytes(
                placement.jobs[mv.worker[0]])))
        self._transfer_demands = demands
        self._reassign_routing()  # allocate mice colors for the transfers
        for key, src, dst, size in flows:
            path = self._path_for(src, dst, key)
            self.net.add_flow(key, path, size)
            self._flow_info[key] = (key, src, dst)
            batch.pending_transfers.add(key)
        self._flows_dirty = True

    def _commit_batch(self) -> None:
        batch = self.batch
        placement = self.scheduler.placement
        for mv in batch.moves:
            placement.unassign(mv.worker)
        for mv in batch.moves:
            placement.assign(mv.worker, mv.dst_rack, mv.dst_host)
            self.runs[mv.worker[0]].migrations += 1
        batch.phase = BatchPhase.REINIT
        batch.committed_at = self.now
        self._transfer_demands = []
        # colors must match the new placement before any flow launched
        # later in this same timestamp looks them up
        self._reassign_routing()
        self.queue.push(self.now + REINIT_SECONDS, RANK_REINIT,
                        ("reinit", batch.batch_id))
        self._trace_event("commit", self.now, batch.batch_id)

    def _on_reinit_done(self, batch_id: int) -> None:
        batch = self.batch
        assert batch is not None and batch.batch_id == batch_id
        batch.phase = BatchPhase.DONE
        batch.finished_at = self.now
        self.batch = None
        if self._current_event is not None:
            self._current_event.duration = batch.duration
            self._defrag_events.append(self._current_event)
            self._current_event = None
        for run in self.runs.values():
            if run.phase is JobPhase.BARRIERED:
                run.resume(self.now)
                self._schedule_compute(run)
        self._trace_event("reinit-done", self.now, batch_id)
        # catch up on admissions deferred during the batch
        while self.scheduler.queue:
            head = self.scheduler.queue[0]
            racks = plan_racks(self.scheduler.placement, head)
            if racks is None:
                break
            self.scheduler.queue.popleft()
            self.scheduler.placement.add_job(head, racks)
            self._start_job(head)
        self._placement_dirty = True

    # -- routing ---------------------------------------------------------------

    def _current_demands(self) -> list[FlowDemand]:
        demands: list[FlowDemand] = []
        placement = self.scheduler.placement
        for job_id in sorted(self.runs):
            run = self.runs[job_id]
            if run.phase is JobPhase.DONE:
                continue
            for pf in plan_iteration_flows(run.job, placement.locate):
                if pf.demand is not None:
                    demands.append(pf.demand)
        demands.extend(self._transfer_demands)
        return demands

    def _reassign_routing(self) -> None:
        demands = self._current_demands()
        utilization = {job_id: float(run.job.num_workers)
                       for job_id, run in self.runs.items()}
        self.assignment = self.routing.assign(
            demands, self.topology.uplinks_per_tor,
            previous=self.assignment, utilization=utilization)
        self._reroute_live_flows()
        if self.check_isolation and self.batch is None:
            # quiescent point: no migration in flight
            self._check_isolation()

    def _reroute_live_flows(self) -> None:
        changed = False
        for key, (demand_key, src, dst) in self._flow_info.items():
            if demand_key is None or demand_key not in self.assignment.colors:
                continue
            path = self._path_for(src, dst, demand_key)
            flow = self.net.flows[key]
            if flow.path != path:
                flow.path = path
                changed = True
        if changed:
            self._flows_dirty = True

    def _on_epoch(self) -> None:
        if self.runs or self.scheduler.queue or self._pending_arrivals:
            demands = self._current_demands()
            if demands and self.routing.rebalance(
                    demands, self.topology.uplinks_per_tor, self.assignment):
                self._reroute_live_flows()
            self.queue.push(self.now + SGLB_EPOCH_SECONDS, RANK_EPOCH,
                            ("epoch",))

    def _check_isolation(self) -> None:
        """Count elephant flows sharing an uplink; with the threshold at
        or below the uplink count this should never happen under edge
        coloring."""
        seen: dict[LinkId, tuple] = {}
        for key, (demand_key, src, dst) in self._flow_info.items():
            if demand_key is None or key[0] == "mig":
                continue
            if not isinstance(demand_key, tuple) or demand_key[1] != "dp":
                continue
            for link in self.net.flows[key].path:
                if link.kind is not LinkKind.TOR_UPLINK:
                    continue
                if link in seen and seen[link] != key:
                    self.isolation_violations += 1
                else:
                    seen[link] = key

    # -- network -----------------------------------------------------------------

    def _recompute_network(self) -> None:
        for eta, key, gen in self.net.recompute():
            self.queue.push(eta, RANK_FLOW, ("flow", key, gen))

    # -- observability -------------------------------------------------------------

    def _record_fragmentation(self) -> None:
        report = fragmentation_degree(self.scheduler.placement)
        max_util = 0.0
        for link, load in self.net.link_loads().items():
            if isinstance(link, LinkId) and link.kind is LinkKind.TOR_UPLINK:
                max_util = max(max_util, load / self._link_capacity(link))
        self._frag_series.append(
            (self.now, report.max_degree, report.total_fragmented_groups,
             max_util))


def run_simulation(topology: ClusterTopology, trace: Trace, algorithm: str,
                   threshold: float | None = None,
                   solver_time_limit: float = 10.0,
                   max_moves: int | None = 16,
                   check_isolation: bool = False) -> SimulationResult:
    sim = Simulation(topology, trace, algorithm, threshold=threshold,
                     solver_time_limit=solver_time_limit,
                     max_moves=max_moves,
                     check_isolation=check_isolation)
    return sim.run()
