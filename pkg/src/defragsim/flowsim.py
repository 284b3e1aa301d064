"""Flow-level network model: max-min fair rates and event plumbing.

Flows are modeled as fluid: each active flow gets the max-min fair share
along its path, recomputed whenever the active set changes. Completion
times therefore shift as flows come and go; pending completion events
are invalidated with a generation counter rather than removed from the
queue.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Mapping, Sequence


def maxmin_rates(paths: Sequence[Sequence[Hashable]],
                 capacities: Mapping[Hashable, float]) -> list[float]:
    """Max-min fair rates by progressive filling.

    ``paths[i]`` is the sequence of capacity-constrained links flow i
    crosses; a flow with an empty path is unconstrained (rate inf).
    Repeatedly saturate the most contended link, freezing every flow on
    it at the fair share; ties break on first-appearance link order so
    results are deterministic.
    """
    rates = [math.inf] * len(paths)
    link_order: list[Hashable] = []
    flows_on: dict[Hashable, set[int]] = {}
    for i, path in enumerate(paths):
        for link in path:
            if link not in flows_on:
                flows_on[link] = set()
                link_order.append(link)
            flows_on[link].add(i)
    residual = {link: float(capacities[link]) for link in link_order}
    unfrozen = {i for i, path in enumerate(paths) if path}

    while unfrozen:
        best_link = None
        best_share = math.inf
        for link in link_order:
            active = flows_on[link]
            if not active:
                continue
            share = residual[link] / len(active)
            if share < best_share:
                best_share = share
                best_link = link
        if best_link is None:
            break
        frozen = list(flows_on[best_link])
        for i in frozen:
            rates[i] = best_share
            unfrozen.discard(i)
            for link in paths[i]:
                flows_on[link].discard(i)
                residual[link] -= best_share
        residual[best_link] = 0.0
    return rates


def conservation_check(paths: Sequence[Sequence[Hashable]],
                       capacities: Mapping[Hashable, float],
                       rates: Sequence[float],
                       rel_tol: float = 1e-9) -> None:
    """Assert no link carries more than its capacity (within tolerance)."""
    load: dict[Hashable, float] = {}
    for path, rate in zip(paths, rates):
        for link in path:
            load[link] = load.get(link, 0.0) + rate
    for link, total in load.items():
        cap = capacities[link]
        if total > cap * (1 + rel_tol) + rel_tol:
            raise AssertionError(
                f"link {link} overloaded: {total} > {cap}")


# -- event queue ------------------------------------------------------------


@dataclass(order=True)
class _Entry:
    time: float
    rank: int
    seq: int
    payload: object = field(compare=False)


class EventQueue:
    """Time-ordered queue with a kind rank for same-time ordering and an
    insertion sequence number as the final deterministic tie-break."""

    def __init__(self):
        self._heap: list[_Entry] = []
        self._seq = 0

    def push(self, time: float, rank: int, payload) -> None:
        heapq.heappush(self._heap, _Entry(time, rank, self._seq, payload))
        self._seq += 1

    def pop(self) -> tuple[float, int, object]:
        entry = heapq.heappop(self._heap)
        return entry.time, entry.rank, entry.payload

    def peek_time(self) -> float:
        return self._heap[0].time

    def __len__(self) -> int:
        return len(self._heap)

    def __bool__(self) -> bool:
        return bool(self._heap)


# -- flow bookkeeping --------------------------------------------------------


@dataclass
class Flow:
    key: Hashable
    path: tuple
    remaining_bits: float
    rate: float = 0.0


class FlowNetwork:
    """Tracks active flows and their max-min rates over simulated time.

    The owner drives the clock: ``settle_to`` accrues progress at the
    current rates, mutations (``add_flow``/``remove_flow``) mark the rate
    set stale, and ``recompute`` reassigns rates and returns fresh
    completion times. ``generation`` increments on every recompute so
    stale completion events can be recognized and dropped.
    """

    def __init__(self, link_capacity: Callable[[Hashable], float]):
        self._capacity_of = link_capacity
        self._capacities: dict[Hashable, float] = {}
        self.flows: dict[Hashable, Flow] = {}
        self.time = 0.0
        self.generation = 0

    def add_flow(self, key: Hashable, path: Iterable[Hashable],
                 size_bytes: float) -> Flow:
        if key in self.flows:
            raise ValueError(f"duplicate flow key {key!r}")
        path = tuple(path)
        for link in path:
            if link not in self._capacities:
                self._capacities[link] = self._capacity_of(link)
        flow = Flow(key=key, path=path, remaining_bits=size_bytes * 8.0)
        self.flows[key] = flow
        return flow

    def remove_flow(self, key: Hashable) -> Flow:
        return self.flows.pop(key)

    def settle_to(self, time: float) -> None:
        """Advance the clock, draining bits at the current rates."""
        dt = time - self.time
        if dt < -1e-9:
            raise ValueError(f"time went backwards: {self.time} -> {time}")
        if dt > 0:
            for flow in self.flows.values():
                if flow.rate > 0 and math.isfinite(flow.rate):
                    flow.remaining_bits = max(
                        0.0, flow.remaining_bits - flow.rate * dt)
        self.time = max(self.time, time)

    def recompute(self) -> list[tuple[float, Hashable, int]]:
        """Reassign max-min rates; return (eta, key, generation) for every
        flow whose completion time is now finite."""
        self.generation += 1
        keys = list(self.flows)
        paths = [self.flows[k].path for k in keys]
        for path in paths:
            for link in path:
                if link not in self._capacities:
                    self._capacities[link] = self._capacity_of(link)
        rates = maxmin_rates(paths, self._capacities)
        completions = []
        for key, rate in zip(keys, rates):
            flow = self.flows[key]
            flow.rate = rate
            if rate > 0 and math.isfinite(rate):
                eta = self.time + flow.remaining_bits / rate
                completions.append((eta, key, self.generation))
            elif not flow.path:
                # unconstrained flow: done immediately
                flow.remaining_bits = 0.0
                completions.append((self.time, key, self.generation))
        return completions

    def link_loads(self) -> dict[Hashable, float]:
        loads: dict[Hashable, float] = {}
        for flow in self.flows.values():
            if not math.isfinite(flow.rate):
                continue
            for link in flow.path:
                loads[link] = loads.get(link, 0.0) + flow.rate
        return loads

    def check_conservation(self, rel_tol: float = 1e-9) -> None:
        paths = [f.path for f in self.flows.values()]
        rates = [f.rate for f in self.flows.values()]
        finite = [(p, r) for p, r in zip(paths, rates) if math.isfinite(r)]
        conservation_check([p for p, _ in finite], self._capacities,
                           [r for _, r in finite], rel_tol)
