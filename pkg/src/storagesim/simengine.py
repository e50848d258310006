"""Deterministic fluid simulation of concurrent I/O flows.

Flows are continuous streams (no packets, no seeks) competing for disks
and links. At every arrival or completion the engine recomputes the
max-min fair allocation by progressive filling: all unfrozen flows rise
together until some resource saturates, the flows crossing it freeze
there, and the rest keep rising. Between events rates are constant, so
completion times are closed-form and runs are exactly reproducible.

Ties are broken by resource id, then flow id; identical inputs produce
byte-identical traces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from heapq import heappop, heappush
from typing import Callable, Iterable, Mapping

from .errors import SimulationStalledError, UnknownResourceError, UnresolvablePathError
from .topology import ClusterTopology
from .volumes import ResourcePath, disk_resource_id, link_resource_id

# A flow is complete when this much (MB) or less remains; absorbs float dust.
COMPLETION_EPS = 1e-9


@dataclass(frozen=True)
class Resource:
    """One shared capacity: a disk (direction-dependent) or a link."""

    id: str
    read_capacity: float  # MB/s
    write_capacity: float  # MB/s

    def capacity_for(self, directions: frozenset[str]) -> float:
        """Pooled capacity given the directions of the flows sharing it.

        Same-direction flows share the matching bandwidth; mixed
        read/write traffic shares the smaller of the two.
        """
        if directions == frozenset({"read"}):
            return self.read_capacity
        if directions == frozenset({"write"}):
            return self.write_capacity
        return min(self.read_capacity, self.write_capacity)


def build_resources(topology: ClusterTopology) -> dict[str, Resource]:
    """Map every disk, partition, and link of a topology to a Resource."""
    resources: dict[str, Resource] = {}
    for host in topology.hosts:
        for d in host.disks + host.local_persistent_group:
            rid = disk_resource_id(host.id, d.id)
            resources[rid] = Resource(rid, read_capacity=d.read_bw, write_capacity=d.write_bw)
    for d in topology.controller.disks:
        rid = disk_resource_id(topology.controller.id, d.id)
        resources[rid] = Resource(rid, read_capacity=d.read_bw, write_capacity=d.write_bw)
    for l in topology.links:
        rid = link_resource_id(l.id)
        bw = l.effective_bandwidth
        resources[rid] = Resource(rid, read_capacity=bw, write_capacity=bw)
    return resources


@dataclass(frozen=True)
class FlowSpec:
    """A transfer to simulate: id, path, size; tags are free-form labels."""

    flow_id: str
    path: ResourcePath
    size_mb: float
    tags: Mapping[str, str] = field(default_factory=dict)


@dataclass
class IoFlow:
    flow_id: str
    path: ResourcePath
    size_mb: float
    remaining_mb: float
    rate: float = 0.0
    start_time: float | None = None
    end_time: float | None = None


def allocate_rates(flows: Iterable[IoFlow], capacities: Mapping[str, float]) -> dict[str, float]:
    """Max-min fair rates by progressive filling.

    All unfrozen flows rise uniformly; each round the resource that
    saturates first (lowest saturation level, ties by resource id) freezes
    the flows crossing it at that level. Repeats until every flow is
    frozen. Raises UnknownResourceError for a path resource with no
    capacity entry.
    """
    flow_list = sorted(flows, key=lambda f: f.flow_id)
    members: dict[str, list[str]] = {}
    paths: dict[str, tuple[str, ...]] = {}
    for f in flow_list:
        for rid in f.path.resources:
            if rid not in capacities:
                raise UnknownResourceError(f"flow {f.flow_id} crosses unknown resource {rid!r}")
        paths[f.flow_id] = f.path.resources
        for rid in f.path.resources:
            members.setdefault(rid, [])
            if f.flow_id not in members[rid]:  # duplicate hops share one reservation
                members[rid].append(f.flow_id)

    rates = {f.flow_id: 0.0 for f in flow_list}
    unfrozen = set(rates)
    level = 0.0
    while unfrozen:
        # level at which each resource saturates, given already-frozen rates
        best_level = math.inf
        for rid in sorted(members):
            live = [fid for fid in members[rid] if fid in unfrozen]
            if not live:
                continue
            frozen_usage = sum(rates[fid] for fid in members[rid] if fid not in unfrozen)
            lvl = (capacities[rid] - frozen_usage) / len(live)
            best_level = min(best_level, lvl)
        if best_level is math.inf:
            break  # unfrozen flows cross no shared resource (impossible: paths are non-empty)
        level = max(level, best_level)
        newly_frozen = set()
        for rid in sorted(members):
            live = [fid for fid in members[rid] if fid in unfrozen]
            if not live:
                continue
            frozen_usage = sum(rates[fid] for fid in members[rid] if fid not in unfrozen)
            if (capacities[rid] - frozen_usage) / len(live) <= level:
                newly_frozen.update(live)
        if not newly_frozen:  # float corner: force the slowest resource's flows
            newly_frozen = set(fid for fid in unfrozen)
        for fid in sorted(newly_frozen):
            rates[fid] = level
        unfrozen -= newly_frozen
    return rates


@dataclass(frozen=True)
class TraceEvent:
    time: float
    kind: str  # flow_start | rate_change | flow_end | snapshot
    flow_id: str
    resource_id: str
    value: float


@dataclass
class FlowRecord:
    flow_id: str
    path: ResourcePath
    size_mb: float
    start_time: float
    end_time: float | None
    tags: dict[str, str]


@dataclass
class SimTrace:
    """Ordered event history plus the flow/resource tables to audit it."""

    events: list[TraceEvent] = field(default_factory=list)
    flows: dict[str, FlowRecord] = field(default_factory=dict)
    resources: dict[str, Resource] = field(default_factory=dict)

    def csv_lines(self) -> list[str]:
        lines = ["time,event_kind,flow_id,resource_id,value"]
        for e in self.events:
            lines.append(f"{e.time!r},{e.kind},{e.flow_id},{e.resource_id},{e.value!r}")
        return lines

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("\n".join(self.csv_lines()) + "\n")


# Callback invoked after completions at one instant; may add_flow() at `now`.
CompletionHook = Callable[["Simulation", list[FlowRecord], float], None]


class Simulation:
    """Event-driven executor over a fixed resource set.

    Flows can be injected up front or from a completion hook (which is how
    the benchmark layer dispatches queued tasks the moment a slot frees).
    """

    def __init__(self, resources: Mapping[str, Resource]):
        self.resources = dict(resources)
        self.now = 0.0
        self._pending: list[tuple[float, int, FlowSpec]] = []
        self._active: dict[str, IoFlow] = {}
        self._seq = 0
        self._trace = SimTrace(resources=dict(resources))
        self._last_rate: dict[str, float] = {}

    def add_flow(self, spec: FlowSpec, at_time: float) -> None:
        if at_time < self.now:
            raise ValueError(f"cannot schedule {spec.flow_id} in the past ({at_time} < {self.now})")
        if spec.flow_id in self._trace.flows or any(p[2].flow_id == spec.flow_id for p in self._pending):
            raise ValueError(f"duplicate flow id {spec.flow_id!r}")
        for rid in spec.path.resources:
            if rid not in self.resources:
                raise UnresolvablePathError(f"flow {spec.flow_id} references unknown resource {rid!r}")
        heappush(self._pending, (at_time, self._seq, spec))
        self._seq += 1

    def mark(self, kind: str, flow_id: str, resource_id: str, value: float) -> None:
        """Record an informational event (e.g. a snapshot) at the current time."""
        self._trace.events.append(TraceEvent(self.now, kind, flow_id, resource_id, value))

    # -- internals ----------------------------------------------------------

    def _effective_capacities(self) -> dict[str, float]:
        dirs: dict[str, set[str]] = {}
        for f in self._active.values():
            for rid in f.path.resources:
                dirs.setdefault(rid, set()).add(f.path.direction)
        caps = {}
        for rid, resource in self.resources.items():
            caps[rid] = resource.capacity_for(frozenset(dirs.get(rid, {"read"})))
        return caps

    def _reallocate(self) -> None:
        rates = allocate_rates(self._active.values(), self._effective_capacities())
        for fid in sorted(rates):
            self._active[fid].rate = rates[fid]
            if self._last_rate.get(fid) != rates[fid]:
                self._trace.events.append(TraceEvent(self.now, "rate_change", fid, "", rates[fid]))
                self._last_rate[fid] = rates[fid]

    def _completion_slack(self, rate: float) -> float:
        # a remainder that cannot advance the clock (progress below the
        # float resolution of `now`) must complete now or spin forever
        return max(COMPLETION_EPS, rate * 8.0 * math.ulp(max(self.now, 1.0)))

    def _next_completion(self) -> float:
        t = math.inf
        for f in self._active.values():
            if f.remaining_mb <= self._completion_slack(f.rate):
                t = min(t, self.now)
            elif f.rate > 0:
                t = min(t, self.now + f.remaining_mb / f.rate)
        return t

    def _start_arrivals(self) -> bool:
        started = False
        while self._pending and self._pending[0][0] <= self.now:
            _, _, spec = heappop(self._pending)
            flow = IoFlow(
                flow_id=spec.flow_id,
                path=spec.path,
                size_mb=spec.size_mb,
                remaining_mb=spec.size_mb,
                start_time=self.now,
            )
            self._active[spec.flow_id] = flow
            self._trace.flows[spec.flow_id] = FlowRecord(
                flow_id=spec.flow_id,
                path=spec.path,
                size_mb=spec.size_mb,
                start_time=self.now,
                end_time=None,
                tags=dict(spec.tags),
            )
            self._trace.events.append(TraceEvent(self.now, "flow_start", spec.flow_id, "", spec.size_mb))
            started = True
        return started

    def run(self, on_complete: CompletionHook | None = None) -> SimTrace:
        """Execute until no flow is pending or active; returns the trace."""
        while self._pending or self._active:
            t_arrival = self._pending[0][0] if self._pending else math.inf
            t_done = self._next_completion()
            t = min(t_arrival, t_done)
            if math.isinf(t):
                raise SimulationStalledError(f"{len(self._active)} active flows cannot progress at t={self.now}")

            dt = t - self.now
            if dt > 0:
                for f in self._active.values():
                    f.remaining_mb = max(0.0, f.remaining_mb - f.rate * dt)
                self.now = t

            completed = [f for f in self._active.values() if f.remaining_mb <= self._completion_slack(f.rate)]
            completed.sort(key=lambda f: f.flow_id)
            done_records = []
            for f in completed:
                f.remaining_mb = 0.0
                f.end_time = self.now
                del self._active[f.flow_id]
                self._last_rate.pop(f.flow_id, None)
                record = self._trace.flows[f.flow_id]
                record.end_time = self.now
                self._trace.events.append(TraceEvent(self.now, "flow_end", f.flow_id, "", f.size_mb))
                done_records.append(record)

            self._start_arrivals()
            if done_records and on_complete is not None:
                on_complete(self, done_records, self.now)
                self._start_arrivals()  # the hook may have queued flows for right now
            if self._active:
                self._reallocate()
        return self._trace


def run(
    resources: Mapping[str, Resource],
    workload: Iterable[tuple[FlowSpec, float]],
    on_complete: CompletionHook | None = None,
) -> SimTrace:
    """Simulate a finite workload of (flow spec, arrival time) pairs."""
    sim = Simulation(resources)
    for spec, at_time in workload:
        sim.add_flow(spec, at_time)
    return sim.run(on_complete=on_complete)


@dataclass(frozen=True)
class TraceViolation:
    code: str  # monotonicity | capacity | byte-conservation | unmatched-flow
    time: float
    message: str

    def __str__(self) -> str:
        return f"[{self.code}] t={self.time}: {self.message}"


# Float slack: capacity is exact in the model, binary float needs an ulp.
CAPACITY_REL_EPS = 1e-9
BYTE_REL_TOL = 1e-6


def verify_trace(trace: SimTrace) -> list[TraceViolation]:
    """Audit a trace: monotone time, byte conservation, capacity limits.

    Returns violations as data (empty list means the trace is clean), so
    hand-built traces can be checked the same way as simulated ones.
    """
    violations: list[TraceViolation] = []
    prev_t = -math.inf
    active: dict[str, FlowRecord] = {}
    rate: dict[str, float] = {}
    moved: dict[str, float] = {}
    ended: set[str] = set()

    def check_interval(t0: float, t1: float) -> None:
        if t1 <= t0 or not active:
            return
        usage: dict[str, float] = {}
        dirs: dict[str, set[str]] = {}
        for fid, rec in active.items():
            for rid in set(rec.path.resources):
                usage[rid] = usage.get(rid, 0.0) + rate.get(fid, 0.0)
                dirs.setdefault(rid, set()).add(rec.path.direction)
            moved[fid] = moved.get(fid, 0.0) + rate.get(fid, 0.0) * (t1 - t0)
        for rid, used in sorted(usage.items()):
            resource = trace.resources.get(rid)
            if resource is None:
                violations.append(TraceViolation("capacity", t0, f"unknown resource {rid!r} in use"))
                continue
            cap = resource.capacity_for(frozenset(dirs[rid]))
            if used > cap * (1 + CAPACITY_REL_EPS):
                violations.append(TraceViolation("capacity", t0, f"{rid} carries {used} MB/s > capacity {cap}"))

    for event in trace.events:
        if event.time < prev_t:
            violations.append(
                TraceViolation("monotonicity", event.time, f"timestamp {event.time} after {prev_t}")
            )
        else:
            check_interval(prev_t, event.time)
            prev_t = event.time

        if event.kind == "flow_start":
            active[event.flow_id] = trace.flows.get(event.flow_id) or FlowRecord(
                event.flow_id, ResourcePath(("?",), "read"), event.value, event.time, None, {}
            )
            moved.setdefault(event.flow_id, 0.0)
        elif event.kind == "rate_change":
            rate[event.flow_id] = event.value
        elif event.kind == "flow_end":
            rec = active.pop(event.flow_id, None)
            if rec is None:
                violations.append(TraceViolation("unmatched-flow", event.time, f"end without start: {event.flow_id}"))
            else:
                ended.add(event.flow_id)
                got = moved.get(event.flow_id, 0.0)
                tol = max(BYTE_REL_TOL * rec.size_mb, 1e-6)
                if abs(got - rec.size_mb) > tol:
                    violations.append(
                        TraceViolation(
                            "byte-conservation",
                            event.time,
                            f"flow {event.flow_id} moved {got} MB of {rec.size_mb} MB",
                        )
                    )
            rate.pop(event.flow_id, None)
        # snapshot events are informational markers

    for fid in active:
        violations.append(TraceViolation("unmatched-flow", prev_t, f"start without end: {fid}"))
    return violations
