"""Periodic dirty-byte snapshots: the price of non-persistent local storage.

Local (root/ephemeral) volumes lose their data with the VM, so every
interval the bytes written since the last snapshot are copied off to the
controller as background flows over the management network. Only writes
cost anything; a write-once/read-many workload ships its data across the
network once, whereas serving the same workload from networked volumes
ships every read too. That asymmetry is what the overhead comparison
quantifies.

Planning is trace-driven: the write timeline of each volume is integrated
from the piecewise-constant flow rates, so interval accounting is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .simengine import FlowSpec, Resource, SimTrace, TraceEvent
from .topology import management_path
from .volumes import (
    EPHEMERAL,
    ROOT,
    ResourcePath,
    Volume,
    disk_resource_id,
    is_link_resource,
    link_resource_id,
)

SNAPSHOT_KINDS = frozenset({ROOT, EPHEMERAL})


@dataclass(frozen=True)
class SnapshotPolicy:
    interval_s: float = 3600.0
    bandwidth_cap: float | None = None  # MB/s per snapshot transfer
    target: str = "controller"


@dataclass(frozen=True)
class SnapshotRecord:
    volume_id: str
    taken_at: float
    bytes_copied: float  # MB, exactly the dirty bytes at taken_at
    covers_writes_up_to: float


@dataclass
class SnapshotPlan:
    records: list[SnapshotRecord] = field(default_factory=list)
    flows: list[tuple[FlowSpec, float]] = field(default_factory=list)
    extra_resources: dict[str, Resource] = field(default_factory=dict)  # per-flow caps


def _write_segments(trace: SimTrace) -> dict[str, list[tuple[float, float, float]]]:
    """Per-volume (t0, t1, MB/s) segments of combined write rates."""
    segments: dict[str, list[tuple[float, float, float]]] = {}
    rate: dict[str, float] = {}
    active: dict[str, str] = {}  # flow id -> volume id
    prev_t = 0.0
    for event in trace.events:
        if event.time > prev_t:
            per_volume: dict[str, float] = {}
            for fid, vol_id in active.items():
                per_volume[vol_id] = per_volume.get(vol_id, 0.0) + rate.get(fid, 0.0)
            for vol_id, r in per_volume.items():
                if r > 0:
                    segments.setdefault(vol_id, []).append((prev_t, event.time, r))
            prev_t = event.time
        record = trace.flows.get(event.flow_id)
        if event.kind == "flow_start" and record is not None and record.path.direction == "write":
            vol_id = record.tags.get("volume_id")
            if vol_id is not None:
                active[event.flow_id] = vol_id
        elif event.kind == "rate_change":
            rate[event.flow_id] = event.value
        elif event.kind == "flow_end":
            active.pop(event.flow_id, None)
            rate.pop(event.flow_id, None)
    return segments


def _written_between(segments: list[tuple[float, float, float]], a: float, b: float) -> float:
    total = 0.0
    for t0, t1, r in segments:
        lo, hi = max(t0, a), min(t1, b)
        if hi > lo:
            total += r * (hi - lo)
    return total


def plan_snapshots(
    trace: SimTrace,
    volumes: Mapping[str, Volume],
    policy: SnapshotPolicy,
    topology=None,
) -> SnapshotPlan:
    """Plan interval snapshots of every non-persistent volume in the trace.

    At each interval boundary the bytes written since the previous
    snapshot are emitted as one SnapshotRecord plus a background transfer
    flow from the volume's host to the controller over the management
    path (subject to the policy's per-transfer bandwidth cap). Zero-byte
    intervals are skipped. Dirty counters on the passed volumes are reset
    to reflect the coverage.

    ``topology`` is needed to route the transfer flows; omit it to plan
    records only.
    """
    segments = _write_segments(trace)
    end_time = max((e.time for e in trace.events), default=0.0)
    plan = SnapshotPlan()
    if end_time <= 0:
        return plan

    n_intervals = max(1, math.ceil(end_time / policy.interval_s))
    eligible = sorted(
        vol_id
        for vol_id, vol in volumes.items()
        if vol.kind in SNAPSHOT_KINDS and vol_id in segments
    )
    covered = {vol_id: 0.0 for vol_id in eligible}
    for k in range(1, n_intervals + 1):
        boundary = k * policy.interval_s
        for vol_id in eligible:
            dirty = _written_between(segments[vol_id], covered[vol_id], boundary)
            if dirty <= 0:
                continue  # nothing written since the last snapshot
            plan.records.append(
                SnapshotRecord(
                    volume_id=vol_id,
                    taken_at=boundary,
                    bytes_copied=dirty,
                    covers_writes_up_to=boundary,
                )
            )
            covered[vol_id] = boundary
            if topology is not None:
                flow_id = f"snap.{vol_id}.{k:03d}"
                vol = volumes[vol_id]
                host_id, disk_id = vol.backing
                links = tuple(
                    link_resource_id(l.id) for l in management_path(topology, host_id, topology.controller.id)
                )
                sink = disk_resource_id(topology.controller.id, topology.controller.disks[0].id)
                resources = (disk_resource_id(host_id, disk_id),) + links + (sink,)
                if policy.bandwidth_cap is not None:
                    cap_id = f"cap:{flow_id}"
                    plan.extra_resources[cap_id] = Resource(cap_id, policy.bandwidth_cap, policy.bandwidth_cap)
                    resources = (cap_id,) + resources
                plan.flows.append(
                    (
                        FlowSpec(
                            flow_id,
                            ResourcePath(resources, "write"),
                            dirty,
                            tags={"kind": "snapshot", "volume_id": vol_id},
                        ),
                        boundary,
                    )
                )
    for vol_id in eligible:
        volumes[vol_id].dirty_mb = max(0.0, _written_between(segments[vol_id], covered[vol_id], end_time))
    return plan


def merge_snapshot_events(trace: SimTrace, records: Iterable[SnapshotRecord]) -> SimTrace:
    """Splice snapshot marker events into a trace, keeping time order."""
    markers = [
        TraceEvent(r.taken_at, "snapshot", f"snap.{r.volume_id}", r.volume_id, r.bytes_copied) for r in records
    ]
    trace.events = sorted(trace.events + markers, key=lambda e: e.time)
    return trace


def recoverable_bytes(
    volume: Volume,
    crash_time: float,
    records: Iterable[SnapshotRecord],
    quick_reboot: bool = False,
) -> float:
    """MB that survive a crash at ``crash_time``.

    A reboot within the grace window keeps the whole volume; otherwise
    only the bytes captured by snapshots taken at or before the crash
    remain.
    """
    if quick_reboot:
        return volume.stored_mb
    return math.fsum(
        r.bytes_copied for r in records if r.volume_id == volume.id and r.taken_at <= crash_time
    )


def network_bytes(trace: SimTrace) -> float:
    """MB that crossed any network link in this trace (completed flows)."""
    return math.fsum(
        rec.size_mb
        for rec in trace.flows.values()
        if rec.end_time is not None and any(is_link_resource(rid) for rid in rec.path.resources)
    )


def overhead_comparison(
    local_traces: Iterable[SimTrace],
    networked_traces: Iterable[SimTrace],
) -> tuple[float, float]:
    """Total network bytes: (local HDFS + snapshots, networked HDFS).

    Both sides must have run the same workload. For any workload with
    reads, the local side ships only the written bytes (as snapshots)
    while the networked side ships reads too, so the first element is
    strictly smaller; a pure-write workload is the equality boundary.
    """
    return (
        math.fsum(network_bytes(t) for t in local_traces),
        math.fsum(network_bytes(t) for t in networked_traces),
    )
