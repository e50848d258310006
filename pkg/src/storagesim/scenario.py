"""Config-driven experiments: one YAML file describes a full comparison.

A scenario names the topology, the VM fleet, the DFS parameters, the
benchmark shape, the snapshot policy, and the price table, plus a single
seed. Identical scenario + seed means byte-identical traces and reports;
every number in a report can be recomputed from the emitted trace.

Storage configs: ``local`` (DFS on the VM root disk, with snapshot
transfers planned as background flows), ``networked`` (DFS on
controller-served volumes), and ``local_persistent`` (DFS on host
partitions that outlive the VM; no snapshots needed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from itertools import combinations
from typing import Any, Mapping

import yaml

from .bench import MIXED, READ, WRITE, BenchmarkResult, DfsioRun, DfsioSpec, TaskStat, run_dfsio
from .cost import (
    EBS_STANDARD,
    EPHEMERAL_LOCAL,
    CostReport,
    PriceTable,
    StorageBilling,
    UsageRecord,
    compute_cost,
    count_io_ops,
    savings,
)
from .dfs import DfsConfig, DfsFile
from .errors import ScenarioParseError, ScenarioValidationError, SimError, TopologyValidationError
from .placement import ClusterState, VmSpec, place_vm
from .simengine import SimTrace
from .snapshot import SnapshotPolicy, SnapshotRecord, merge_snapshot_events, network_bytes, plan_snapshots
from .topology import (
    ClusterTopology,
    ControllerNode,
    DiskSpec,
    NetworkLink,
    PhysicalHost,
    reference_cluster,
    validate_topology,
)
from . import volumes as volumes_mod

SCHEMA_VERSION = 1
STORAGE_CONFIGS = ("local", "networked", "local_persistent")


@dataclass(frozen=True)
class VmGroup:
    spec: VmSpec
    count: int = 1
    policy: str = "spread"


@dataclass
class Scenario:
    schema: int
    seed: int
    topology: ClusterTopology
    vms: list[VmGroup]
    storage_config: str
    dfs: DfsConfig
    dfsio: DfsioSpec
    snapshot: SnapshotPolicy
    prices: PriceTable
    volume_size_gb: float = 100.0
    op_size_kb: float = 64.0


# -- parsing ------------------------------------------------------------------


def _mapping(value: Any, where: str) -> dict:
    if not isinstance(value, Mapping):
        raise ScenarioParseError(f"field {where}: expected a mapping, got {type(value).__name__}")
    return dict(value)


_MISSING = object()


def _get(data: Mapping, key: str, kinds: tuple[type, ...], where: str, default: Any = _MISSING) -> Any:
    if key not in data:
        if default is _MISSING:
            raise ScenarioParseError(f"field {where}.{key}: missing")
        return default
    value = data[key]
    if value is None and default is not _MISSING:
        return default  # a bare `key:` line in YAML means "use the default"
    if bool in kinds and isinstance(value, bool):
        return value
    if isinstance(value, bool) and bool not in kinds:
        raise ScenarioParseError(f"field {where}.{key}: expected {kinds[0].__name__}, got bool")
    if not isinstance(value, kinds):
        raise ScenarioParseError(
            f"field {where}.{key}: expected {'/'.join(k.__name__ for k in kinds)}, got {type(value).__name__}"
        )
    return value


def _num(data: Mapping, key: str, where: str, default: Any = _MISSING) -> float:
    return float(_get(data, key, (int, float), where, default))


def _parse_disk(data: Mapping, where: str) -> DiskSpec:
    data = _mapping(data, where)
    return DiskSpec(
        id=str(_get(data, "id", (str,), where)),
        capacity_gb=_num(data, "capacity_gb", where),
        write_bw=_num(data, "write_bw", where),
        read_bw=_num(data, "read_bw", where),
    )


def _parse_link(data: Mapping, where: str) -> NetworkLink:
    data = _mapping(data, where)
    endpoints = _get(data, "endpoints", (list, tuple), where)
    if len(endpoints) != 2:
        raise ScenarioParseError(f"field {where}.endpoints: expected two node ids")
    return NetworkLink(
        id=str(_get(data, "id", (str,), where)),
        bandwidth=_num(data, "bandwidth", where),
        endpoints=(str(endpoints[0]), str(endpoints[1])),
        role=str(_get(data, "role", (str,), where, "management")),
        efficiency=_num(data, "efficiency", where, 1.0),
    )


def _parse_topology(data: Mapping) -> ClusterTopology:
    data = _mapping(data, "topology")
    if "reference" in data:
        ref = _mapping(data["reference"], "topology.reference")
        known = {
            "n_hosts": int,
            "disk_capacity_gb": float,
            "disk_read_bw": float,
            "disk_write_bw": float,
            "controller_disk_capacity_gb": float,
            "controller_read_bw": float,
            "controller_write_bw": float,
            "link_bw": float,
            "local_persistent_gb": float,
            "vcpus": int,
            "ram_gb": float,
        }
        kwargs = {}
        for key, value in ref.items():
            if key not in known:
                raise ScenarioParseError(f"field topology.reference.{key}: unknown option")
            kwargs[key] = known[key](value)
        return reference_cluster(**kwargs)

    hosts = []
    for i, h in enumerate(_get(data, "hosts", (list,), "topology")):
        where = f"topology.hosts[{i}]"
        h = _mapping(h, where)
        hosts.append(
            PhysicalHost(
                id=str(_get(h, "id", (str,), where)),
                vcpus=int(_num(h, "vcpus", where)),
                ram_gb=_num(h, "ram_gb", where),
                disks=tuple(_parse_disk(d, f"{where}.disks[{j}]") for j, d in enumerate(_get(h, "disks", (list,), where))),
                local_persistent_group=tuple(
                    _parse_disk(d, f"{where}.local_persistent_group[{j}]")
                    for j, d in enumerate(_get(h, "local_persistent_group", (list,), where, []))
                ),
                nic_links=tuple(str(x) for x in _get(h, "nic_links", (list,), where, [])),
            )
        )
    c = _mapping(_get(data, "controller", (dict,), "topology"), "topology.controller")
    controller = ControllerNode(
        id=str(_get(c, "id", (str,), "topology.controller", "controller")),
        disks=tuple(
            _parse_disk(d, f"topology.controller.disks[{j}]")
            for j, d in enumerate(_get(c, "disks", (list,), "topology.controller"))
        ),
        nic_links=tuple(str(x) for x in _get(c, "nic_links", (list,), "topology.controller", [])),
    )
    links = tuple(
        _parse_link(l, f"topology.links[{j}]") for j, l in enumerate(_get(data, "links", (list,), "topology", []))
    )
    return ClusterTopology(hosts=tuple(hosts), controller=controller, links=links)


def _parse_vms(data: Any) -> list[VmGroup]:
    groups = []
    if not isinstance(data, list):
        raise ScenarioParseError("field vms: expected a list of VM groups")
    for i, g in enumerate(data):
        where = f"vms[{i}]"
        g = _mapping(g, where)
        spec = VmSpec(
            vcpus=int(_num(g, "vcpus", where)),
            ram_gb=_num(g, "ram_gb", where),
            root_disk_gb=_num(g, "root_disk_gb", where),
            ephemeral_gb=_num(g, "ephemeral_gb", where, 0.0),
            requires_local_persistent=_get(g, "requires_local_persistent", (bool,), where, False),
            long_running=_get(g, "long_running", (bool,), where, False),
            migratable=_get(g, "migratable", (bool,), where, True),
        )
        policy = str(_get(g, "policy", (str,), where, "spread"))
        if policy not in ("spread", "first_fit"):
            raise ScenarioParseError(f"field {where}.policy: unknown policy {policy!r}")
        count = int(_num(g, "count", where, 1))
        if count < 1:
            raise ScenarioParseError(f"field {where}.count: must be at least 1, got {count}")
        groups.append(VmGroup(spec=spec, count=count, policy=policy))
    return groups


def parse_scenario(data: Any) -> Scenario:
    """Build a Scenario from parsed config data (field errors carry paths)."""
    data = _mapping(data, "<root>")
    schema = int(_num(data, "schema", "<root>", SCHEMA_VERSION))
    if schema != SCHEMA_VERSION:
        raise ScenarioParseError(f"field schema: unsupported version {schema} (expected {SCHEMA_VERSION})")

    storage_config = str(_get(data, "storage_config", (str,), "<root>", "local"))
    if storage_config not in STORAGE_CONFIGS:
        raise ScenarioParseError(f"field storage_config: {storage_config!r} not in {STORAGE_CONFIGS}")

    dfs_data = _mapping(_get(data, "dfs", (dict,), "<root>", {}), "dfs")
    dfs_config = DfsConfig(
        block_size_mb=_num(dfs_data, "block_size_mb", "dfs", 64.0),
        replication_factor=int(_num(dfs_data, "replication_factor", "dfs", 3)),
        seed=int(_num(dfs_data, "seed", "dfs", 0)),
    )

    io_data = _mapping(_get(data, "dfsio", (dict,), "<root>"), "dfsio")
    mode = str(_get(io_data, "mode", (str,), "dfsio", WRITE))
    if mode not in (WRITE, READ, MIXED):
        raise ScenarioParseError(f"field dfsio.mode: unknown mode {mode!r}")
    dfsio = DfsioSpec(
        n_files=int(_num(io_data, "n_files", "dfsio")),
        file_size_mb=_num(io_data, "file_size_mb", "dfsio"),
        mode=mode,
        map_capacity=int(_num(io_data, "map_capacity", "dfsio", 25)),
        slots_per_vm=int(_num(io_data, "slots_per_vm", "dfsio", 5)),
        read_fraction=_num(io_data, "read_fraction", "dfsio", 0.5),
    )
    for field_name, value in (
        ("n_files", dfsio.n_files),
        ("file_size_mb", dfsio.file_size_mb),
        ("map_capacity", dfsio.map_capacity),
        ("slots_per_vm", dfsio.slots_per_vm),
    ):
        if value <= 0:
            raise ScenarioParseError(f"field dfsio.{field_name}: must be positive, got {value}")

    snap_data = _mapping(_get(data, "snapshot", (dict,), "<root>", {}), "snapshot")
    cap = snap_data.get("bandwidth_cap")
    snapshot_policy = SnapshotPolicy(
        interval_s=_num(snap_data, "interval_s", "snapshot", 3600.0),
        bandwidth_cap=None if cap is None else float(cap),
        target=str(_get(snap_data, "target", (str,), "snapshot", "controller")),
    )
    if snapshot_policy.interval_s <= 0:
        raise ScenarioParseError("field snapshot.interval_s: must be positive")

    price_data = _mapping(_get(data, "prices", (dict,), "<root>", {}), "prices")
    prices = PriceTable(
        instance_per_hour=_num(price_data, "instance_per_hour", "prices", 0.24),
        ebs_standard_per_million_ops=_num(price_data, "ebs_standard_per_million_ops", "prices", 0.10),
        ebs_provisioned_per_iops_month=_num(price_data, "ebs_provisioned_per_iops_month", "prices", 0.10),
    )

    return Scenario(
        schema=schema,
        seed=int(_num(data, "seed", "<root>", 0)),
        topology=_parse_topology(_get(data, "topology", (dict,), "<root>")),
        vms=_parse_vms(_get(data, "vms", (list,), "<root>")),
        storage_config=storage_config,
        dfs=dfs_config,
        dfsio=dfsio,
        snapshot=snapshot_policy,
        prices=prices,
        volume_size_gb=_num(data, "volume_size_gb", "<root>", 100.0),
        op_size_kb=_num(data, "op_size_kb", "<root>", 64.0),
    )


def load_scenario(path) -> Scenario:
    """Parse a scenario file; YAML syntax errors keep their line marks."""
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except yaml.YAMLError as e:
        raise ScenarioParseError(f"cannot parse {path}: {e}") from e
    except OSError as e:
        raise ScenarioParseError(f"cannot read {path}: {e}") from e
    return parse_scenario(data)


# -- execution ----------------------------------------------------------------


def build_state(scenario: Scenario, storage_config: str | None = None) -> tuple[ClusterState, dict[str, str]]:
    """Validate topology, place the fleet, attach DFS volumes per config.

    Returns the ready state and the vm id -> DFS volume id binding.
    Raises ScenarioValidationError on anything inconsistent.
    """
    cfg = storage_config or scenario.storage_config
    if cfg not in STORAGE_CONFIGS:
        raise ScenarioValidationError(f"unknown storage_config {cfg!r}")
    try:
        state = ClusterState.from_topology(validate_topology(scenario.topology))
    except TopologyValidationError as e:
        raise ScenarioValidationError(f"topology invalid: {e}") from e

    vm_ids = []
    try:
        for group in scenario.vms:
            spec = group.spec
            if cfg == "local_persistent":
                spec = replace(spec, requires_local_persistent=True)
            for _ in range(group.count):
                state, vm = place_vm(state, spec, policy=group.policy)
                vm_ids.append(vm.id)
    except SimError as e:
        raise ScenarioValidationError(f"cannot place VMs: {e}") from e
    if not vm_ids:
        raise ScenarioValidationError("scenario places no VMs")

    hdfs_volumes: dict[str, str] = {}
    try:
        for vm_id in vm_ids:
            if cfg == "local":
                vm = state.instances[vm_id]
                root = next(v for v in vm.volumes if state.volumes[v].kind == volumes_mod.ROOT)
                hdfs_volumes[vm_id] = root
            else:
                kind = volumes_mod.NETWORKED if cfg == "networked" else volumes_mod.LOCAL_PERSISTENT
                state, vol = volumes_mod.attach_volume(state, vm_id, kind, scenario.volume_size_gb)
                hdfs_volumes[vm_id] = vol.id
    except SimError as e:
        raise ScenarioValidationError(f"cannot attach {cfg} volumes: {e}") from e

    if scenario.dfs.replication_factor > len(vm_ids):
        raise ScenarioValidationError(
            f"insufficient-vms: replication factor {scenario.dfs.replication_factor} > {len(vm_ids)} VMs"
        )
    return state, hdfs_volumes


@dataclass
class ScenarioRun:
    """Everything one storage config produced for one scenario."""

    config: str
    seed: int
    result: BenchmarkResult
    stats: list[TaskStat]
    trace: SimTrace
    files: list[DfsFile]
    snapshot_records: list[SnapshotRecord]
    cost: CostReport
    io_ops: int
    network_mb: float
    prep_traces: list[SimTrace] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "seed": self.seed,
            "result": self.result.to_dict(),
            "tasks": [
                {
                    "task_index": s.task_index,
                    "file_size_mb": s.file_size_mb,
                    "elapsed_s": s.elapsed_s,
                    "rate_mbps": s.rate,
                }
                for s in self.stats
            ],
            "snapshots": [
                {
                    "volume_id": r.volume_id,
                    "taken_at_s": r.taken_at,
                    "bytes_copied_mb": r.bytes_copied,
                    "covers_writes_up_to_s": r.covers_writes_up_to,
                }
                for r in self.snapshot_records
            ],
            "cost": self.cost.to_dict(),
            "io_ops": self.io_ops,
            "network_mb": self.network_mb,
        }


def run_scenario(scenario: Scenario, storage_config: str | None = None, seed: int | None = None) -> ScenarioRun:
    """Run the benchmark under one storage config, snapshots included.

    Read and mixed modes get the conventional preparatory write pass so
    the files exist. Under the ``local`` config the measured run is then
    re-executed with the planned snapshot transfers injected as background
    flows, so their contention is visible in the metrics.
    """
    cfg = storage_config or scenario.storage_config
    run_seed = scenario.seed if seed is None else seed
    state, hdfs_volumes = build_state(scenario, cfg)

    prep_traces = []
    prep_files = None
    if scenario.dfsio.mode in (READ, MIXED):
        prep = run_dfsio(
            state,
            replace(scenario.dfsio, mode=WRITE),
            hdfs_volumes,
            dfs_config=scenario.dfs,
            seed=run_seed,
        )
        state = prep.state
        prep_files = prep.files
        prep_traces.append(prep.trace)

    def measured(background=(), extra_resources=None) -> DfsioRun:
        return run_dfsio(
            state,
            scenario.dfsio,
            hdfs_volumes,
            dfs_config=scenario.dfs,
            seed=run_seed,
            files=prep_files,
            background_flows=background,
            extra_resources=extra_resources,
        )

    run = measured()
    records: list[SnapshotRecord] = []
    if cfg == "local":
        plan = plan_snapshots(run.trace, run.state.volumes, scenario.snapshot, topology=state.topology)
        records = plan.records
        if plan.flows:
            run = measured(background=plan.flows, extra_resources=plan.extra_resources)
            plan_snapshots(run.trace, run.state.volumes, scenario.snapshot)  # settle dirty counters
            merge_snapshot_events(run.trace, records)

    io_ops = count_io_ops(run.trace, scenario.op_size_kb)
    billing = StorageBilling(EBS_STANDARD if cfg == "networked" else EPHEMERAL_LOCAL)
    hours_each = math.ceil(run.result.exec_time_s / 3600.0)
    usage = UsageRecord(instance_hours=len(hdfs_volumes) * hours_each, io_ops=io_ops, storage=billing)
    cost_report = replace(compute_cost(usage, scenario.prices), config=cfg)

    return ScenarioRun(
        config=cfg,
        seed=run_seed,
        result=run.result,
        stats=run.stats,
        trace=run.trace,
        files=run.files,
        snapshot_records=records,
        cost=cost_report,
        io_ops=io_ops,
        network_mb=network_bytes(run.trace),
        prep_traces=prep_traces,
    )


@dataclass
class ComparisonReport:
    """Identical workload + seed across storage configs, side by side."""

    seed: int
    runs: dict[str, ScenarioRun]

    def pairs(self) -> list[dict]:
        out = []
        for a, b in combinations(self.runs, 2):
            ra, rb = self.runs[a], self.runs[b]
            out.append(
                {
                    "a": a,
                    "b": b,
                    "throughput_ratio": ra.result.throughput_mbps / rb.result.throughput_mbps,
                    "savings_of_a_vs_b": savings(ra.cost, rb.cost) if rb.cost.total > 0 else 0.0,
                }
            )
        return out

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "configs": {name: run.to_dict() for name, run in self.runs.items()},
            "pairs": self.pairs(),
        }


def compare(scenario: Scenario, configs: list[str], seed: int | None = None) -> ComparisonReport:
    """Run the identical workload and seed under each storage config.

    Repeating a config is allowed (labels get a #n suffix); identical
    entries then show a throughput ratio of exactly 1.
    """
    if len(configs) < 2:
        raise ScenarioValidationError("compare needs at least two storage configs")
    runs = {}
    for cfg in configs:
        label, n = cfg, 1
        while label in runs:
            n += 1
            label = f"{cfg}#{n}"
        runs[label] = run_scenario(scenario, storage_config=cfg, seed=seed)
    return ComparisonReport(seed=next(iter(runs.values())).seed, runs=runs)


def render_comparison_table(report: ComparisonReport) -> str:
    """Human-readable rendering of a comparison (derived from the data)."""
    lines = []
    header = f"{'config':<18} {'throughput MB/s':>16} {'avg rate MB/s':>14} {'exec s':>10} {'net MB':>12} {'cost $':>10}"
    lines.append(header)
    lines.append("-" * len(header))
    for name, run in report.runs.items():
        lines.append(
            f"{name:<18} {run.result.throughput_mbps:>16.3f} {run.result.avg_io_rate_mbps:>14.3f}"
            f" {run.result.exec_time_s:>10.2f} {run.network_mb:>12.1f} {run.cost.total:>10.4f}"
        )
    for pair in report.pairs():
        lines.append(
            f"{pair['a']}/{pair['b']}: throughput ratio {pair['throughput_ratio']:.3f}, "
            f"cost savings {pair['savings_of_a_vs_b'] * 100:.1f}%"
        )
    return "\n".join(lines)
