"""Filter-scheduler VM placement, virtual racks, and the no-migration rule.

Every VM lands on a host chosen by a filter pipeline (capacity,
local-persistent availability, or custom predicates). The host id doubles
as the VM's virtual rack id, which is what lets the DFS layer treat
co-located VMs as a single failure domain. Hadoop-style VMs are pinned:
``migratable=False`` makes migration fail without touching state.

All operations are pure: they return a new ClusterState and never mutate
their input.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Literal

from . import volumes as volumes_mod
from .errors import (
    InsufficientCapacityError,
    MigrationDisabledError,
    NoCandidateHostError,
    VmNotFoundError,
)
from .topology import ClusterTopology, DiskSpec, PhysicalHost, validate_topology

Policy = Literal["first_fit", "spread"]

RUNNING = "running"
TERMINATED = "terminated"
CRASHED = "crashed"


@dataclass(frozen=True)
class VmSpec:
    """Resource shape of a VM; the reference shape is 4/8/32+20."""

    vcpus: int
    ram_gb: float
    root_disk_gb: float
    ephemeral_gb: float = 0.0
    requires_local_persistent: bool = False
    long_running: bool = False
    migratable: bool = True


def reference_vm_spec() -> VmSpec:
    """The long-running DFS node shape used by the reference scenario."""
    return VmSpec(vcpus=4, ram_gb=8.0, root_disk_gb=32.0, ephemeral_gb=20.0, long_running=True, migratable=False)


@dataclass
class VmInstance:
    id: str
    host_id: str
    spec: VmSpec
    rack_id: str
    volumes: list[str] = field(default_factory=list)
    state: str = RUNNING

    def copy(self) -> VmInstance:
        return replace(self, volumes=list(self.volumes))


@dataclass(frozen=True)
class HostFilter:
    """A named predicate over (state, host, spec)."""

    kind: str
    predicate: Callable[["ClusterState", PhysicalHost, VmSpec], bool] | None = None


CAPACITY_FILTER = HostFilter("capacity")
LOCAL_PERSISTENT_FILTER = HostFilter("local_persistent")

_BUILTIN_FILTERS = {
    "capacity": CAPACITY_FILTER,
    "local_persistent": LOCAL_PERSISTENT_FILTER,
}


def filter_from_name(name: str) -> HostFilter:
    try:
        return _BUILTIN_FILTERS[name]
    except KeyError:
        raise KeyError(f"unknown host filter {name!r}; expected one of {sorted(_BUILTIN_FILTERS)}") from None


@dataclass
class ClusterState:
    """The whole simulation state: topology plus placed VMs and volumes.

    Capacity bookkeeping is derived from the instance/volume tables rather
    than cached, so it cannot drift.
    """

    topology: ClusterTopology
    instances: dict[str, VmInstance] = field(default_factory=dict)
    volumes: dict[str, volumes_mod.Volume] = field(default_factory=dict)
    vm_seq: int = 0
    vol_seq: int = 0

    @classmethod
    def from_topology(cls, topology: ClusterTopology) -> ClusterState:
        return cls(topology=validate_topology(topology))

    def clone(self) -> ClusterState:
        return ClusterState(
            topology=self.topology,
            instances={k: v.copy() for k, v in self.instances.items()},
            volumes={k: replace(v) for k, v in self.volumes.items()},
            vm_seq=self.vm_seq,
            vol_seq=self.vol_seq,
        )

    # -- capacity accounting ------------------------------------------------

    def running_on(self, host_id: str) -> list[VmInstance]:
        return [vm for vm in self.instances.values() if vm.host_id == host_id and vm.state == RUNNING]

    def free_vcpus(self, host_id: str) -> int:
        host = self.topology.host(host_id)
        return host.vcpus - sum(vm.spec.vcpus for vm in self.running_on(host_id))

    def free_ram_gb(self, host_id: str) -> float:
        host = self.topology.host(host_id)
        return host.ram_gb - sum(vm.spec.ram_gb for vm in self.running_on(host_id))

    def disk_used_gb(self, node_id: str, disk_id: str) -> float:
        return sum(
            v.size_gb for v in self.volumes.values() if v.backing == (node_id, disk_id) and v.occupies_space()
        )

    def disk_free_gb(self, node_id: str, disk_id: str) -> float:
        return self.find_disk(node_id, disk_id).capacity_gb - self.disk_used_gb(node_id, disk_id)

    def find_disk(self, node_id: str, disk_id: str) -> DiskSpec:
        if node_id == self.topology.controller.id:
            pool = self.topology.controller.disks
        else:
            host = self.topology.host(node_id)
            pool = host.disks + host.local_persistent_group
        for d in pool:
            if d.id == disk_id:
                return d
        raise KeyError((node_id, disk_id))

    def running_vm(self, vm_id: str) -> VmInstance:
        vm = self.instances.get(vm_id)
        if vm is None or vm.state != RUNNING:
            raise VmNotFoundError(f"no running VM {vm_id!r}")
        return vm

    def next_vm_id(self) -> str:
        self.vm_seq += 1
        return f"vm{self.vm_seq:03d}"

    def next_volume_id(self) -> str:
        self.vol_seq += 1
        return f"vol{self.vol_seq:03d}"


def capacity_violations(state: ClusterState) -> list[str]:
    """Committed-resources-over-total violations; empty when healthy."""
    out = []
    for host in state.topology.hosts:
        if state.free_vcpus(host.id) < 0:
            out.append(f"host {host.id} vcpus overcommitted")
        if state.free_ram_gb(host.id) < -1e-9:
            out.append(f"host {host.id} ram overcommitted")
        for disk in host.disks + host.local_persistent_group:
            if state.disk_free_gb(host.id, disk.id) < -1e-9:
                out.append(f"disk {host.id}/{disk.id} overcommitted")
    for disk in state.topology.controller.disks:
        if state.disk_free_gb(state.topology.controller.id, disk.id) < -1e-9:
            out.append(f"controller disk {disk.id} overcommitted")
    for vm in state.instances.values():
        if vm.state == RUNNING and vm.rack_id != vm.host_id:
            out.append(f"vm {vm.id} rack {vm.rack_id} != host {vm.host_id}")
    return out


def _passes(state: ClusterState, host: PhysicalHost, spec: VmSpec, f: HostFilter) -> bool:
    if f.kind == "capacity":
        if state.free_vcpus(host.id) < spec.vcpus or state.free_ram_gb(host.id) < spec.ram_gb:
            return False
        need = spec.root_disk_gb + spec.ephemeral_gb
        return any(state.disk_free_gb(host.id, d.id) >= need for d in host.disks)
    if f.kind == "local_persistent":
        return len(host.local_persistent_group) > 0
    if f.predicate is None:
        raise ValueError(f"filter {f.kind!r} has no predicate")
    return f.predicate(state, host, spec)


def filter_hosts(state: ClusterState, spec: VmSpec, filters: list[HostFilter]) -> list[str]:
    """Hosts passing every filter, in stable topology order.

    Filters are pure predicates, so their order never changes the result.
    An empty candidate list is a legal outcome.
    """
    return [h.id for h in state.topology.hosts if all(_passes(state, h, spec, f) for f in filters)]


def default_filters(spec: VmSpec) -> list[HostFilter]:
    filters = [CAPACITY_FILTER]
    if spec.requires_local_persistent:
        filters.append(LOCAL_PERSISTENT_FILTER)
    return filters


def assign_virtual_rack(instance: VmInstance) -> str:
    """Rack id of a running VM: its physical host's id.

    Co-located VMs therefore share a rack, which is exactly what the
    replica placement layer needs to see.
    """
    return instance.host_id


def place_vm(
    state: ClusterState,
    spec: VmSpec,
    policy: Policy = "first_fit",
    filters: list[HostFilter] | None = None,
) -> tuple[ClusterState, VmInstance]:
    """Place one VM and provision its root (and ephemeral) volume.

    ``first_fit`` takes the first candidate in topology order; ``spread``
    takes the candidate running the fewest VMs, lowest host id on ties.
    Root and ephemeral storage land together on the host's first disk with
    enough free space.
    """
    if filters is None:
        filters = default_filters(spec)
    candidates = filter_hosts(state, spec, filters)
    if not candidates:
        raise NoCandidateHostError(f"no host passes {[f.kind for f in filters]} for spec {spec}")

    if policy == "spread":
        host_id = min(candidates, key=lambda h: (len(state.running_on(h)), h))
    elif policy == "first_fit":
        host_id = candidates[0]
    else:
        raise ValueError(f"unknown policy {policy!r}")

    new = state.clone()
    vm_id = new.next_vm_id()
    vm = VmInstance(id=vm_id, host_id=host_id, spec=spec, rack_id=host_id)
    vm.rack_id = assign_virtual_rack(vm)
    new.instances[vm_id] = vm

    host = new.topology.host(host_id)
    need = spec.root_disk_gb + spec.ephemeral_gb
    disk = next((d for d in host.disks if new.disk_free_gb(host_id, d.id) >= need), None)
    if disk is None:
        raise NoCandidateHostError(f"host {host_id} has no disk with {need} GB free")
    volumes_mod.provision_local_volume(new, vm, volumes_mod.ROOT, spec.root_disk_gb, disk.id)
    if spec.ephemeral_gb > 0:
        volumes_mod.provision_local_volume(new, vm, volumes_mod.EPHEMERAL, spec.ephemeral_gb, disk.id)
    return new, vm


def migrate_vm(state: ClusterState, vm_id: str, target_host: str) -> ClusterState:
    """Move a migratable VM; local volume contents do not follow.

    VMs with ``migratable=False`` (the Hadoop case) fail with
    MigrationDisabledError and the state is returned untouched. On success
    the rack id follows the host, root/ephemeral volumes are re-provisioned
    empty on the target (contents lost), local-persistent volumes detach in
    place keeping their data, and networked volumes stay attached.
    """
    vm = state.running_vm(vm_id)
    if not vm.spec.migratable:
        raise MigrationDisabledError(f"vm {vm_id} is pinned (migratable=False)")
    target = state.topology.host(target_host)  # KeyError on unknown host
    if target_host == vm.host_id:
        return state.clone()  # nothing moves, nothing lost

    if state.free_vcpus(target_host) < vm.spec.vcpus or state.free_ram_gb(target_host) < vm.spec.ram_gb:
        raise InsufficientCapacityError(f"host {target_host} lacks vcpus/ram for {vm_id}")
    need = vm.spec.root_disk_gb + vm.spec.ephemeral_gb
    target_disk = next((d for d in target.disks if state.disk_free_gb(target_host, d.id) >= need), None)
    if target_disk is None:
        raise InsufficientCapacityError(f"host {target_host} lacks {need} GB disk for {vm_id}")

    new = state.clone()
    vm = new.instances[vm_id]
    for vol_id in list(vm.volumes):
        vol = new.volumes[vol_id]
        if vol.kind in (volumes_mod.ROOT, volumes_mod.EPHEMERAL):
            # file-backed local disk: recreated empty on the target
            vol.backing = (target_host, target_disk.id)
            vol.data_lost = True
            vol.stored_mb = 0.0
            vol.dirty_mb = 0.0
        elif vol.kind == volumes_mod.LOCAL_PERSISTENT:
            # partition stays put with its data; volume detaches
            vol.attached_to = None
            vm.volumes.remove(vol_id)
        # networked volumes remain attached unchanged
    vm.host_id = target_host
    vm.rack_id = assign_virtual_rack(vm)
    return new
