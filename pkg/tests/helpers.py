"""Shared builders: placed clusters with a DFS volume bound per VM."""

from __future__ import annotations

from storagesim.placement import ClusterState, VmSpec, place_vm
from storagesim.topology import reference_cluster
from storagesim.volumes import LOCAL_PERSISTENT, NETWORKED, ROOT, attach_volume

SMALL_VM = VmSpec(vcpus=1, ram_gb=1.0, root_disk_gb=10.0, ephemeral_gb=0.0, migratable=False)
PINNED_VM = VmSpec(vcpus=4, ram_gb=8.0, root_disk_gb=32.0, ephemeral_gb=20.0, long_running=True, migratable=False)


def placed_cluster(
    n_hosts: int = 5,
    vms_per_host: int = 1,
    spec: VmSpec = PINNED_VM,
    **topology_kwargs,
) -> ClusterState:
    state = ClusterState.from_topology(reference_cluster(n_hosts, **topology_kwargs))
    for _ in range(n_hosts * vms_per_host):
        state, _vm = place_vm(state, spec, policy="spread")
    return state


def bind_dfs_volumes(state: ClusterState, storage: str = "local", volume_size_gb: float = 100.0):
    """Attach/locate the DFS data volume for every VM; returns (state, map)."""
    hdfs: dict[str, str] = {}
    for vm_id in sorted(state.instances):
        vm = state.instances[vm_id]
        if storage == "local":
            hdfs[vm_id] = next(v for v in vm.volumes if state.volumes[v].kind == ROOT)
        else:
            kind = NETWORKED if storage == "networked" else LOCAL_PERSISTENT
            state, vol = attach_volume(state, vm_id, kind, volume_size_gb)
            hdfs[vm_id] = vol.id
    return state, hdfs


def dfs_cluster(n_hosts=5, vms_per_host=1, storage="local", spec=PINNED_VM, **topology_kwargs):
    state = placed_cluster(n_hosts, vms_per_host, spec, **topology_kwargs)
    return bind_dfs_volumes(state, storage)
