"""Rack-aware replica placement over virtual racks.

Each physical host is one virtual rack, so the placement policy (writer
first, second replica off-rack, third on the second's rack) guarantees
two failure domains per block. On a single host, placement still spreads
over distinct VMs but warns: losing that host loses every copy, which is
exactly the co-location hazard the virtual racks exist to prevent.
"""

import random
import warnings

from storagesim.dfs import DfsConfig, place_file, rack_spread
from storagesim.placement import ClusterState, VmSpec, place_vm
from storagesim.topology import reference_cluster

SMALL = VmSpec(vcpus=1, ram_gb=1.0, root_disk_gb=10.0, migratable=False)


def build(n_hosts, vms_per_host):
    state = ClusterState.from_topology(reference_cluster(n_hosts))
    for _ in range(n_hosts * vms_per_host):
        state, _ = place_vm(state, SMALL, policy="spread")
    return state


state = build(n_hosts=5, vms_per_host=1)
f = place_file(state, "part-00000", 200.0, "vm001", DfsConfig(block_size_mb=64.0, replication_factor=3), random.Random(7))
print("five hosts, rf=3, 200 MB file in 64 MB blocks:")
for block in f.blocks:
    print(f"  {block.block_id} ({block.bytes_mb:.0f} MB): {[f'{vm}@{rack}' for vm, rack in block.replicas]}")
print(f"minimum racks any block spans: {rack_spread(f)}")

print("\n1000 seeded placements, worst-case rack spread:")
worst = min(
    rack_spread(place_file(state, f"f{i}", 64.0, "vm003", DfsConfig(replication_factor=3), random.Random(i)))
    for i in range(1000)
)
print(f"  {worst} (never below 2 on a multi-rack cluster)")

print("\nthe degenerate case: three VMs packed on one host")
single = build(n_hosts=1, vms_per_host=3)
with warnings.catch_warnings(record=True) as caught:
    warnings.simplefilter("always")
    f = place_file(single, "risky", 64.0, "vm001", DfsConfig(replication_factor=3), random.Random(0))
print(f"  replicas: {[vm for vm, _ in f.blocks[0].replicas]} all on rack h01")
print(f"  warning raised: {caught[0].message}")
