import random

import pytest

from oracles import bottleneck_violations, maxmin_fill_oracle
from storagesim.errors import SimulationStalledError, UnknownResourceError, UnresolvablePathError
from storagesim.simengine import (
    FlowSpec,
    IoFlow,
    Resource,
    SimTrace,
    Simulation,
    TraceEvent,
    allocate_rates,
    build_resources,
    run,
    verify_trace,
)
from storagesim.topology import reference_cluster
from storagesim.volumes import ResourcePath


def flow(fid, resources, size=1000.0, direction="write", remaining=None):
    return IoFlow(
        flow_id=fid,
        path=ResourcePath(tuple(resources), direction),
        size_mb=size,
        remaining_mb=size if remaining is None else remaining,
    )


def res(rid, cap):
    return Resource(rid, read_capacity=cap, write_capacity=cap)


def test_single_flow_takes_full_capacity():
    rates = allocate_rates([flow("f1", ["d1"])], {"d1": 100.0})
    assert rates == {"f1": 100.0}


def test_symmetric_flows_split_the_bottleneck_link():
    # five flows share a 125 MB/s link, each also crossing its own 160 MB/s disk
    flows = [flow(f"f{i}", ["link", f"d{i}"]) for i in range(5)]
    caps = {"link": 125.0} | {f"d{i}": 160.0 for i in range(5)}
    rates = allocate_rates(flows, caps)
    assert all(r == 25.0 for r in rates.values())


def test_two_link_example_matches_progressive_filling():
    # A crosses link1 only; B crosses link1 and the narrow link2
    flows = [flow("A", ["link1"]), flow("B", ["link1", "link2"])]
    rates = allocate_rates(flows, {"link1": 100.0, "link2": 30.0})
    assert rates["B"] == pytest.approx(30.0, abs=1e-12)
    assert rates["A"] == pytest.approx(70.0, abs=1e-12)


def test_unknown_resource_is_an_error():
    with pytest.raises(UnknownResourceError):
        allocate_rates([flow("f1", ["ghost"])], {"d1": 100.0})


def test_allocation_matches_oracle_on_random_small_instances():
    rng = random.Random(11)
    for trial in range(200):
        n_res = rng.randint(1, 4)
        n_flows = rng.randint(1, 5)
        caps = {f"r{i}": rng.choice([10.0, 25.0, 50.0, 100.0, 125.0]) for i in range(n_res)}
        paths = {}
        for j in range(n_flows):
            k = rng.randint(1, n_res)
            paths[f"f{j}"] = tuple(rng.sample(sorted(caps), k))
        flows = [flow(fid, list(p)) for fid, p in paths.items()]
        got = allocate_rates(flows, caps)
        want = maxmin_fill_oracle(paths, caps)
        for fid in paths:
            assert got[fid] == pytest.approx(want[fid], abs=1e-9), (trial, paths, caps)
        assert bottleneck_violations(paths, caps, got) == []


def test_adding_a_flow_to_the_shared_bottleneck_never_raises_other_rates():
    # star instances: every flow crosses one shared resource plus its own
    # private one; joining the shared pool can only slow the others down.
    # (In general multi-resource topologies max-min is NOT pointwise
    # monotone: a newcomer can slow a competitor elsewhere and thereby
    # free a bottleneck.)
    rng = random.Random(23)
    for _ in range(100):
        n = rng.randint(1, 5)
        caps = {"shared": rng.choice([50.0, 100.0, 125.0])}
        paths = {}
        for j in range(n):
            caps[f"p{j}"] = rng.choice([15.0, 40.0, 200.0])
            paths[f"f{j}"] = ("shared", f"p{j}")
        base = allocate_rates([flow(f, list(p)) for f, p in paths.items()], caps)
        caps["px"] = rng.choice([15.0, 40.0, 200.0])
        paths_plus = paths | {"extra": ("shared", "px")}
        bigger = allocate_rates([flow(f, list(p)) for f, p in paths_plus.items()], caps)
        for fid in paths:
            assert bigger[fid] <= base[fid] + 1e-9


def test_run_single_flow_completion_time():
    trace = run({"d1": res("d1", 100.0)}, [(FlowSpec("f1", ResourcePath(("d1",), "write"), 1000.0), 0.0)])
    rec = trace.flows["f1"]
    assert rec.end_time == 10.0
    assert verify_trace(trace) == []


def test_run_independent_disks_finish_together():
    resources = {f"d{i}": res(f"d{i}", 100.0) for i in range(5)}
    workload = [(FlowSpec(f"f{i}", ResourcePath((f"d{i}",), "write"), 1000.0), 0.0) for i in range(5)]
    trace = run(resources, workload)
    assert all(trace.flows[f"f{i}"].end_time == 10.0 for i in range(5))


def test_run_shared_link_fair_share_completion():
    resources = {"link": res("link", 125.0)}
    workload = [(FlowSpec(f"f{i}", ResourcePath(("link",), "write"), 1000.0), 0.0) for i in range(5)]
    trace = run(resources, workload)
    assert all(trace.flows[f"f{i}"].end_time == 40.0 for i in range(5))
    assert verify_trace(trace) == []


def test_rates_rise_when_a_flow_departs():
    # one flow is half the size: after it finishes the other takes the full link
    resources = {"link": res("link", 100.0)}
    trace = run(
        resources,
        [
            (FlowSpec("short", ResourcePath(("link",), "write"), 500.0), 0.0),
            (FlowSpec("long", ResourcePath(("link",), "write"), 1000.0), 0.0),
        ],
    )
    assert trace.flows["short"].end_time == 10.0  # 500 at 50 MB/s
    assert trace.flows["long"].end_time == 15.0  # 500 left, now at 100 MB/s
    assert verify_trace(trace) == []


def test_arrivals_mid_flight_reallocate():
    resources = {"link": res("link", 100.0)}
    trace = run(
        resources,
        [
            (FlowSpec("first", ResourcePath(("link",), "write"), 1000.0), 0.0),
            (FlowSpec("late", ResourcePath(("link",), "write"), 500.0), 5.0),
        ],
    )
    # first: 5 s alone (500 MB) + 10 s shared (500 MB at 50)
    assert trace.flows["first"].end_time == 15.0
    assert trace.flows["late"].end_time == 15.0
    assert verify_trace(trace) == []


def test_mixed_directions_share_the_smaller_disk_pool():
    disk = Resource("d1", read_capacity=200.0, write_capacity=100.0)
    trace = run(
        {"d1": disk},
        [
            (FlowSpec("r", ResourcePath(("d1",), "read"), 100.0), 0.0),
            (FlowSpec("w", ResourcePath(("d1",), "write"), 100.0), 0.0),
        ],
    )
    # mixed pool is min(200, 100) = 100, split 50/50
    assert trace.flows["r"].end_time == 2.0
    assert verify_trace(trace) == []


def test_on_complete_hook_can_inject_flows():
    resources = {"d1": res("d1", 100.0)}

    def chain(sim, records, now):
        if records[0].flow_id == "first":
            sim.add_flow(FlowSpec("second", ResourcePath(("d1",), "write"), 500.0), now)

    trace = run(resources, [(FlowSpec("first", ResourcePath(("d1",), "write"), 1000.0), 0.0)], chain)
    assert trace.flows["second"].start_time == 10.0
    assert trace.flows["second"].end_time == 15.0


def test_determinism_byte_identical_traces():
    topo = reference_cluster()
    resources = build_resources(topo)
    workload = [
        (FlowSpec(f"f{i}", ResourcePath(("link:mgmt-h01", "link:mgmt-controller", "disk:controller:disk1"), "write"), 700.0), float(i))
        for i in range(4)
    ]
    a = run(resources, list(workload)).csv_lines()
    b = run(resources, list(workload)).csv_lines()
    assert a == b


def test_work_conservation_some_resource_saturated():
    rng = random.Random(5)
    caps = {f"r{i}": rng.choice([50.0, 100.0]) for i in range(3)}
    paths = {f"f{j}": tuple(rng.sample(sorted(caps), rng.randint(1, 3))) for j in range(4)}
    rates = allocate_rates([flow(f, list(p)) for f, p in paths.items()], caps)
    usage = {r: sum(rates[f] for f, p in paths.items() if r in p) for r in caps}
    assert any(abs(usage[r] - caps[r]) <= 1e-9 * caps[r] for r in caps)


def test_unresolvable_path_rejected_at_add():
    sim = Simulation({"d1": res("d1", 10.0)})
    with pytest.raises(UnresolvablePathError):
        sim.add_flow(FlowSpec("f", ResourcePath(("ghost",), "read"), 1.0), 0.0)


def test_zero_capacity_stalls_cleanly():
    sim = Simulation({"d1": res("d1", 0.0)})
    sim.add_flow(FlowSpec("f", ResourcePath(("d1",), "read"), 10.0), 0.0)
    with pytest.raises(SimulationStalledError):
        sim.run()


def test_verify_trace_flags_hand_built_overcapacity():
    from storagesim.simengine import FlowRecord

    resources = {"link": res("link", 100.0)}
    trace = SimTrace(resources=resources)
    path = ResourcePath(("link",), "write")
    trace.flows = {
        "a": FlowRecord("a", path, 600.0, 0.0, 10.0, {}),
        "b": FlowRecord("b", path, 600.0, 0.0, 10.0, {}),
    }
    trace.events = [
        TraceEvent(0.0, "flow_start", "a", "", 600.0),
        TraceEvent(0.0, "flow_start", "b", "", 600.0),
        TraceEvent(0.0, "rate_change", "a", "", 60.0),
        TraceEvent(0.0, "rate_change", "b", "", 60.0),  # 120 > 100: oversubscribed
        TraceEvent(10.0, "flow_end", "a", "", 600.0),
        TraceEvent(10.0, "flow_end", "b", "", 600.0),
    ]
    codes = {v.code for v in verify_trace(trace)}
    assert "capacity" in codes


def test_verify_trace_flags_decreasing_timestamps():
    trace = SimTrace(resources={"d1": res("d1", 100.0)})
    from storagesim.simengine import FlowRecord

    path = ResourcePath(("d1",), "write")
    trace.flows = {"a": FlowRecord("a", path, 100.0, 0.0, 1.0, {})}
    trace.events = [
        TraceEvent(5.0, "flow_start", "a", "", 100.0),
        TraceEvent(1.0, "rate_change", "a", "", 100.0),
        TraceEvent(2.0, "flow_end", "a", "", 100.0),
    ]
    codes = {v.code for v in verify_trace(trace)}
    assert "monotonicity" in codes


def test_verify_trace_flags_byte_shortfall():
    from storagesim.simengine import FlowRecord

    trace = SimTrace(resources={"d1": res("d1", 100.0)})
    path = ResourcePath(("d1",), "write")
    trace.flows = {"a": FlowRecord("a", path, 1000.0, 0.0, 5.0, {})}
    trace.events = [
        TraceEvent(0.0, "flow_start", "a", "", 1000.0),
        TraceEvent(0.0, "rate_change", "a", "", 100.0),
        TraceEvent(5.0, "flow_end", "a", "", 1000.0),  # only 500 MB moved
    ]
    codes = {v.code for v in verify_trace(trace)}
    assert "byte-conservation" in codes


def test_csv_round_trip_format():
    trace = run({"d1": res("d1", 100.0)}, [(FlowSpec("f1", ResourcePath(("d1",), "write"), 100.0), 0.0)])
    lines = trace.csv_lines()
    assert lines[0] == "time,event_kind,flow_id,resource_id,value"
    kinds = [line.split(",")[1] for line in lines[1:]]
    assert kinds == ["flow_start", "rate_change", "flow_end"]


def test_duplicate_hops_reserve_capacity_once():
    # a relayed path may name the same link twice; the fluid model pools it
    rates = allocate_rates([flow("f1", ["link", "link", "disk"])], {"link": 100.0, "disk": 80.0})
    assert rates["f1"] == 80.0


def test_verify_trace_flags_start_without_end():
    from storagesim.simengine import FlowRecord

    trace = SimTrace(resources={"d1": res("d1", 100.0)})
    path = ResourcePath(("d1",), "write")
    trace.flows = {"a": FlowRecord("a", path, 100.0, 0.0, None, {})}
    trace.events = [
        TraceEvent(0.0, "flow_start", "a", "", 100.0),
        TraceEvent(0.0, "rate_change", "a", "", 100.0),
    ]
    codes = {v.code for v in verify_trace(trace)}
    assert "unmatched-flow" in codes


def test_completion_ties_processed_together_in_flow_id_order():
    resources = {"link": res("link", 100.0)}
    workload = [(FlowSpec(f"f{i}", ResourcePath(("link",), "write"), 500.0), 0.0) for i in (2, 0, 1)]
    trace = run(resources, workload)
    ends = [e for e in trace.events if e.kind == "flow_end"]
    assert [e.flow_id for e in ends] == ["f0", "f1", "f2"]
    assert len({e.time for e in ends}) == 1
