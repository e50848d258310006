import random

import pytest

from storagesim.cost import (
    EBS_PROVISIONED,
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
from storagesim.simengine import FlowRecord, SimTrace
from storagesim.volumes import ResourcePath

TABLE = PriceTable()  # the canonical 2013 prices


def usage(hours, ops, billing):
    return UsageRecord(instance_hours=hours, io_ops=ops, storage=billing)


def test_one_hour_million_ops_on_networked_storage():
    report = compute_cost(usage(1.0, 1_000_000, StorageBilling(EBS_STANDARD)), TABLE)
    assert report.instance_cost == 0.24
    assert report.storage_cost == pytest.approx(0.10)
    assert report.total == pytest.approx(0.34)


def test_local_storage_costs_only_the_instance():
    report = compute_cost(usage(1.0, 10_000_000, StorageBilling(EPHEMERAL_LOCAL)), TABLE)
    assert report.total == 0.24


def test_two_hours_three_million_ops():
    report = compute_cost(usage(2.0, 3_000_000, StorageBilling(EBS_STANDARD)), TABLE)
    assert report.instance_cost == pytest.approx(0.48)
    assert report.storage_cost == pytest.approx(0.30)
    assert report.total == pytest.approx(0.78)


def test_fractional_hours_round_up():
    report = compute_cost(usage(1.01, 0, StorageBilling(EPHEMERAL_LOCAL)), TABLE)
    assert report.instance_cost == pytest.approx(0.48)


def test_provisioned_iops_billing():
    billing = StorageBilling(EBS_PROVISIONED, provisioned_iops=1000.0, months=2.0)
    report = compute_cost(usage(1.0, 0, billing), TABLE)
    assert report.storage_cost == pytest.approx(1000.0 * 2.0 * 0.10)


def test_cost_linear_in_io_ops_for_standard_and_flat_for_local():
    rng = random.Random(9)
    for _ in range(100):
        ops = rng.randrange(0, 10_000_000)
        k = rng.randint(2, 5)
        std_one = compute_cost(usage(1.0, ops, StorageBilling(EBS_STANDARD)), TABLE).storage_cost
        std_k = compute_cost(usage(1.0, k * ops, StorageBilling(EBS_STANDARD)), TABLE).storage_cost
        assert std_k == pytest.approx(k * std_one, abs=1e-12)
        local = compute_cost(usage(1.0, ops, StorageBilling(EPHEMERAL_LOCAL)), TABLE)
        assert local.storage_cost == 0.0


def test_savings_reproduces_the_29_percent_figure():
    ephemeral = compute_cost(usage(1.0, 1_000_000, StorageBilling(EPHEMERAL_LOCAL)), TABLE)
    ebs = compute_cost(usage(1.0, 1_000_000, StorageBilling(EBS_STANDARD)), TABLE)
    assert savings(ephemeral, ebs) == pytest.approx(0.10 / 0.34)
    assert savings(ephemeral, ebs) == pytest.approx(0.2941, abs=1e-4)


def test_savings_identities():
    a = CostReport("x", 0.24, 0.0)
    assert savings(a, a) == 0.0
    cheap = CostReport("a", 0.48, 0.0)
    pricey = CostReport("b", 0.48, 0.30)
    assert savings(cheap, pricey) == pytest.approx(0.30 / 0.78)
    assert savings(cheap, pricey) == pytest.approx(0.3846, abs=1e-4)


def test_savings_scale_invariant():
    rng = random.Random(2)
    for _ in range(100):
        cheap_total = rng.uniform(0.01, 10.0)
        pricey_total = cheap_total + rng.uniform(0.01, 10.0)
        k = rng.uniform(0.1, 1000.0)
        base = savings(CostReport("a", cheap_total, 0.0), CostReport("b", pricey_total, 0.0))
        scaled = savings(CostReport("a", k * cheap_total, 0.0), CostReport("b", k * pricey_total, 0.0))
        assert scaled == pytest.approx(base, rel=1e-9)


def test_savings_guards_zero_denominator():
    with pytest.raises(ValueError):
        savings(CostReport("a", 0.0, 0.0), CostReport("b", 0.0, 0.0))


def _trace_with_networked_flow(size_mb: float) -> SimTrace:
    trace = SimTrace()
    trace.flows["f"] = FlowRecord(
        "f",
        ResourcePath(("link:x", "disk:controller:disk1"), "write"),
        size_mb,
        0.0,
        1.0,
        {"volume_kind": "networked"},
    )
    return trace


def test_count_io_ops_empty_and_exact():
    assert count_io_ops(SimTrace()) == 0
    # 10 GB at 16 KB per op: 10 * 2^20 / 16
    assert count_io_ops(_trace_with_networked_flow(10.0 * 1024.0), op_size_kb=16.0) == 655_360
    assert count_io_ops(_trace_with_networked_flow(0.0)) == 0


def test_count_io_ops_ignores_local_flows_and_unfinished():
    trace = _trace_with_networked_flow(100.0)
    trace.flows["local"] = FlowRecord("local", ResourcePath(("disk:h01:disk1",), "write"), 100.0, 0.0, 1.0, {"volume_kind": "root"})
    trace.flows["open"] = FlowRecord("open", ResourcePath(("link:x",), "write"), 100.0, 0.0, None, {"volume_kind": "networked"})
    assert count_io_ops(trace, 64.0) == 1600  # only the finished networked flow


def test_op_size_calibration_hits_a_million_ops_per_hour_run():
    # the packaged cost walk-through moves 62500 MB in one instance-hour
    assert count_io_ops(_trace_with_networked_flow(62_500.0), op_size_kb=64.0) == 1_000_000
