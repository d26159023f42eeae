"""Plan construction: analytic costs, dependency structure, chunking."""

import numpy as np
import pytest
from fractions import Fraction

from rocesim import (
    build_clos,
    build_single_switch,
    chunk_pipeline,
    dump_plan_csv,
    lower_bound_ns,
    plan_allreduce_1d,
    plan_allreduce_2d,
    plan_alltoall,
    plan_incast,
)
from rocesim.collectives import (
    AR_1D,
    AR_2D,
    VIA_SCALE_OUT,
    VIA_SCALE_UP,
    analytic_sent_bytes,
    verify_cost,
)

MB = 10**6


class TestIncast:
    def test_seven_senders_make_seven_flows(self):
        topo = build_single_switch(8)
        plan = plan_incast(topo, list(range(1, 8)), 0, 10 * MB)
        assert plan.n_ops == 7
        assert plan.op_bytes.sum() == 70 * MB
        assert (plan.op_dst == 0).all()
        assert plan.op_pending.sum() == 0  # no dependencies

    def test_target_cannot_send_to_itself(self):
        topo = build_single_switch(8)
        with pytest.raises(ValueError):
            plan_incast(topo, [0, 1], 0, MB)

    def test_empty_senders_rejected(self):
        topo = build_single_switch(8)
        with pytest.raises(ValueError):
            plan_incast(topo, [], 0, MB)

    def test_analytic_bound_is_serialization_of_the_hot_link(self):
        topo = build_single_switch(8)
        plan = plan_incast(topo, list(range(1, 8)), 0, 10 * MB)
        # 70 MB through one 200 Gbps egress: 2.8 ms
        assert lower_bound_ns(plan, topo) == 2_800_000


class TestAllToAll:
    def test_eight_gpus_ten_mb_sends_1_25mb_per_peer(self):
        topo = build_single_switch(8)
        plan = plan_alltoall(topo, 10 * MB)
        assert plan.n_ops == 8 * 7
        assert (plan.op_bytes == 1_250_000).all()
        verify_cost(plan)

    def test_per_npu_cost(self):
        topo = build_single_switch(8)
        plan = plan_alltoall(topo, 10 * MB)
        assert (plan.sent_bytes_per_npu() == 7 * 1_250_000).all()

    def test_two_npus_exchange_half_each(self):
        topo = build_single_switch(2)
        plan = plan_alltoall(topo, 2 * MB)
        assert plan.n_ops == 2
        assert (plan.op_bytes == MB).all()

    def test_chunked_plan_has_full_barriers(self):
        topo = build_single_switch(8)
        plan = plan_alltoall(topo, 10 * MB, n_chunks=4)
        assert plan.n_ops == 4 * 56
        # grain is P * n_chunks bytes; 10 MB needs no padding
        assert plan.total_bytes == 10 * MB
        assert (plan.op_bytes == 312_500).all()  # 1.25 MB per peer, 4 chunks
        # chunk 0 free, later chunks gated on the previous chunk's group
        for c in range(4):
            ops = plan.op_chunk == c
            if c == 0:
                assert (plan.op_pending[ops] == 0).all()
            else:
                assert (plan.op_pending[ops] == 1).all()
        plan.assert_acyclic()

    def test_needs_two_npus(self):
        topo = build_single_switch(2)
        with pytest.raises(ValueError):
            plan_alltoall(topo, MB, npus=[0])


class TestAllReduce1D:
    def test_four_npus_four_mb_costs_six_mb_per_npu(self):
        topo = build_single_switch(4)
        plan = plan_allreduce_1d(topo, 4 * MB)
        # reduce-scatter 3 x 1MB plus all-gather 3 x 1MB
        assert (plan.sent_bytes_per_npu() == 6 * MB).all()
        verify_cost(plan)

    def test_two_npus_degenerate_exchange(self):
        topo = build_single_switch(2)
        plan = plan_allreduce_1d(topo, 2 * MB)
        assert plan.n_ops == 4
        assert (plan.op_bytes == MB).all()

    def test_128_gpus_128mb_sends_254mb_all_nic(self):
        topo = build_single_switch(128)
        plan = plan_allreduce_1d(topo, 128 * MB, n_chunks=4)
        per_npu = plan.sent_bytes_per_npu()
        assert (per_npu == 2 * 127 * MB).all()
        assert (plan.op_via == VIA_SCALE_OUT).all()
        assert (plan.nic_bytes_per_npu() == per_npu).all()

    def test_all_gather_waits_on_own_segment(self):
        topo = build_single_switch(4)
        plan = plan_allreduce_1d(topo, 4 * MB)
        ag = plan.op_stage == 1
        assert (plan.op_pending[ag] >= 1).all()
        plan.assert_acyclic()


class TestAllReduce2D:
    def setup_method(self):
        self.topo = build_clos(racks=8, servers_per_rack=2, npus_per_server=8)

    def test_stage_shards(self):
        # 128 GPUs, L=8, N=16: stage-2 shard is S/8, per-peer segment S/128
        plan = plan_allreduce_2d(self.topo, 128 * MB)
        s2 = plan.op_stage == 1
        assert (plan.op_bytes[s2] == 128 * MB // (8 * 16)).all()
        s1 = plan.op_stage == 0
        assert (plan.op_bytes[s1] == 128 * MB // 8).all()
        verify_cost(plan)

    def test_local_stages_ride_scale_up(self):
        plan = plan_allreduce_2d(self.topo, 128 * MB)
        local = (plan.op_stage == 0) | (plan.op_stage == 3)
        assert (plan.op_via[local] == VIA_SCALE_UP).all()
        assert (plan.op_via[~local] == VIA_SCALE_OUT).all()

    def test_nic_bytes_are_an_eighth_of_1d_in_shard_terms(self):
        p1 = plan_allreduce_1d(build_single_switch(128), 128 * MB)
        p2 = plan_allreduce_2d(self.topo, 128 * MB)
        # the buffer handed to the NIC stage is exactly S/L
        assert Fraction(p2.nic_level_buffer_bytes(), p1.nic_level_buffer_bytes()) \
            == Fraction(1, 8)
        # sent-byte accounting carries the (N-1)/N vs (P-1)/P factors
        ratio = Fraction(int(p2.nic_bytes_per_npu()[0]),
                         int(p1.nic_bytes_per_npu()[0]))
        assert ratio == Fraction(2 * 15 * MB, 2 * 127 * MB)
        assert abs(float(ratio) - 1 / 8) < 0.01

    def test_degenerate_single_gpu_servers_match_1d(self):
        topo = build_clos(racks=2, servers_per_rack=2, npus_per_server=1,
                          spines=2)
        p2 = plan_allreduce_2d(topo, 4 * MB)
        p1 = plan_allreduce_1d(topo, 4 * MB)
        assert p2.kind == AR_2D
        assert p2.n_ops == p1.n_ops
        assert sorted(zip(p2.op_src, p2.op_dst, p2.op_bytes)) == sorted(
            zip(p1.op_src, p1.op_dst, p1.op_bytes)
        )

    def test_dependency_structure_drains(self):
        plan = plan_allreduce_2d(self.topo, 16 * MB, n_chunks=4)
        plan.assert_acyclic()

    def test_rejects_topology_without_scale_up(self):
        with pytest.raises(ValueError):
            plan_allreduce_2d(build_single_switch(8), MB)


class TestChunkPipeline:
    def test_one_chunk_is_identity(self):
        topo = build_single_switch(8)
        plan = plan_alltoall(topo, 10 * MB)
        assert chunk_pipeline(plan, topo, 1) is plan

    def test_rechunking_preserves_cost(self):
        topo = build_single_switch(8)
        plan = plan_alltoall(topo, 10 * MB)
        plan4 = chunk_pipeline(plan, topo, 4)
        assert plan4.n_chunks == 4
        assert plan4.n_ops == 4 * plan.n_ops
        assert plan4.sent_bytes_per_npu().sum() >= plan.sent_bytes_per_npu().sum()
        verify_cost(plan4)

    def test_2d_chunks_pipeline_stages(self):
        topo = build_clos(racks=2)
        plan = plan_allreduce_2d(topo, 32 * MB, n_chunks=4)
        # chunk c stage k depends on (c, k-1) and (c-1, k)
        later = (plan.op_chunk > 0) & (plan.op_stage > 0)
        assert (plan.op_pending[later] == 2).all()
        plan.assert_acyclic()

    def test_bad_chunk_count(self):
        topo = build_single_switch(4)
        with pytest.raises(ValueError):
            plan_alltoall(topo, MB, n_chunks=0)


class TestPadding:
    def test_indivisible_total_padded_to_grain(self):
        topo = build_single_switch(8)
        plan = plan_alltoall(topo, 10 * MB + 1, n_chunks=4)
        grain = 8 * 4
        assert plan.total_bytes % grain == 0
        assert plan.total_bytes >= 10 * MB + 1
        assert plan.requested_bytes == 10 * MB + 1
        # padding counts as traffic: every ordered pair moves total/P
        assert plan.op_bytes.sum() == 7 * plan.total_bytes

    def test_zero_bytes_rejected(self):
        topo = build_single_switch(8)
        with pytest.raises(ValueError):
            plan_alltoall(topo, 0)


class TestEcmpSpread:
    def test_distinct_ops_spread_over_spines(self):
        topo = build_clos(racks=8)
        plan = plan_alltoall(topo, 128 * MB, n_chunks=4)
        cross = plan.op_spine[
            (plan.op_src // 16 != plan.op_dst // 16)
        ]
        counts = np.bincount(cross, minlength=8)
        assert (counts > 0).all()
        assert counts.max() < 2.0 * counts.min()


class TestPlanDump:
    def test_csv_schema(self, tmp_path):
        topo = build_single_switch(4)
        plan = plan_allreduce_1d(topo, 4 * MB, n_chunks=2)
        path = tmp_path / "plan.csv"
        dump_plan_csv(plan, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "op_id,src,dst,bytes,stage,chunk,deps"
        assert len(lines) == plan.n_ops + 1
        assert "reduce_scatter" in lines[1]


class TestLowerBound:
    def test_bound_scales_with_bytes(self):
        topo = build_single_switch(8)
        small = plan_alltoall(topo, 8 * MB)
        large = plan_alltoall(topo, 16 * MB)
        assert lower_bound_ns(large, topo) == 2 * lower_bound_ns(small, topo)

    def test_2d_bound_smaller_than_1d_on_clos(self):
        topo = build_clos(racks=8)
        p1 = plan_allreduce_1d(topo, 128 * MB)
        p2 = plan_allreduce_2d(topo, 128 * MB)
        assert lower_bound_ns(p2, topo) < lower_bound_ns(p1, topo)
