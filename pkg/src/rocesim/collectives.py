"""Collective operations as dependency DAGs of point-to-point sends.

Each plan is a table of send ops (src NPU, dst NPU, bytes, network level)
plus a set of completion *groups*: an op decrements its groups when it
finishes, and an op launches once every group it depends on has drained.
Group-level dependencies express both chunk barriers and per-segment
stage handoffs without quadratic edge lists.

Algorithms (all "direct", switch-friendly):

* incast            - independent flows into one target;
* all-to-all        - every NPU sends total/P to every other NPU, each
                      chunk issued as one burst with a full barrier before
                      the next chunk;
* 1D all-reduce     - direct reduce-scatter over all P NPUs, then direct
                      all-gather; an NPU's all-gather sends wait on its
                      segment's reduce-scatter;
* 2D all-reduce     - reduce-scatter inside each server over the scale-up
                      switch, reduce-scatter across same-rail NPUs over the
                      NICs, then the two all-gathers in reverse order, with
                      per-shard handoffs between stages.

Chunking splits a collective into equal chunks processed as a pipeline:
chunk c of stage k waits on (chunk c, stage k-1) and (chunk c-1, stage k),
so different network levels run concurrently on different chunks.

Reduction compute at the NPUs is modeled as free; compute time belongs to
the workload layer.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .topology import NodeKind, Topology, ecmp_select_array

INCAST = "incast"
ALLTOALL = "alltoall"
AR_1D = "allreduce_1d"
AR_2D = "allreduce_2d"

# stage labels per kind
STAGE_NAMES = {
    INCAST: ["send"],
    ALLTOALL: ["a2a"],
    AR_1D: ["reduce_scatter", "all_gather"],
    AR_2D: ["rs_local", "rs_global", "ag_global", "ag_local"],
}

VIA_SCALE_OUT = 0
VIA_SCALE_UP = 1


@dataclass
class SendOp:
    """One point-to-point send; a row view into a plan's op table."""

    op_id: int
    src: int
    dst: int
    bytes: int
    stage: int
    chunk: int
    deps: tuple[str, ...]


@dataclass
class CollectivePlan:
    kind: str
    requested_bytes: int
    total_bytes: int  # after grain padding; padding counts as traffic
    n_chunks: int
    npus: np.ndarray
    op_src: np.ndarray
    op_dst: np.ndarray
    op_bytes: np.ndarray
    op_tag: np.ndarray
    op_stage: np.ndarray
    op_chunk: np.ndarray
    op_via: np.ndarray
    op_spine: np.ndarray
    op_deps: np.ndarray       # (n, 3) local group ids, -1 padded
    op_groups: np.ndarray     # (n, 3) membership group ids, -1 padded
    op_pending: np.ndarray
    group_counts: np.ndarray
    group_wstart: np.ndarray
    group_wlen: np.ndarray
    waiter_ops: np.ndarray
    group_labels: list[str]
    build_args: dict = field(default_factory=dict)

    @property
    def n_ops(self) -> int:
        return len(self.op_src)

    @property
    def n_groups(self) -> int:
        return len(self.group_counts)

    def sent_bytes_per_npu(self) -> np.ndarray:
        """Total bytes each NPU sends; must equal the analytic cost."""
        out = np.zeros(int(self.npus.max()) + 1, dtype=np.int64)
        np.add.at(out, self.op_src, self.op_bytes)
        return out[self.npus]

    def nic_bytes_per_npu(self) -> np.ndarray:
        out = np.zeros(int(self.npus.max()) + 1, dtype=np.int64)
        scale_out = self.op_via == VIA_SCALE_OUT
        np.add.at(out, self.op_src[scale_out], self.op_bytes[scale_out])
        return out[self.npus]

    def nic_level_buffer_bytes(self) -> int:
        """Data volume each NPU hands to the NIC-level stage of the
        algorithm (the full buffer for flat collectives, one shard for the
        hierarchical all-reduce)."""
        if self.kind == AR_2D:
            return self.total_bytes // self.build_args["scale_up_size"]
        return self.total_bytes

    def ops(self) -> list[SendOp]:
        """Materialize row views (small plans / debugging only)."""
        out = []
        for i in range(self.n_ops):
            deps = tuple(
                self.group_labels[g] for g in self.op_deps[i] if g >= 0
            )
            out.append(
                SendOp(
                    op_id=int(self.op_tag[i]),
                    src=int(self.op_src[i]),
                    dst=int(self.op_dst[i]),
                    bytes=int(self.op_bytes[i]),
                    stage=int(self.op_stage[i]),
                    chunk=int(self.op_chunk[i]),
                    deps=deps,
                )
            )
        return out

    def assert_acyclic(self) -> None:
        """Dependency structure must drain: simulate group completion."""
        counts = self.group_counts.copy()
        pending = self.op_pending.copy()
        done = np.zeros(self.n_ops, dtype=bool)
        ready = list(np.nonzero(pending == 0)[0])
        launched = 0
        while ready:
            op = ready.pop()
            if done[op]:
                continue
            done[op] = True
            launched += 1
            for g in self.op_groups[op]:
                if g < 0:
                    continue
                counts[g] -= 1
                if counts[g] == 0:
                    s = self.group_wstart[g]
                    for w in self.waiter_ops[s : s + self.group_wlen[g]]:
                        pending[w] -= 1
                        if pending[w] == 0:
                            ready.append(int(w))
        if launched != self.n_ops:
            raise ValueError(
                f"plan does not drain: {launched} of {self.n_ops} ops launchable"
            )


def pad_to_grain(total_bytes: int, grain: int) -> int:
    if total_bytes <= 0:
        raise ValueError(f"collective size must be positive, got {total_bytes}")
    return ((total_bytes + grain - 1) // grain) * grain


def _csr(op_deps: np.ndarray, n_ops: int, n_groups: int):
    """Invert op->groups dependencies into group->waiting-ops lists."""
    rows = np.repeat(np.arange(n_ops, dtype=np.int64), op_deps.shape[1])
    flat = op_deps.ravel()
    mask = flat >= 0
    gids = flat[mask]
    rows = rows[mask]
    order = np.argsort(gids, kind="stable")
    gids = gids[order]
    waiter_ops = rows[order]
    wlen = np.bincount(gids, minlength=n_groups).astype(np.int64)
    wstart = np.zeros(n_groups, dtype=np.int64)
    np.cumsum(wlen[:-1], out=wstart[1:])
    return wstart, wlen, waiter_ops


def _finish_plan(
    kind: str,
    topology: Topology,
    npus: np.ndarray,
    requested: int,
    total: int,
    n_chunks: int,
    op_src,
    op_dst,
    op_bytes,
    op_stage,
    op_chunk,
    op_via,
    op_deps,
    op_groups,
    group_counts,
    group_labels,
    tag_base: int,
    build_args: dict,
) -> CollectivePlan:
    n = len(op_src)
    # groups that never receive members cannot gate anything
    empty = group_counts == 0
    if empty.any():
        drop = np.isin(op_deps, np.nonzero(empty)[0])
        op_deps = np.where(drop, -1, op_deps)
    op_pending = (op_deps >= 0).sum(axis=1).astype(np.int64)
    wstart, wlen, waiters = _csr(op_deps, n, len(group_counts))
    op_tag = np.arange(tag_base, tag_base + n, dtype=np.int64)

    n_spines = max(1, topology.spines)
    if topology.kind == "clos" and topology.spines > 0:
        per_rack = topology.servers_per_rack * topology.npus_per_server
        cross = (op_src // per_rack != op_dst // per_rack) & (op_via == VIA_SCALE_OUT)
        spine = np.zeros(n, dtype=np.int64)
        if cross.any():
            spine[cross] = ecmp_select_array(
                op_src[cross], op_dst[cross], op_tag[cross], n_spines
            )
    else:
        spine = np.zeros(n, dtype=np.int64)

    plan = CollectivePlan(
        kind=kind,
        requested_bytes=requested,
        total_bytes=total,
        n_chunks=n_chunks,
        npus=npus,
        op_src=op_src.astype(np.int64),
        op_dst=op_dst.astype(np.int64),
        op_bytes=op_bytes.astype(np.int64),
        op_tag=op_tag,
        op_stage=op_stage.astype(np.int64),
        op_chunk=op_chunk.astype(np.int64),
        op_via=op_via.astype(np.int64),
        op_spine=spine,
        op_deps=op_deps.astype(np.int64),
        op_groups=op_groups.astype(np.int64),
        op_pending=op_pending,
        group_counts=group_counts.astype(np.int64),
        group_wstart=wstart,
        group_wlen=wlen,
        waiter_ops=waiters,
        group_labels=group_labels,
        build_args=build_args,
    )
    if (plan.op_bytes <= 0).any():
        raise ValueError("plan produced an empty send")
    return plan


def plan_incast(
    topology: Topology,
    senders: list[int],
    target: int,
    bytes_each: int,
    tag_base: int = 0,
) -> CollectivePlan:
    """Independent same-size flows from every sender into one target."""
    if not senders:
        raise ValueError("incast needs at least one sender")
    if target in senders:
        raise ValueError("incast target cannot be one of the senders")
    if bytes_each <= 0:
        raise ValueError("incast flow size must be positive")
    n = len(senders)
    zeros3 = np.full((n, 3), -1, dtype=np.int64)
    return _finish_plan(
        INCAST,
        topology,
        np.asarray(sorted(set(senders) | {target}), dtype=np.int64),
        requested=bytes_each * n,
        total=bytes_each * n,
        n_chunks=1,
        op_src=np.asarray(senders, dtype=np.int64),
        op_dst=np.full(n, target, dtype=np.int64),
        op_bytes=np.full(n, bytes_each, dtype=np.int64),
        op_stage=np.zeros(n, dtype=np.int64),
        op_chunk=np.zeros(n, dtype=np.int64),
        op_via=np.zeros(n, dtype=np.int64),
        op_deps=zeros3,
        op_groups=zeros3.copy(),
        group_counts=np.zeros(0, dtype=np.int64),
        group_labels=[],
        tag_base=tag_base,
        build_args={"senders": list(senders), "target": target,
                    "bytes_each": bytes_each},
    )


def _pairs(members: np.ndarray):
    """All ordered pairs (src, dst), src != dst, in deterministic order."""
    p = len(members)
    src = np.repeat(members, p - 1)
    dst = np.empty((p, p - 1), dtype=np.int64)
    for i in range(p):
        dst[i, :i] = members[:i]
        dst[i, i:] = members[i + 1 :]
    return src, dst.ravel()


def plan_alltoall(
    topology: Topology,
    total_bytes: int,
    npus: list[int] | None = None,
    n_chunks: int = 1,
    tag_base: int = 0,
) -> CollectivePlan:
    """Direct all-to-all: per-peer message = total/P, one burst per chunk,
    full barrier between chunks."""
    members = np.asarray(
        npus if npus is not None else range(topology.n_npus), dtype=np.int64
    )
    p = len(members)
    if p < 2:
        raise ValueError("all-to-all needs at least 2 NPUs")
    if n_chunks < 1:
        raise ValueError("chunk count must be >= 1")
    total = pad_to_grain(total_bytes, p * n_chunks)
    msg = total // (p * n_chunks)
    src1, dst1 = _pairs(members)
    per_chunk = len(src1)
    n = per_chunk * n_chunks

    op_src = np.tile(src1, n_chunks)
    op_dst = np.tile(dst1, n_chunks)
    op_bytes = np.full(n, msg, dtype=np.int64)
    op_stage = np.zeros(n, dtype=np.int64)
    op_chunk = np.repeat(np.arange(n_chunks, dtype=np.int64), per_chunk)
    op_via = np.zeros(n, dtype=np.int64)

    # group c = "chunk c fully delivered"; chunk c+1 waits on it
    group_counts = np.full(n_chunks, per_chunk, dtype=np.int64)
    group_labels = [f"chunk{c}" for c in range(n_chunks)]
    op_groups = np.full((n, 3), -1, dtype=np.int64)
    op_groups[:, 0] = op_chunk
    op_deps = np.full((n, 3), -1, dtype=np.int64)
    op_deps[per_chunk:, 0] = op_chunk[per_chunk:] - 1

    return _finish_plan(
        ALLTOALL, topology, members, total_bytes, total, n_chunks,
        op_src, op_dst, op_bytes, op_stage, op_chunk, op_via,
        op_deps, op_groups, group_counts, group_labels, tag_base,
        {"npus": members.tolist(), "total_bytes": total_bytes},
    )


def plan_allreduce_1d(
    topology: Topology,
    total_bytes: int,
    npus: list[int] | None = None,
    n_chunks: int = 1,
    tag_base: int = 0,
) -> CollectivePlan:
    """Direct reduce-scatter over all P NPUs then direct all-gather.

    An NPU's all-gather burst waits for its own segment's reduce-scatter;
    chunks pipeline within each stage.
    """
    members = np.asarray(
        npus if npus is not None else range(topology.n_npus), dtype=np.int64
    )
    p = len(members)
    if p < 2:
        raise ValueError("all-reduce needs at least 2 NPUs")
    if n_chunks < 1:
        raise ValueError("chunk count must be >= 1")
    total = pad_to_grain(total_bytes, p * n_chunks)
    seg = total // (p * n_chunks)
    rank_of = {int(m): r for r, m in enumerate(members)}

    src1, dst1 = _pairs(members)
    per_stage = len(src1)
    n = per_stage * 2 * n_chunks

    # Group layout per chunk c: [seg_rs(r, c) for r in range(p)] + rs_all(c)
    # + ag_all(c).
    gpc = p + 2
    group_counts = np.zeros(gpc * n_chunks, dtype=np.int64)
    group_labels = []
    for c in range(n_chunks):
        group_labels += [f"rs_seg{r}_c{c}" for r in range(p)]
        group_labels += [f"rs_all_c{c}", f"ag_all_c{c}"]

    op_src = np.empty(n, dtype=np.int64)
    op_dst = np.empty(n, dtype=np.int64)
    op_stage = np.empty(n, dtype=np.int64)
    op_chunk = np.empty(n, dtype=np.int64)
    op_groups = np.full((n, 3), -1, dtype=np.int64)
    op_deps = np.full((n, 3), -1, dtype=np.int64)

    dst_rank = np.array([rank_of[int(d)] for d in dst1], dtype=np.int64)
    src_rank = np.array([rank_of[int(s)] for s in src1], dtype=np.int64)
    for c in range(n_chunks):
        g0 = c * gpc
        rs = slice(2 * c * per_stage, (2 * c + 1) * per_stage)
        ag = slice((2 * c + 1) * per_stage, (2 * c + 2) * per_stage)
        # reduce-scatter: i sends segment r(j) to j
        op_src[rs] = src1
        op_dst[rs] = dst1
        op_stage[rs] = 0
        op_chunk[rs] = c
        op_groups[rs, 0] = g0 + dst_rank          # seg_rs(owner、chunk)
        op_groups[rs, 1] = g0 + p                 # rs_all(c)
        np.add.at(group_counts, op_groups[rs, 0], 1)
        group_counts[g0 + p] += per_stage
        if c > 0:
            op_deps[rs, 0] = (c - 1) * gpc + p    # rs_all(c-1)
        # all-gather: j broadcasts its reduced segment
        op_src[ag] = src1
        op_dst[ag] = dst1
        op_stage[ag] = 1
        op_chunk[ag] = c
        op_groups[ag, 0] = g0 + p + 1             # ag_all(c)
        group_counts[g0 + p + 1] += per_stage
        op_deps[ag, 0] = g0 + src_rank            # own segment reduced
        if c > 0:
            op_deps[ag, 1] = (c - 1) * gpc + p + 1  # ag_all(c-1)

    op_bytes = np.full(n, seg, dtype=np.int64)
    op_via = np.zeros(n, dtype=np.int64)
    return _finish_plan(
        AR_1D, topology, members, total_bytes, total, n_chunks,
        op_src, op_dst, op_bytes, op_stage, op_chunk, op_via,
        op_deps, op_groups, group_counts, group_labels, tag_base,
        {"npus": members.tolist(), "total_bytes": total_bytes},
    )


def plan_allreduce_2d(
    topology: Topology,
    total_bytes: int,
    n_chunks: int = 1,
    tag_base: int = 0,
) -> CollectivePlan:
    """Hierarchical all-reduce over scale-up then scale-out, four stages.

    Stage 1 reduce-scatters inside each server over the scale-up switch,
    stage 2 reduce-scatters each shard across the same-rail NPUs over the
    NICs, stages 3 and 4 mirror them as all-gathers.  Handoffs between
    stages are per shard; chunks pipeline the stages against each other.
    """
    if topology.kind != "clos" or not topology.scale_up_groups:
        raise ValueError("2D all-reduce needs a topology with scale-up groups")
    L = topology.npus_per_server
    n_servers = topology.n_npus // L
    sizes = {len(v) for v in topology.scale_up_groups.values()}
    if sizes != {L}:
        raise ValueError(f"non-uniform server sizes {sizes}")
    if n_chunks < 1:
        raise ValueError("chunk count must be >= 1")
    p = topology.n_npus
    if L == 1:
        # no scale-up level: identical to the flat direct algorithm
        plan = plan_allreduce_1d(
            topology, total_bytes, n_chunks=n_chunks, tag_base=tag_base
        )
        plan.build_args["scale_up_size"] = 1
        return CollectivePlan(**{**plan.__dict__, "kind": AR_2D})

    total = pad_to_grain(total_bytes, p * n_chunks)
    shard_c = total // (L * n_chunks)        # per-server shard, per chunk
    subseg_c = shard_c // n_servers          # per-rail segment, per chunk
    members = np.arange(p, dtype=np.int64)

    # per-server ordered pairs (stages 1 and 4)
    local = np.arange(L, dtype=np.int64)
    ls, ld = _pairs(local)
    pairs_per_server = len(ls)
    serv = np.repeat(np.arange(n_servers, dtype=np.int64), pairs_per_server) * L
    s1_src = serv + np.tile(ls, n_servers)
    s1_dst = serv + np.tile(ld, n_servers)
    n_local = len(s1_src)

    # per-rail ordered pairs (stages 2 and 3)
    rail_servers = np.arange(n_servers, dtype=np.int64)
    rs_, rd_ = _pairs(rail_servers)
    pairs_per_rail = len(rs_)
    rail = np.repeat(np.arange(L, dtype=np.int64), pairs_per_rail)
    s2_src = np.tile(rs_, L) * L + rail
    s2_dst = np.tile(rd_, L) * L + rail
    n_rail = len(s2_src)

    per_chunk = 2 * n_local + 2 * n_rail
    n = per_chunk * n_chunks

    # Group layout per chunk: p "shard reduced locally at gpu g" +
    # p "rail segments reduced at gpu g" + p "rail gather done at gpu g" +
    # 4 whole-stage groups.
    gpc = 3 * p + 4
    group_counts = np.zeros(gpc * n_chunks, dtype=np.int64)
    group_labels = []
    for c in range(n_chunks):
        group_labels += [f"l1_in{g}_c{c}" for g in range(p)]
        group_labels += [f"g2_in{g}_c{c}" for g in range(p)]
        group_labels += [f"g3_in{g}_c{c}" for g in range(p)]
        group_labels += [f"s1_all_c{c}", f"s2_all_c{c}",
                         f"s3_all_c{c}", f"s4_all_c{c}"]

    op_src = np.empty(n, dtype=np.int64)
    op_dst = np.empty(n, dtype=np.int64)
    op_bytes = np.empty(n, dtype=np.int64)
    op_stage = np.empty(n, dtype=np.int64)
    op_chunk = np.empty(n, dtype=np.int64)
    op_via = np.zeros(n, dtype=np.int64)
    op_groups = np.full((n, 3), -1, dtype=np.int64)
    op_deps = np.full((n, 3), -1, dtype=np.int64)

    for c in range(n_chunks):
        g0 = c * gpc
        l1_in = g0
        g2_in = g0 + p
        g3_in = g0 + 2 * p
        s_all = g0 + 3 * p
        base = c * per_chunk
        s1 = slice(base, base + n_local)
        s2 = slice(base + n_local, base + n_local + n_rail)
        s3 = slice(base + n_local + n_rail, base + n_local + 2 * n_rail)
        s4 = slice(base + n_local + 2 * n_rail, base + per_chunk)

        op_src[s1] = s1_src
        op_dst[s1] = s1_dst
        op_bytes[s1] = shard_c
        op_stage[s1] = 0
        op_via[s1] = VIA_SCALE_UP
        op_groups[s1, 0] = l1_in + s1_dst
        op_groups[s1, 1] = s_all + 0
        np.add.at(group_counts, op_groups[s1, 0], 1)
        group_counts[s_all + 0] += n_local
        if c > 0:
            op_deps[s1, 0] = (c - 1) * gpc + 3 * p + 0

        op_src[s2] = s2_src
        op_dst[s2] = s2_dst
        op_bytes[s2] = subseg_c
        op_stage[s2] = 1
        op_groups[s2, 0] = g2_in + s2_dst
        op_groups[s2, 1] = s_all + 1
        np.add.at(group_counts, op_groups[s2, 0], 1)
        group_counts[s_all + 1] += n_rail
        op_deps[s2, 0] = l1_in + s2_src
        if c > 0:
            op_deps[s2, 1] = (c - 1) * gpc + 3 * p + 1

        op_src[s3] = s2_src
        op_dst[s3] = s2_dst
        op_bytes[s3] = subseg_c
        op_stage[s3] = 2
        op_groups[s3, 0] = g3_in + s2_dst
        op_groups[s3, 1] = s_all + 2
        np.add.at(group_counts, op_groups[s3, 0], 1)
        group_counts[s_all + 2] += n_rail
        op_deps[s3, 0] = g2_in + s2_src
        if c > 0:
            op_deps[s3, 1] = (c - 1) * gpc + 3 * p + 2

        op_src[s4] = s1_src
        op_dst[s4] = s1_dst
        op_bytes[s4] = shard_c
        op_stage[s4] = 3
        op_via[s4] = VIA_SCALE_UP
        op_groups[s4, 0] = s_all + 3
        group_counts[s_all + 3] += n_local
        op_deps[s4, 0] = g3_in + s1_src
        if c > 0:
            op_deps[s4, 1] = (c - 1) * gpc + 3 * p + 3

        op_chunk[base : base + per_chunk] = c

    plan = _finish_plan(
        AR_2D, topology, members, total_bytes, total, n_chunks,
        op_src, op_dst, op_bytes, op_stage, op_chunk, op_via,
        op_deps, op_groups, group_counts, group_labels, tag_base,
        {"total_bytes": total_bytes, "scale_up_size": L,
         "n_servers": n_servers},
    )
    return plan


_BUILDERS = {
    ALLTOALL: lambda topo, args, n_chunks, tag: plan_alltoall(
        topo, args["total_bytes"], args["npus"], n_chunks, tag
    ),
    AR_1D: lambda topo, args, n_chunks, tag: plan_allreduce_1d(
        topo, args["total_bytes"], args["npus"], n_chunks, tag
    ),
    AR_2D: lambda topo, args, n_chunks, tag: plan_allreduce_2d(
        topo, args["total_bytes"], n_chunks, tag
    ),
}


def chunk_pipeline(
    plan: CollectivePlan, topology: Topology, n_chunks: int = 4
) -> CollectivePlan:
    """Re-derive a plan with its payload split into equal pipelined chunks."""
    if n_chunks < 1:
        raise ValueError("chunk count must be >= 1")
    if n_chunks == plan.n_chunks:
        return plan
    if plan.kind not in _BUILDERS:
        raise ValueError(f"cannot chunk a {plan.kind} plan")
    return _BUILDERS[plan.kind](
        topology, plan.build_args, n_chunks, int(plan.op_tag[0])
    )


# --- analytic accounting ----------------------------------------------------


def analytic_sent_bytes(plan: CollectivePlan) -> dict[int, int]:
    """Closed-form per-NPU sent bytes for each algorithm."""
    S = plan.total_bytes
    if plan.kind == INCAST:
        each = plan.build_args["bytes_each"]
        out = {int(s): each for s in plan.build_args["senders"]}
        out[plan.build_args["target"]] = out.get(plan.build_args["target"], 0)
        return out
    members = [int(m) for m in plan.npus]
    p = len(members)
    if plan.kind == ALLTOALL:
        per = (p - 1) * (S // p)
        return {m: per for m in members}
    if plan.kind == AR_1D:
        per = 2 * (p - 1) * (S // p)
        return {m: per for m in members}
    if plan.kind == AR_2D:
        L = plan.build_args["scale_up_size"]
        if L == 1:
            per = 2 * (p - 1) * (S // p)
            return {m: per for m in members}
        n_srv = plan.build_args["n_servers"]
        local = 2 * (L - 1) * (S // L)
        rail = 2 * (n_srv - 1) * (S // (L * n_srv))
        return {m: local + rail for m in members}
    raise ValueError(plan.kind)


def verify_cost(plan: CollectivePlan) -> None:
    """Per-NPU sent bytes must match the analytic formulas exactly."""
    expect = analytic_sent_bytes(plan)
    actual = plan.sent_bytes_per_npu()
    for i, m in enumerate(plan.npus):
        if int(actual[i]) != expect[int(m)]:
            raise AssertionError(
                f"plan cost mismatch at npu{int(m)}: sends {int(actual[i])}, "
                f"analytic {expect[int(m)]}"
            )


def lower_bound_ns(plan: CollectivePlan, topology: Topology) -> int:
    """Makespan floor: the most loaded link's payload serialization time."""
    n = topology.n_npus
    nic_out = np.zeros(n, dtype=np.int64)
    nic_in = np.zeros(n, dtype=np.int64)
    su_out = np.zeros(n, dtype=np.int64)
    su_in = np.zeros(n, dtype=np.int64)
    so = plan.op_via == VIA_SCALE_OUT
    np.add.at(nic_out, plan.op_src[so], plan.op_bytes[so])
    np.add.at(nic_in, plan.op_dst[so], plan.op_bytes[so])
    np.add.at(su_out, plan.op_src[~so], plan.op_bytes[~so])
    np.add.at(su_in, plan.op_dst[~so], plan.op_bytes[~so])
    bound = Fraction(0)
    for h in range(n):
        npu = topology.npu(h)
        for (a, b), spec in topology.links.items():
            if a == npu and b.kind != NodeKind.NVSWITCH:
                load = int(nic_out[h])
            elif b == npu and a.kind != NodeKind.NVSWITCH:
                load = int(nic_in[h])
            elif a == npu:
                load = int(su_out[h])
            elif b == npu:
                load = int(su_in[h])
            else:
                continue
            bound = max(bound, Fraction(load * 8 * 10**9, spec.bandwidth_bps))
    return int(bound)


def dump_plan_csv(plan: CollectivePlan, path) -> None:
    """op_id,src,dst,bytes,stage,chunk,deps rows for inspection."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["op_id", "src", "dst", "bytes", "stage", "chunk", "deps"])
        for i in range(plan.n_ops):
            deps = ";".join(
                plan.group_labels[g] for g in plan.op_deps[i] if g >= 0
            )
            w.writerow(
                [
                    int(plan.op_tag[i]),
                    int(plan.op_src[i]),
                    int(plan.op_dst[i]),
                    int(plan.op_bytes[i]),
                    STAGE_NAMES[plan.kind][int(plan.op_stage[i])],
                    int(plan.op_chunk[i]),
                    deps,
                ]
            )
