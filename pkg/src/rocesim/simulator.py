"""Co-simulation driver: Python control plane over the compiled dataplane.

The training-loop / collective-scheduling side lives in a plain
:class:`~rocesim.engine.EventLoop`; every packet lives in the kernel.  The
two advance in lockstep: the kernel runs up to the next control-plane
event (or until a collective plan completes), then control-plane callbacks
run, possibly submitting more plans.  Plans queue FIFO when the kernel's
pools are busy, which also bounds how many collectives multiplex the
fabric at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import _kernel as K
from .collectives import CollectivePlan, verify_cost
from .engine import EventLoop
from .errors import SimulationError
from .fabric import FabricParams, KernelCapacities, Network, PlanRun
from .topology import Topology
from .transport import CcParams, VARIANT_IDS, VARIANT_NAMES


@dataclass
class CollectiveResult:
    label: str
    plan_kind: str
    submitted_ns: int
    start_ns: int
    finish_ns: int
    n_ops: int
    total_bytes: int

    @property
    def elapsed_ns(self) -> int:
        return self.finish_ns - self.submitted_ns


class FabricSimulator:
    """One deterministic simulation instance: topology + CC variant + seed."""

    def __init__(
        self,
        topology: Topology,
        cc: str | int,
        cc_params: CcParams | None = None,
        fabric_params: FabricParams | None = None,
        seed: int = 1,
        capacities: KernelCapacities | None = None,
        max_concurrent_plans: int = 2,
        collect_flow_records: bool = False,
        check_plan_cost: bool = True,
    ):
        self.variant = VARIANT_IDS[cc] if isinstance(cc, str) else cc
        self.cc_name = VARIANT_NAMES[self.variant]
        self.engine = EventLoop()
        self.network = Network(
            topology,
            self.variant,
            cc_params=cc_params,
            fabric_params=fabric_params,
            seed=seed,
            capacities=capacities,
        )
        self.topology = topology
        self.max_concurrent_plans = max_concurrent_plans
        self.collect_flow_records = collect_flow_records
        self.check_plan_cost = check_plan_cost
        self.results: list[CollectiveResult] = []
        self.flow_records: list[np.ndarray] = []
        self._queue: list[tuple[CollectivePlan, str, Optional[Callable]]] = []
        self._inflight: dict[int, tuple[str, int, Optional[Callable]]] = {}
        self._submitted = 0
        self._finished = 0

    # -- plan lifecycle ---------------------------------------------------------

    def submit(
        self,
        plan: CollectivePlan,
        label: str = "",
        on_done: Callable[[int, CollectiveResult], None] | None = None,
    ) -> None:
        """Queue a collective; it starts when the fabric has room for it."""
        if self.check_plan_cost:
            verify_cost(plan)
        plan.assert_acyclic()
        self._submitted += 1
        self._queue.append((plan, label or plan.kind, on_done))
        self._admit()

    def _admit(self) -> None:
        while (
            self._queue
            and len(self._inflight) < self.max_concurrent_plans
            and self.network.can_admit(self._queue[0][0])
        ):
            plan, label, cb = self._queue.pop(0)
            run = self.network.add_plan(plan)
            if run is None:
                self._queue.insert(0, (plan, label, cb))
                break
            self._inflight[run.slot] = (label, self.engine.now(), cb)

    def _complete(self, run: PlanRun) -> None:
        label, submitted, cb = self._inflight.pop(run.slot)
        op_start = self.network.op_i[
            run.op_base : run.op_base + run.n_ops, K.OP_START
        ]
        start_ns = int(op_start.min()) if run.n_ops else run.start_ns
        result = CollectiveResult(
            label=label,
            plan_kind=run.plan.kind,
            submitted_ns=submitted,
            start_ns=start_ns,
            finish_ns=run.finish_ns,
            n_ops=run.n_ops,
            total_bytes=int(run.plan.op_bytes.sum()),
        )
        self.results.append(result)
        if self.collect_flow_records:
            self.flow_records.append(run.flow_records())
        self.network.release_plan(run)
        self._finished += 1
        self._admit()
        if cb is not None:
            cb(run.finish_ns, result)

    # -- main loop -----------------------------------------------------------------

    def run(self) -> int:
        """Advance both planes until fully idle; returns the final time."""
        engine = self.engine
        network = self.network
        while True:
            t_py = engine.peek_next_time()
            t_k = network.next_event_time()
            if t_k is not None and (t_py is None or t_k <= t_py):
                now, _status, done = network.run(
                    until=t_py, stop_on_plan_done=True
                )
                engine.advance_to(now)
                for run in done:
                    self._complete(run)
                if t_py is not None and now >= t_py and not done:
                    engine.run_due()
            elif t_py is not None:
                network.run(until=t_py, stop_on_plan_done=False)
                engine.advance_to(t_py)
                engine.run_due()
            else:
                break
        if self._queue or self._inflight:
            raise SimulationError(
                f"simulation idle with {len(self._queue)} queued and "
                f"{len(self._inflight)} in-flight collectives (deadlock?)"
            )
        return engine.now()

    def run_collectives(
        self, plans: list[CollectivePlan] | CollectivePlan, label: str = ""
    ) -> list[CollectiveResult]:
        """Submit plans, run to completion, return per-plan results."""
        if isinstance(plans, CollectivePlan):
            plans = [plans]
        for i, plan in enumerate(plans):
            self.submit(plan, label=f"{label or plan.kind}[{i}]")
        self.run()
        return self.results

    # -- measurements ---------------------------------------------------------------

    def makespan_ns(self) -> int:
        return max((r.finish_ns for r in self.results), default=0)

    def all_flow_records(self) -> np.ndarray:
        if not self.flow_records:
            return np.empty((0, 6), dtype=np.int64)
        rec = np.concatenate(self.flow_records, axis=0)
        return rec[np.argsort(rec[:, 0], kind="stable")]

    def assert_conserved(self) -> None:
        self.network.assert_conserved()
