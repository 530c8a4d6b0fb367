"""Deterministic discrete-event execution of configured committees.

The runner owns every clock: it delivers messages after the one-way delays
(scaled by slow-node multipliers and payload transmission), injects faults,
detects stalls by timeout, and measures the five protocol phases per group
round so simulated latency can be compared against the analytic objective
tick for tick.
"""
from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path

from ..cco.fallback import reoptimize_fallback
from ..cco.config import Configuration, SolveLimits
from ..cco.objective import check_constraints, evaluate
from ..errors import InfeasibleConfigurationError
from ..model import Instance
from ..protocol.deployment import assemble
from ..protocol.messages import (
    CLIENT,
    Address,
    MessageKind,
    ProtocolMessage,
    consensus,
    verification,
)
from ..protocol.node import (
    NodeState,
    Role,
    abort,
    handle_message,
    set_active,
    set_round_expectation,
    trigger_fallback,
    verification_service_complete,
)
from .events import EventKind, EventQueue
from .report import SimReport, TxRecord
from .workload import Arrival, FaultPlan, Target, Workload

_MAX_RETRIES = 20


def _addr(address: Address) -> str:
    return f"{address.space}{address.index}"


@dataclass
class _Tracker:
    request_id: int
    committee: int
    round_id: int
    submit_us: int
    first_deliver_us: int | None = None
    commit_us: int | None = None
    committed: bool = False
    stalled: bool = False
    retries: int = 0
    deadline_checks: int = 0

    @property
    def resolved(self) -> bool:
        return self.committed or self.stalled


@dataclass
class _Spans:
    """Per-round phase instrumentation, all times absolute µs."""

    req_deliver: dict[int, int] = field(default_factory=dict)
    agg_send: dict[int, int] = field(default_factory=dict)
    agg_arrive: dict[int, int] = field(default_factory=dict)
    arrive_last: int = 0
    notice_send: int = 0
    notice_arrive: dict[int, int] = field(default_factory=dict)
    reply_send: dict[int, int] = field(default_factory=dict)


class _Simulation:
    def __init__(
        self,
        instance: Instance,
        config: Configuration,
        workload: Workload,
        faults: FaultPlan,
        seed: int,
        bandwidth_bps: float,
        verify_cost_us: int,
        client_delay_us: int,
        stall_factor: float,
        tee_recoveries: dict[int, int] | None,
        trace_path: str | Path | None,
    ) -> None:
        workload.validate()
        faults.validate(instance.n)
        violations = check_constraints(instance, config)
        if violations:
            raise InfeasibleConfigurationError(violations)
        self.instance = instance
        self.config = config
        self.workload = workload
        self.faults = faults
        self.rng = random.Random(seed)
        self.bandwidth_bps = bandwidth_bps
        self.verify_cost_us = verify_cost_us
        self.client_delay_us = client_delay_us
        self.stall_factor = stall_factor
        self.analytic_ttr = evaluate(instance, config).t_tr
        self.states = assemble(instance, config, hold_after_order=verify_cost_us > 0)
        self.v_leader = verification(instance.verification.leader_index)
        self.committees = config.committees()
        self.live: set[int] = set(config.leaders())
        self.dead: set[int] = set()
        self.slow = dict(faults.slow)
        self.failed_tees: set[int] = {
            i for i, flag in enumerate(instance.tee_flags()) if flag
        }
        self.queue = EventQueue()
        self.trackers: dict[int, _Tracker] = {}
        self.rounds: dict[int, list[int]] = {}
        self.round_size: dict[int, int] = {}
        self.spans: dict[int, _Spans] = {}
        self.expected_count: dict[int, int] = {}
        self.records: list[TxRecord] = []
        self.fault_log: list[str] = []
        self.stalled = 0
        self.next_request = 0
        self.next_round = 0
        self.last_reply_us = 0
        self.last_time = 0
        self.tried: dict[int, set[int]] = {
            leader: set(actives) for leader, actives in config.active_by_leader().items()
        }
        self.trace = open(trace_path, "w") if trace_path is not None else None

    # -- wiring ----------------------------------------------------------

    def transmission_us(self, payload_bytes: int) -> int:
        if payload_bytes <= 0:
            return 0
        return math.ceil(payload_bytes * 8 * 1_000_000 / self.bandwidth_bps)

    def link_delay_us(self, src: Address, dest: Address) -> int:
        d = self.instance.delays
        v = self.instance.verification
        if src.space == "c" and dest.space == "c":
            base = int(d.d[src.index, dest.index])
        elif src.space == "c" and dest.space == "v":
            base = int(d.to_v[src.index])
        elif src.space == "v" and dest.space == "c":
            base = int(d.from_v[dest.index])
        else:
            base = int(v.rtts[src.index, dest.index])
        mult = 1.0
        if src.space == "c":
            mult = max(mult, self.slow.get(src.index, 1.0))
        if dest.space == "c":
            mult = max(mult, self.slow.get(dest.index, 1.0))
        return math.ceil(base * mult)

    def send(self, src: Address, now: int, outbox) -> None:
        release = now
        if src == self.v_leader and self.verify_cost_us > 0:
            notices = [m for _, m in outbox if m.kind is MessageKind.COMMIT_NOTICE]
            if notices:
                release = now + self.verify_cost_us * len(notices)
                self.queue.push(release, EventKind.SERVICE_DONE)
        for dest, msg in outbox:
            self.observe_send(src, release, msg)
            if dest == CLIENT:
                self.queue.push(
                    release + self.client_delay_us, EventKind.DELIVER, dest=dest, message=msg
                )
                continue
            delay = self.link_delay_us(src, dest)
            arrive = release + delay + self.transmission_us(msg.payload_size)
            self.queue.push(arrive, EventKind.DELIVER, dest=dest, message=msg)

    def observe_send(self, src: Address, now: int, msg: ProtocolMessage) -> None:
        spans = self.spans.get(msg.round_id)
        if spans is None:
            return
        if msg.kind is MessageKind.AGGREGATE_PREPARED:
            spans.agg_send[msg.committee] = now
        elif msg.kind is MessageKind.REPLY:
            spans.reply_send[msg.committee] = now
        elif msg.kind is MessageKind.COMMIT_NOTICE and src == self.v_leader:
            spans.notice_send = now

    def observe_delivery(self, dest: Address, now: int, msg: ProtocolMessage) -> None:
        spans = self.spans.get(msg.round_id)
        if spans is None:
            return
        if msg.kind is MessageKind.REQUEST:
            tracker = self.trackers[msg.request_id]
            if tracker.first_deliver_us is None:
                tracker.first_deliver_us = now
                spans.req_deliver[msg.committee] = now
        elif msg.kind is MessageKind.AGGREGATE_PREPARED and dest == self.v_leader:
            spans.agg_arrive[msg.committee] = now
            spans.arrive_last = max(spans.arrive_last, now)
        elif msg.kind is MessageKind.COMMIT_NOTICE and msg.sender == self.v_leader:
            spans.notice_arrive[msg.committee] = now

    def write_trace(self, now: int, dest: Address, msg: ProtocolMessage) -> None:
        if self.trace is None:
            return
        record = {
            "t": now,
            "from": _addr(msg.sender),
            "to": _addr(dest),
            "kind": msg.kind.value,
            "committee": msg.committee,
            "seq": msg.sequence,
        }
        self.trace.write(json.dumps(record) + "\n")

    # -- workload --------------------------------------------------------

    def schedule_workload(self) -> None:
        for node, at in sorted(self.faults.crashes.items()):
            self.queue.push(at, EventKind.FAULT_INJECT, payload=("crash", node))
        for node, at in sorted(self.faults.tee_failures.items()):
            self.queue.push(at, EventKind.FAULT_INJECT, payload=("tee", node))
        if self.workload.arrival is Arrival.CLOSED_LOOP:
            self.submit_group_round(0)
            return
        scale = 1_000_000 / self.workload.rate_per_s
        t = 0.0
        order = sorted(self.live)
        for k in range(self.workload.total_requests):
            t += self.rng.expovariate(1.0) * scale
            if self.workload.target is Target.PINNED:
                committee = self.workload.pinned_committee
            else:
                committee = order[k % len(order)]
            self.round_size[k] = 1
            self.queue.push(
                round(t), EventKind.CLIENT_SUBMIT, payload=(k, committee, k)
            )
            self.next_request += 1

    def submit_group_round(self, now: int) -> None:
        remaining = self.workload.total_requests - self.next_request
        if remaining <= 0:
            return
        targets = sorted(self.live)[: min(remaining, len(self.live))]
        if not targets:
            skipped = self.workload.total_requests - self.next_request
            self.stalled += skipped
            self.next_request = self.workload.total_requests
            self.fault_log.append(
                f"[{now}] no live committees; {skipped} requests stalled"
            )
            return
        round_id = self.next_round
        self.next_round += 1
        self.round_size[round_id] = len(targets)
        for committee in targets:
            self.queue.push(
                now,
                EventKind.CLIENT_SUBMIT,
                payload=(self.next_request, committee, round_id),
            )
            self.next_request += 1

    def submit(self, now: int, request_id: int, committee: int, round_id: int) -> None:
        if committee not in self.live:
            self.stalled += 1
            self.fault_log.append(
                f"[{now}] request {request_id} targets stalled committee {committee}"
            )
            tracker = _Tracker(request_id, committee, round_id, now, stalled=True)
            self.trackers[request_id] = tracker
            self.rounds.setdefault(round_id, []).append(request_id)
            self.finish_round_if_done(now, round_id)
            return
        tracker = _Tracker(request_id, committee, round_id, now)
        self.trackers[request_id] = tracker
        self.rounds.setdefault(round_id, []).append(request_id)
        self.spans.setdefault(round_id, _Spans())
        expected = self.expected_count.get(round_id, 0) + 1
        self.expected_count[round_id] = expected
        _, outbox = set_round_expectation(self.states[self.v_leader], round_id, expected)
        self.send(self.v_leader, now, outbox)
        msg = ProtocolMessage(
            kind=MessageKind.REQUEST,
            committee=committee,
            sequence=0,
            sender=CLIENT,
            payload_size=self.workload.payload_bytes,
            request_id=request_id,
            round_id=round_id,
        )
        self.queue.push(
            now + self.client_delay_us, EventKind.DELIVER, dest=consensus(committee), message=msg
        )
        deadline = now + 2 * self.client_delay_us + self.deadline_margin()
        self.queue.push(deadline, EventKind.DEADLINE, payload=request_id)

    def deadline_margin(self) -> int:
        margin = math.ceil(self.stall_factor * self.analytic_ttr)
        return max(margin, 1)

    # -- faults ----------------------------------------------------------

    def inject_fault(self, now: int, kind: str, node: int) -> None:
        if kind == "crash":
            self.dead.add(node)
            self.fault_log.append(f"[{now}] node {node} crashed")
            if node in self.live:
                self.live.discard(node)
                self.fault_log.append(f"[{now}] committee {node} lost its leader")
                self.states[self.v_leader].participants.discard(node)
            return
        if kind != "tee":
            return
        self.failed_tees.add(node)
        self.fault_log.append(f"[{now}] node {node} lost its TEE")
        committee = self.config.leader_of.get(node)
        if committee is None or committee in self.dead:
            return
        outbox = trigger_fallback(self.states, [committee])
        if not outbox:
            return
        self.send(consensus(committee), now, outbox)
        self.fault_log.append(f"[{now}] committee {committee} switched to fallback")
        self.reoptimize(now)

    def reoptimize(self, now: int) -> None:
        """Refresh active links and the analytic deadline basis in place."""
        shifted = self.instance.with_tee_failures(sorted(self.failed_tees))
        try:
            result = reoptimize_fallback(
                shifted,
                self.failed_tees,
                self.config,
                SolveLimits(),
                repartition=False,
            )
        except Exception as exc:  # infeasible after failures: keep old basis
            self.fault_log.append(f"[{now}] in-place reoptimization failed: {exc}")
            return
        self.config = result.config
        self.analytic_ttr = result.latency.t_tr
        for leader, actives in result.config.active_by_leader().items():
            if leader in self.dead:
                continue
            state = self.states[consensus(leader)]
            set_active(state, tuple(consensus(j) for j in actives))
            self.tried.setdefault(leader, set()).update(actives)
        self.fault_log.append(
            f"[{now}] reoptimized in place; analytic latency now {self.analytic_ttr} us"
        )

    def recover_tee(self, now: int, node: int) -> None:
        # Recovery re-arms the TEE for future configurations only; committees
        # already in fallback stay there for the rest of the run.
        self.failed_tees.discard(node)
        self.fault_log.append(f"[{now}] node {node} TEE recovered")

    # -- stall detection ---------------------------------------------------

    def check_deadline(self, now: int, request_id: int) -> None:
        tracker = self.trackers[request_id]
        if tracker.resolved:
            return
        committee = tracker.committee
        leader_state = self.states.get(consensus(committee))
        if committee in self.dead or leader_state is None:
            self.stall(now, tracker)
            return
        tracker.deadline_checks += 1
        if tracker.retries >= _MAX_RETRIES or tracker.deadline_checks > _MAX_RETRIES:
            self.stall(now, tracker)
            return
        swapped = self.retry_with_fresh_actives(now, tracker, leader_state)
        if swapped is None:
            self.stall(now, tracker)
            return
        deadline = now + self.deadline_margin()
        self.queue.push(deadline, EventKind.DEADLINE, payload=request_id)

    def retry_with_fresh_actives(
        self, now: int, tracker: _Tracker, leader_state: NodeState
    ) -> bool | None:
        """Swap dead actives for the cheapest alive followers and repropose.

        Returns None when the committee cannot reach quorum any more, False
        when nothing is wrong (just slow; keep waiting), True after a retry.
        """
        committee = tracker.committee
        followers = self.committees[committee]
        alive = [j for j in followers if j not in self.dead]
        need = len(leader_state.active)
        if len(alive) < need:
            return None
        # In-flight sequences finish with their own participant snapshot, so
        # judge stuckness against that set when one exists.
        current = {a.index for a in leader_state.active}
        for entry in leader_state.pending.values():
            if entry.request_id == tracker.request_id:
                current = {a.index for a in entry.participants}
                break
        if not current & self.dead:
            return False  # all participants alive; the round is slow, not stuck
        rtts = self.instance.delays.rtt_matrix()
        tried = self.tried.setdefault(committee, set())
        keep = sorted(current - self.dead)
        candidates = [j for j in alive if j not in current]
        candidates.sort(key=lambda j: (j in tried, int(rtts[committee, j]), j))
        replacement = sorted(keep + candidates[: need - len(keep)])
        if len(replacement) < need:
            return None
        tried.update(replacement)
        set_active(leader_state, tuple(consensus(j) for j in replacement))
        for j in replacement:
            follower = self.states[consensus(j)]
            if follower.role is Role.PASSIVE_FOLLOWER:
                follower.role = Role.ACTIVE_FOLLOWER
        stale = [
            seq
            for seq, entry in leader_state.pending.items()
            if entry.request_id == tracker.request_id
        ]
        for seq in stale:
            abort(leader_state, seq)
        tracker.retries += 1
        self.fault_log.append(
            f"[{now}] committee {committee} retry {tracker.retries} for request "
            f"{tracker.request_id}; actives now {replacement}"
        )
        msg = ProtocolMessage(
            kind=MessageKind.REQUEST,
            committee=committee,
            sequence=0,
            sender=CLIENT,
            payload_size=self.workload.payload_bytes,
            request_id=tracker.request_id,
            round_id=tracker.round_id,
        )
        self.queue.push(now, EventKind.DELIVER, dest=consensus(committee), message=msg)
        return True

    def stall(self, now: int, tracker: _Tracker) -> None:
        tracker.stalled = True
        self.stalled += 1
        self.fault_log.append(
            f"[{now}] request {tracker.request_id} stalled in committee {tracker.committee}"
        )
        round_id = tracker.round_id
        spans = self.spans.get(round_id)
        v_state = self.states[self.v_leader]
        if spans is not None and tracker.committee not in spans.agg_arrive:
            expected = max(self.expected_count.get(round_id, 1) - 1, 0)
            self.expected_count[round_id] = expected
            _, outbox = set_round_expectation(v_state, round_id, expected)
            self.send(self.v_leader, now, outbox)
        self.finish_round_if_done(now, round_id)

    # -- round completion --------------------------------------------------

    def record_reply(self, now: int, msg: ProtocolMessage) -> None:
        tracker = self.trackers.get(msg.request_id)
        if tracker is None or tracker.resolved:
            return
        tracker.committed = True
        tracker.commit_us = now - self.client_delay_us
        self.last_reply_us = max(self.last_reply_us, now)
        self.finish_round_if_done(now, tracker.round_id)

    def finish_round_if_done(self, now: int, round_id: int) -> None:
        members = self.rounds.get(round_id, [])
        if len(members) < self.round_size.get(round_id, 1):
            return  # the group is still being submitted
        if not members or not all(self.trackers[r].resolved for r in members):
            return
        spans = self.spans.get(round_id)
        committed = [r for r in members if self.trackers[r].committed]
        if spans is not None and committed:
            phases = self.round_phases(spans, committed)
            for rid in committed:
                tracker = self.trackers[rid]
                self.records.append(
                    TxRecord(
                        request_id=rid,
                        committee=tracker.committee,
                        submit_us=tracker.submit_us,
                        commit_us=tracker.commit_us or 0,
                        retries=tracker.retries,
                        **phases,
                    )
                )
        del self.rounds[round_id]
        self.spans.pop(round_id, None)
        if self.workload.arrival is Arrival.CLOSED_LOOP:
            self.submit_group_round(now)

    def round_phases(self, spans: _Spans, committed: list[int]) -> dict[str, int]:
        """Critical-path span of each phase across the round's committees."""
        parts = {self.trackers[r].committee for r in committed}
        pre = max(spans.agg_send[c] - spans.req_deliver[c] for c in parts)
        cv = max(spans.agg_arrive[c] - spans.agg_send[c] for c in parts)
        ver = spans.notice_send - spans.arrive_last
        vc = max(spans.notice_arrive[c] - spans.notice_send for c in parts)
        com = max(spans.reply_send[c] - spans.notice_arrive[c] for c in parts)
        return {"t_pre": pre, "t_cv": cv, "t_ver": ver, "t_vc": vc, "t_com": com}

    # -- main loop ---------------------------------------------------------

    def run(self) -> SimReport:
        self.schedule_workload()
        try:
            while self.queue:
                event = self.queue.pop()
                assert event.time >= self.last_time, "time travel"
                self.last_time = event.time
                if event.kind is EventKind.CLIENT_SUBMIT:
                    request_id, committee, round_id = event.payload
                    self.submit(event.time, request_id, committee, round_id)
                elif event.kind is EventKind.DELIVER:
                    self.deliver(event.time, event.dest, event.message)
                elif event.kind is EventKind.FAULT_INJECT:
                    kind, node = event.payload
                    self.inject_fault(event.time, kind, node)
                elif event.kind is EventKind.RECOVER_TEE:
                    self.recover_tee(event.time, event.payload)
                elif event.kind is EventKind.DEADLINE:
                    self.check_deadline(event.time, event.payload)
                elif event.kind is EventKind.SERVICE_DONE:
                    _, outbox = verification_service_complete(self.states[self.v_leader])
                    self.send(self.v_leader, event.time, outbox)
        finally:
            if self.trace is not None:
                self.trace.close()
        return self.build_report()

    def deliver(self, now: int, dest: Address, msg: ProtocolMessage) -> None:
        self.write_trace(now, dest, msg)
        if dest == CLIENT:
            if msg.kind is MessageKind.REPLY:
                self.record_reply(now, msg)
            return
        if dest.space == "c" and dest.index in self.dead:
            return
        state = self.states.get(dest)
        if state is None:
            return
        self.observe_delivery(dest, now, msg)
        _, outbox = handle_message(state, msg, now)
        self.send(dest, now, outbox)

    def build_report(self) -> SimReport:
        committed = sum(1 for t in self.trackers.values() if t.committed)
        in_flight = self.workload.total_requests - committed - self.stalled
        alarms = []
        for address in sorted(self.states):
            for alarm in self.states[address].alarms:
                alarms.append(alarm)
        report = SimReport(
            records=sorted(self.records, key=lambda r: r.request_id),
            total_requests=self.workload.total_requests,
            stalled=self.stalled,
            in_flight=in_flight,
            makespan_us=self.last_reply_us,
            fault_log=self.fault_log,
            alarms=alarms,
        )
        report.check_conservation()
        return report


def run(
    instance: Instance,
    config: Configuration,
    workload: Workload,
    faults: FaultPlan | None = None,
    seed: int = 0,
    bandwidth_bps: float = 1e9,
    verify_cost_us: int = 0,
    client_delay_us: int = 0,
    stall_factor: float = 10.0,
    tee_recoveries: dict[int, int] | None = None,
    trace_path: str | Path | None = None,
) -> SimReport:
    """Simulate one run and report latency, throughput, and faults."""
    sim = _Simulation(
        instance=instance,
        config=config,
        workload=workload,
        faults=faults or FaultPlan(),
        seed=seed,
        bandwidth_bps=bandwidth_bps,
        verify_cost_us=verify_cost_us,
        client_delay_us=client_delay_us,
        stall_factor=stall_factor,
        tee_recoveries=tee_recoveries,
        trace_path=trace_path,
    )
    if tee_recoveries:
        for node, at in sorted(tee_recoveries.items()):
            sim.queue.push(at, EventKind.RECOVER_TEE, payload=node)
    return sim.run()
