"""Fund tracing and the freeze lifecycle.

Given a disputed transfer, the engine rebuilds where those coins could have
gone: a directed multigraph over accounts whose edges are the spend records
posted strictly after the disputed transfer, restricted to chronologically
increasing paths out of the disputed recipient.  Cycles are cancelled down to
a DAG, and a single pass over the DAG in topological order decides how much to
freeze at each account and how much obligation to pass along each edge,
newest edges first.

Freezing also consumes disputable capacity: every obligation passed along an
edge is subtracted from that record's remaining amount, so a later claim on
the same record cannot freeze the same coins twice.  A rejected claim puts the
subtracted amounts back.
"""

from __future__ import annotations

import enum
import hashlib
import heapq
from dataclasses import dataclass, field
from typing import Iterator

from .errors import (
    ClaimNotFrozenError,
    InvalidDisputeError,
    NotAffectedPartyError,
    NotGovernanceError,
    UnknownClaimError,
    UnknownSpenditureError,
    WindowElapsedError,
)
from .ledger import Address, TokenLedger
from .spendlog import SpendLog, SpendRef


@dataclass
class GraphEdge:
    """One spend record viewed as a graph edge.

    `value` starts as the record's remaining amount and may be discounted by
    cycle cancellation; zero-valued edges are legal and stay in the graph.
    """

    src: Address
    dst: Address
    value: int
    seq: int
    ref: SpendRef


@dataclass
class TransferGraph:
    """Trace graph rooted at the disputed recipient.

    `nodes` is in discovery order.  Within `edges`, the edges of one source
    appear newest-first; the freeze pass relies on that order instead of
    sorting, which keeps it linear in the graph size.
    """

    root: Address
    root_arrival_seq: int
    nodes: list[Address] = field(default_factory=list)
    edges: list[GraphEdge] = field(default_factory=list)
    burned_at: dict[Address, int] = field(default_factory=dict)

    def adjacency(self) -> dict[Address, list[GraphEdge]]:
        adj: dict[Address, list[GraphEdge]] = {n: [] for n in self.nodes}
        for e in self.edges:
            adj[e.src].append(e)
        return adj


def build_graph(log: SpendLog, disputed: SpendRef, freeze_seq: int) -> TransferGraph:
    """Trace the disputed funds through the spend log.

    An account enters the graph when some increasing-seq path from the
    disputed transfer reaches it; its outgoing records strictly between that
    first arrival and `freeze_seq` become edges.  Burn records in the same
    span accumulate into burned_at instead, since burned coins can absorb
    obligation but cannot carry it anywhere.

    Earliest arrivals are settled in ascending seq order (a heap of
    (arrival seq, account)), so each account's outgoing window is read exactly
    once.
    """
    rec = log.resolve(disputed)
    if rec.to is None:
        raise InvalidDisputeError("a burn record cannot be disputed")
    graph = TransferGraph(root=rec.to, root_arrival_seq=rec.seq)
    arrival: dict[Address, int] = {rec.to: rec.seq}
    heap: list[tuple[int, Address]] = [(rec.seq, rec.to)]
    settled: set[Address] = set()
    while heap:
        at, node = heapq.heappop(heap)
        if node in settled:
            continue
        settled.add(node)
        graph.nodes.append(node)
        for ref, out in log.outgoing_between(node, at, freeze_seq):
            if out.to is None:
                graph.burned_at[node] = graph.burned_at.get(node, 0) + out.amount
                continue
            graph.edges.append(GraphEdge(node, out.to, out.amount, out.seq, ref))
            if out.to not in settled and out.seq < arrival.get(out.to, freeze_seq):
                arrival[out.to] = out.seq
                heapq.heappush(heap, (out.seq, out.to))
    return graph


def _find_cycle(graph: TransferGraph) -> list[GraphEdge] | None:
    """One directed cycle as an edge list, or None if the graph is acyclic.

    Iterative DFS over the multigraph; a self-edge is a one-edge cycle.
    """
    adj = graph.adjacency()
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {n: WHITE for n in graph.nodes}
    entered_via: dict[Address, GraphEdge] = {}
    for start in graph.nodes:
        if color[start] != WHITE:
            continue
        color[start] = GRAY
        stack: list[tuple[Address, Iterator[GraphEdge]]] = [(start, iter(adj[start]))]
        while stack:
            node, edges = stack[-1]
            edge = next(edges, None)
            if edge is None:
                color[node] = BLACK
                stack.pop()
                continue
            if color[edge.dst] == GRAY:
                cycle = [edge]
                cur = node
                while cur != edge.dst:
                    back = entered_via[cur]
                    cycle.append(back)
                    cur = back.src
                cycle.reverse()
                return cycle
            if color[edge.dst] == WHITE:
                color[edge.dst] = GRAY
                entered_via[edge.dst] = edge
                stack.append((edge.dst, iter(adj[edge.dst])))
    return None


def eliminate_cycles(graph: TransferGraph) -> TransferGraph:
    """Cancel cycles in place until the graph is a DAG.

    Each round removes the minimum-value edge of some cycle (ties broken by
    lowest seq) and discounts every other edge on that cycle by that value.
    Discounted edges stay even at value zero; only the minimum edge is
    deleted, so the loop terminates after at most |edges| rounds.
    """
    while True:
        cycle = _find_cycle(graph)
        if cycle is None:
            return graph
        weakest = min(cycle, key=lambda e: (e.value, e.seq))
        for edge in cycle:
            if edge is not weakest:
                edge.value -= weakest.value
        graph.edges.remove(weakest)


@dataclass
class EdgeObligation:
    """Instrumentation row: the obligation assigned to one touched edge."""

    ref: SpendRef
    src: Address
    dst: Address
    seq: int
    value: int
    obligation: int


@dataclass
class FreezePlan:
    """Outcome of one freeze computation, before it is applied.

    to_freeze maps every graph node to the amount locked there.  obligations
    maps each node to the total obligation that reached it.  per_edge lists
    every edge the pass touched, with the obligation it carried (possibly 0).
    absorbed_by_burn and residual account for obligation that no freeze could
    cover: coins burned downstream, and obligation stranded where outgoing
    capacity ran out.
    """

    root: Address
    demand: int
    to_freeze: dict[Address, int] = field(default_factory=dict)
    obligations: dict[Address, int] = field(default_factory=dict)
    per_edge: list[EdgeObligation] = field(default_factory=list)
    absorbed_by_burn: dict[Address, int] = field(default_factory=dict)
    residual: dict[Address, int] = field(default_factory=dict)
    nodes_visited: int = 0
    edges_touched: int = 0

    @property
    def total_frozen(self) -> int:
        return sum(self.to_freeze.values())

    @property
    def total_absorbed(self) -> int:
        return sum(self.absorbed_by_burn.values())

    @property
    def total_residual(self) -> int:
        return sum(self.residual.values())


def calc_freeze(graph: TransferGraph, demand: int, balance_of) -> FreezePlan:
    """Distribute `demand` over the DAG, newest edges first.

    Nodes are processed in topological order.  At each node the pending
    obligation is frozen up to the available reversible balance; whatever the
    local burn total does not absorb is passed along the outgoing edges in
    reverse-chronological order, each taking min(remaining, edge value).

    Pure: reads balances through `balance_of`, mutates nothing.  Work is
    O(nodes + edges); the plan records the touch counts.
    """
    plan = FreezePlan(root=graph.root, demand=demand)
    adj = graph.adjacency()
    indegree = {n: 0 for n in graph.nodes}
    for e in graph.edges:
        indegree[e.dst] += 1
    queue = [n for n in graph.nodes if indegree[n] == 0]
    obligations = {n: 0 for n in graph.nodes}
    obligations[graph.root] = demand
    head = 0
    while head < len(queue):
        node = queue[head]
        head += 1
        plan.nodes_visited += 1
        pending = obligations[node]
        frozen = min(pending, balance_of(node))
        plan.to_freeze[node] = frozen
        burn = graph.burned_at.get(node, 0)
        plan.absorbed_by_burn[node] = min(max(pending - frozen, 0), burn)
        remaining = pending - frozen - burn
        if remaining > 0:
            for edge in adj[node]:
                plan.edges_touched += 1
                passed = min(remaining, edge.value)
                obligations[edge.dst] += passed
                plan.per_edge.append(
                    EdgeObligation(edge.ref, edge.src, edge.dst, edge.seq, edge.value, passed)
                )
                remaining -= passed
                if remaining <= 0:
                    break
        plan.residual[node] = max(remaining, 0)
        for edge in adj[node]:
            indegree[edge.dst] -= 1
            if indegree[edge.dst] == 0:
                queue.append(edge.dst)
    assert len(queue) == len(graph.nodes), "graph fed to calc_freeze must be acyclic"
    plan.obligations = obligations
    return plan


class ClaimStatus(enum.Enum):
    FROZEN = "Frozen"
    REVERSED = "Reversed"
    REJECTED = "Rejected"


@dataclass
class ClaimEntry:
    """One claim row.

    Rows with ref=None record an amount frozen at `address`; settlement moves
    or releases exactly these.  Rows with a ref record the obligation
    subtracted from that spend record, restored only if the claim is rejected.
    """

    address: Address
    ref: SpendRef | None
    amount: int


@dataclass
class Claim:
    claim_id: str
    victim: Address
    disputed: SpendRef
    entries: list[ClaimEntry]
    status: ClaimStatus
    plan: FreezePlan
    graph_edges: list[tuple[Address, Address, int, int]]  # (src, dst, value, seq) after cancelling

    def freeze_rows(self) -> list[ClaimEntry]:
        return [e for e in self.entries if e.ref is None]

    def debit_rows(self) -> list[ClaimEntry]:
        return [e for e in self.entries if e.ref is not None]


class FreezeEngine:
    """Executes freezes and settles claims against a TokenLedger.

    Only the arbitration identity fixed at construction may call the mutating
    entry points.
    """

    REVERSAL_SENDER_PREFIX = "claim:"

    def __init__(self, ledger: TokenLedger, governance: Address):
        self.ledger = ledger
        self.governance = governance
        self.claims: dict[str, Claim] = {}
        self.claim_order: list[str] = []

    def _require_governance(self, caller: Address) -> None:
        if caller != self.governance:
            raise NotGovernanceError(f"{caller} may not drive the freeze lifecycle")

    def _claim(self, claim_id: str) -> Claim:
        claim = self.claims.get(claim_id)
        if claim is None:
            raise UnknownClaimError(claim_id)
        return claim

    def plan_freeze(self, disputed: SpendRef) -> tuple[TransferGraph, FreezePlan]:
        """Trace and plan without mutating anything (also the bench path)."""
        record = self.ledger.log.resolve(disputed)
        graph = eliminate_cycles(
            build_graph(self.ledger.log, disputed, self.ledger.log.next_seq)
        )
        return graph, calc_freeze(graph, record.amount, self.ledger.available_rbalance)

    def execute_freeze(
        self, disputed: SpendRef, victim: Address, current_block: int, caller: Address
    ) -> str:
        """Freeze the still-disputable remainder of `disputed` wherever it went.

        The demand is the record's remaining amount, so coins already claimed
        through this record cannot be frozen a second time.  Applying the plan
        raises every to_freeze account's frozen total, subtracts each per-edge
        obligation from its record, and files a claim holding both kinds of
        row for later settlement.
        """
        self._require_governance(caller)
        record = self.ledger.log.resolve(disputed)
        if record.to is None:
            raise InvalidDisputeError("a burn record cannot be disputed")
        if victim != record.sender:
            raise NotAffectedPartyError(f"{victim} did not send the disputed record")
        if current_block - record.block > self.ledger.config.dispute_window:
            raise WindowElapsedError(
                f"record from block {record.block} is outside the window at {current_block}"
            )
        graph, plan = self.plan_freeze(disputed)

        entries: list[ClaimEntry] = []
        for addr, amount in plan.to_freeze.items():
            if amount > 0:
                entries.append(ClaimEntry(addr, None, amount))
        for row in plan.per_edge:
            if row.obligation > 0:
                entries.append(ClaimEntry(row.src, row.ref, row.obligation))

        claim_id = hashlib.sha256(
            b"claim|%d|%d|%s|%d|%d"
            % (len(self.claim_order), disputed.epoch, disputed.sender.encode(),
               disputed.index, current_block)
        ).hexdigest()

        # All validation is done; apply.
        for entry in entries:
            if entry.ref is None:
                acct = self.ledger._acct(entry.address)
                acct.frozen += entry.amount
                assert acct.frozen <= acct.reversible
            else:
                rec = self.ledger.log.resolve(entry.ref)
                rec.amount -= entry.amount
                assert rec.amount >= 0
        claim = Claim(
            claim_id=claim_id,
            victim=victim,
            disputed=disputed,
            entries=entries,
            status=ClaimStatus.FROZEN,
            plan=plan,
            graph_edges=[(e.src, e.dst, e.value, e.seq) for e in graph.edges],
        )
        self.claims[claim_id] = claim
        self.claim_order.append(claim_id)
        return claim_id

    def reverse(self, claim_id: str, caller: Address) -> int:
        """Move every frozen row of the claim to the victim.

        The victim is credited reversibly, and the payout is logged as a spend
        from a synthetic claim sender so the reversal itself stays traceable.
        Returns the amount moved.
        """
        self._require_governance(caller)
        claim = self._claim(claim_id)
        if claim.status is not ClaimStatus.FROZEN:
            raise ClaimNotFrozenError(f"claim {claim_id} is {claim.status.value}")
        total = 0
        for row in claim.freeze_rows():
            acct = self.ledger._acct(row.address)
            acct.reversible -= row.amount
            acct.frozen -= row.amount
            assert acct.reversible >= 0 and acct.frozen >= 0
            total += row.amount
        if total:
            self.ledger._acct(claim.victim).reversible += total
            self.ledger.log.record(
                self.REVERSAL_SENDER_PREFIX + claim_id[:16],
                claim.victim,
                total,
                self.ledger.current_block,
            )
        claim.status = ClaimStatus.REVERSED
        return total

    def reject_reverse(self, claim_id: str, caller: Address) -> None:
        """Release the claim's frozen rows and restore its record debits.

        Restoration is skipped for refs whose bucket has been cleaned in the
        meantime; the coins matured and there is nothing left to restore to.
        """
        self._require_governance(caller)
        claim = self._claim(claim_id)
        if claim.status is not ClaimStatus.FROZEN:
            raise ClaimNotFrozenError(f"claim {claim_id} is {claim.status.value}")
        for row in claim.entries:
            if row.ref is None:
                acct = self.ledger._acct(row.address)
                acct.frozen -= row.amount
                assert acct.frozen >= 0
            else:
                try:
                    rec = self.ledger.log.resolve(row.ref)
                except UnknownSpenditureError:
                    continue
                rec.amount += row.amount
                assert rec.amount <= rec.original_amount
        claim.status = ClaimStatus.REJECTED
