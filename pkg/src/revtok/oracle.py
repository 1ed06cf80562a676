"""Randomized verification of the freeze algorithm's guarantees.

Each trial builds a small random economy, disputes one transfer, runs the real
engine end to end, and then checks properties that do not depend on trusting
the engine's own arithmetic:

* burn-free trials must freeze exactly the disputed amount (sum check against
  the scenario's own number, not a recomputation);
* every obligation handed to an edge must be covered by the obligation that
  reached the sender before it sent anything on, with arrivals, record
  identities, and value caps all re-derived from the raw operation list and
  the per-node books required to balance exactly;
* the frozen/absorbed/residual split must account for the full demand;
* account floors, token conservation, and the linear work bound must hold;
* on generated DAG economies, the whole freeze map is cross-checked against a
  separate brute-force replay that never touches the engine's log or graph
  machinery.

Trials come in three shapes: free-form (cycles welcome), layered (indexes only
flow upward, guaranteeing a DAG so the brute-force replay applies), and
interleaved (one hub account alternates incoming and outgoing transfers, the
shape that stresses the newest-first obligation rule).
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass

from .freeze import FreezeEngine
from .ledger import BurnSource, TokenLedger
from .spendlog import EpochConfig

GOVERNANCE = "governance"

# ops are tuples:
#   ("mint", to, amount) | ("advance", block) | ("transfer", frm, to, amount)
#   | ("rtransfer", frm, to, amount) | ("rburn", frm, amount)
LOGGED = {"transfer", "rtransfer", "rburn"}


@dataclass
class TrialSpec:
    ops: list[tuple]
    dispute: int  # index into ops of the disputed transfer
    shape: str
    burns: bool


def _fmt_ops(spec: TrialSpec) -> str:
    return "; ".join("(%s)" % ", ".join(str(x) for x in op) for op in spec.ops)


# -- generation ----------------------------------------------------------------


def generate_trial(rng: random.Random, shape: str, burns: bool) -> TrialSpec:
    if shape == "interleaved":
        return _generate_interleaved(rng, burns)
    if shape == "layered":
        return _generate_layered(rng, burns)
    return _generate_generic(rng, burns)


def _generate_generic(rng: random.Random, burns: bool) -> TrialSpec:
    addrs = ["a%d" % i for i in range(rng.randint(2, 7))]
    victim = "v"
    nr = {a: 0 for a in addrs + [victim]}
    r = {a: 0 for a in addrs + [victim]}
    ops: list[tuple] = []
    block = 1
    for a in rng.sample(addrs, rng.randint(0, len(addrs) // 2 + 1)):
        amount = rng.randint(1, 100)
        ops.append(("mint", a, amount))
        nr[a] += amount
    # a little pre-dispute traffic, eligible for exclusion by the trace rules
    for _ in range(rng.randint(0, 3)):
        senders = [a for a in addrs if nr[a] > 0]
        if not senders:
            break
        frm = rng.choice(senders)
        amount = rng.randint(1, nr[frm])
        to = rng.choice(addrs)
        ops.append(("transfer", frm, to, amount))
        nr[frm] -= amount
        r[to] += amount
    s = rng.randint(1, 100)
    ops.append(("mint", victim, s))
    nr[victim] += s
    root = rng.choice(addrs)
    dispute = len(ops)
    ops.append(("transfer", victim, root, s))
    nr[victim] -= s
    r[root] += s
    for _ in range(rng.randint(1, 11)):
        if rng.random() < 0.2:
            block += rng.randint(1, 3)
            ops.append(("advance", block))
            continue
        candidates = [a for a in addrs + [victim] if r[a] > 0 or nr[a] > 0]
        if not candidates:
            break
        frm = rng.choice(candidates)
        if burns and r[frm] > 0 and rng.random() < 0.25:
            amount = rng.randint(1, min(r[frm], 100))
            ops.append(("rburn", frm, amount))
            r[frm] -= amount
            continue
        use_r = r[frm] > 0 and (nr[frm] == 0 or rng.random() < 0.7)
        pool = r[frm] if use_r else nr[frm]
        if pool == 0:
            continue
        amount = rng.randint(1, min(pool, 100))
        to = rng.choice(addrs + [victim])  # self- and back-transfers welcome
        ops.append(("rtransfer" if use_r else "transfer", frm, to, amount))
        if use_r:
            r[frm] -= amount
        else:
            nr[frm] -= amount
        r[to] += amount
    return TrialSpec(ops, dispute, "generic", burns)


def _generate_layered(rng: random.Random, burns: bool) -> TrialSpec:
    """Post-dispute transfers only flow from lower to higher index: a DAG by
    construction, so the brute-force replay can check the whole freeze map."""
    count = rng.randint(2, 6)
    addrs = ["n%d" % i for i in range(count)]
    victim = "v"
    nr = {a: 0 for a in addrs}
    r = {a: 0 for a in addrs}
    ops: list[tuple] = []
    block = 1
    for a in rng.sample(addrs, rng.randint(0, count - 1)):
        amount = rng.randint(1, 60)
        if rng.random() < 0.5:
            ops.append(("mint", a, amount))
            nr[a] += amount
        else:  # prior reversible funds arrive via a funder
            ops.append(("mint", "fund", amount))
            ops.append(("transfer", "fund", a, amount))
            r[a] += amount
    s = rng.randint(1, 100)
    ops.append(("mint", victim, s))
    dispute = len(ops)
    ops.append(("transfer", victim, addrs[0], s))
    r[addrs[0]] += s
    for _ in range(rng.randint(1, 9)):
        if rng.random() < 0.2:
            block += rng.randint(1, 3)
            ops.append(("advance", block))
            continue
        lows = [i for i in range(count - 1) if r[addrs[i]] > 0 or nr[addrs[i]] > 0]
        if not lows:
            break
        i = rng.choice(lows)
        frm = addrs[i]
        if burns and r[frm] > 0 and rng.random() < 0.25:
            amount = rng.randint(1, min(r[frm], 100))
            ops.append(("rburn", frm, amount))
            r[frm] -= amount
            continue
        use_r = r[frm] > 0 and (nr[frm] == 0 or rng.random() < 0.7)
        pool = r[frm] if use_r else nr[frm]
        if pool == 0:
            continue
        amount = rng.randint(1, min(pool, 100))
        to = addrs[rng.randint(i + 1, count - 1)]
        ops.append(("rtransfer" if use_r else "transfer", frm, to, amount))
        if use_r:
            r[frm] -= amount
        else:
            nr[frm] -= amount
        r[to] += amount
    return TrialSpec(ops, dispute, "layered", burns)


def _generate_interleaved(rng: random.Random, burns: bool) -> TrialSpec:
    """The disputed recipient drips funds into a hub, which spends between the
    arrivals, so obligations must respect which money was there when."""
    victim, parent, hub = "v", "p", "h"
    m = rng.randint(1, 4)
    sinks = ["b%d" % j for j in range(m)]
    ops: list[tuple] = []
    if rng.random() < 0.5:  # optional prior reversible funds at the hub
        prior = rng.randint(1, 30)
        ops.append(("mint", "fund", prior))
        ops.append(("transfer", "fund", hub, prior))
        hub_r = prior
    else:
        hub_r = 0
    s = rng.randint(m + 1, 100)
    ops.append(("mint", victim, s))
    dispute = len(ops)
    ops.append(("transfer", victim, parent, s))
    parent_r = s
    chunks = []
    for _ in range(m + 1):
        if parent_r == 0:
            break
        x = rng.randint(1, max(1, parent_r // 2))
        chunks.append(x)
        parent_r -= x
    block = 1
    for j, x in enumerate(chunks):
        ops.append(("rtransfer", parent, hub, x))
        hub_r += x
        if j < len(sinks) and hub_r > 0:
            if burns and rng.random() < 0.25:
                y = rng.randint(1, min(hub_r, 100))
                ops.append(("rburn", hub, y))
                hub_r -= y
            else:
                y = rng.randint(1, min(hub_r, 100))
                ops.append(("rtransfer", hub, sinks[j], y))
                hub_r -= y
        if rng.random() < 0.3:
            block += 1
            ops.append(("advance", block))
    return TrialSpec(ops, dispute, "interleaved", burns)


# -- execution -------------------------------------------------------------------


def _replay_on_engine(spec: TrialSpec):
    ledger = TokenLedger(EpochConfig())
    engine = FreezeEngine(ledger, GOVERNANCE)
    ledger.advance_block(1)
    dispute_ref = None
    for i, op in enumerate(spec.ops):
        kind = op[0]
        if kind == "mint":
            ledger.mint(op[1], op[2], ledger.current_block)
        elif kind == "advance":
            ledger.advance_block(op[1])
        elif kind == "transfer":
            ref = ledger.transfer(op[1], op[2], op[3], ledger.current_block)
            if i == spec.dispute:
                dispute_ref = ref
        elif kind == "rtransfer":
            ledger.rtransfer(op[1], op[2], op[3], ledger.current_block)
        elif kind == "rburn":
            ledger.burn(op[1], op[2], ledger.current_block, BurnSource.REVERSIBLE)
        else:  # pragma: no cover
            raise AssertionError(kind)
    assert dispute_ref is not None
    return ledger, engine, dispute_ref


def _raw_records(spec: TrialSpec) -> list[tuple[str, str | None, int]]:
    """(sender, to, amount) per seq, replayed from the op list alone."""
    records = []
    for op in spec.ops:
        if op[0] == "transfer" or op[0] == "rtransfer":
            records.append((op[1], op[2], op[3]))
        elif op[0] == "rburn":
            records.append((op[1], None, op[2]))
    return records


def _dispute_seq(spec: TrialSpec) -> int:
    return sum(1 for op in spec.ops[: spec.dispute] if op[0] in LOGGED)


def reference_freeze(spec: TrialSpec) -> dict[str, int]:
    """Brute-force freeze map for DAG-shaped trials.

    Replays balances with plain dicts, finds the tainted edges with one
    ascending pass over the raw records, topologically sorts with Kahn's
    algorithm, and hands out obligations newest-first.  Shares no code or data
    structures with the engine path.
    """
    r: dict[str, int] = {}
    nr: dict[str, int] = {}
    for op in spec.ops:
        if op[0] == "mint":
            nr[op[1]] = nr.get(op[1], 0) + op[2]
        elif op[0] == "transfer":
            nr[op[1]] -= op[3]
            r[op[2]] = r.get(op[2], 0) + op[3]
        elif op[0] == "rtransfer":
            r[op[1]] -= op[3]
            r[op[2]] = r.get(op[2], 0) + op[3]
        elif op[0] == "rburn":
            r[op[1]] -= op[2]
    records = _raw_records(spec)
    t0 = _dispute_seq(spec)
    root, demand = records[t0][1], records[t0][2]

    arrival = {root: t0}
    edges = []  # (src, dst, amount, seq)
    burned: dict[str, int] = {}
    for seq in range(t0 + 1, len(records)):
        sender, to, amount = records[seq]
        at = arrival.get(sender)
        if at is None or seq <= at:
            continue
        if to is None:
            burned[sender] = burned.get(sender, 0) + amount
            continue
        edges.append((sender, to, amount, seq))
        if to not in arrival or seq < arrival[to]:
            arrival[to] = seq

    nodes = list(arrival)
    outgoing: dict[str, list[tuple[str, str, int, int]]] = {n: [] for n in nodes}
    indegree = {n: 0 for n in nodes}
    for edge in edges:
        outgoing[edge[0]].append(edge)
        indegree[edge[1]] += 1
    for n in nodes:
        outgoing[n].sort(key=lambda e: -e[3])
    queue = [n for n in nodes if indegree[n] == 0]
    oblig = {n: 0 for n in nodes}
    oblig[root] = demand
    to_freeze = {}
    head = 0
    while head < len(queue):
        node = queue[head]
        head += 1
        pending = oblig[node]
        frozen = min(pending, r.get(node, 0))
        to_freeze[node] = frozen
        remaining = pending - frozen - burned.get(node, 0)
        if remaining > 0:
            for _src, dst, amount, _seq in outgoing[node]:
                passed = min(remaining, amount)
                oblig[dst] += passed
                remaining -= passed
                if remaining <= 0:
                    break
        for edge in outgoing[node]:
            indegree[edge[1]] -= 1
            if indegree[edge[1]] == 0:
                queue.append(edge[1])
    assert len(queue) == len(nodes), "reference replay requires a DAG trial"
    return to_freeze


# -- checks -----------------------------------------------------------------------


def run_and_check(spec: TrialSpec) -> list[str]:
    """All violations found in one trial (empty list means it passed)."""
    ledger, engine, ref = _replay_on_engine(spec)
    record = ledger.log.resolve(ref)
    demand = record.amount
    claim_id = engine.execute_freeze(ref, record.sender, ledger.current_block, GOVERNANCE)
    plan = engine.claims[claim_id].plan
    graph_edges = engine.claims[claim_id].graph_edges
    violations: list[str] = []

    def bad(kind: str, detail: str) -> None:
        violations.append(f"{kind}: {detail} | ops: {_fmt_ops(spec)}")

    # Demand accounting: frozen + absorbed-by-burns + stranded == demand.
    accounted = plan.total_frozen + plan.total_absorbed + plan.total_residual
    if accounted != demand:
        bad("identity", f"frozen {plan.total_frozen} + absorbed {plan.total_absorbed} "
                        f"+ residual {plan.total_residual} != s {demand}")
    if not spec.burns and plan.total_frozen != demand:
        bad("freezeSum", f"froze {plan.total_frozen} of {demand}")
    violations.extend(
        f"{v} | ops: {_fmt_ops(spec)}" for v in _check_obligation_bound(spec, plan, demand)
    )

    # Work is linear in the processed graph.
    if plan.nodes_visited > len(plan.to_freeze):
        bad("linearity", f"visited {plan.nodes_visited} of {len(plan.to_freeze)} nodes")
    if plan.edges_touched > len(graph_edges):
        bad("linearity", f"touched {plan.edges_touched} of {len(graph_edges)} edges")

    # Burn absorption can never exceed what was actually burned post-arrival.
    expected_burn = _burned_after_arrival(spec)
    for addr, absorbed in plan.absorbed_by_burn.items():
        if absorbed > expected_burn.get(addr, 0):
            bad("burn", f"{addr} absorbed {absorbed} > burned {expected_burn.get(addr, 0)}")

    # Engine state: floors, claim/frozen agreement, conservation.
    for addr, acct in ledger.accounts.items():
        if not 0 <= acct.frozen <= acct.reversible:
            bad("floor", f"{addr} frozen {acct.frozen} reversible {acct.reversible}")
        if acct.frozen != plan.to_freeze.get(addr, 0):
            bad("claim", f"{addr} frozen {acct.frozen} != plan {plan.to_freeze.get(addr, 0)}")
    if ledger.circulating() != ledger.total_minted - ledger.total_burned:
        bad("conservation", f"{ledger.circulating()} != "
                            f"{ledger.total_minted} - {ledger.total_burned}")

    if spec.shape == "layered":
        expected = reference_freeze(spec)
        actual = plan.to_freeze
        keys = set(expected) | set(actual)
        for key in keys:
            if expected.get(key, 0) != actual.get(key, 0):
                bad("reference", f"{key}: engine {actual.get(key, 0)} "
                                 f"!= brute force {expected.get(key, 0)}")
    return violations


def _burned_after_arrival(spec: TrialSpec) -> dict[str, int]:
    records = _raw_records(spec)
    t0 = _dispute_seq(spec)
    arrival = {records[t0][1]: t0}
    burned: dict[str, int] = {}
    for seq in range(t0 + 1, len(records)):
        sender, to, amount = records[seq]
        at = arrival.get(sender)
        if at is None or seq <= at:
            continue
        if to is None:
            burned[sender] = burned.get(sender, 0) + amount
        elif to not in arrival or seq < arrival[to]:
            arrival[to] = seq
    return burned


def _check_obligation_bound(spec: TrialSpec, plan, demand: int) -> list[str]:
    """Audit the per-edge instrumentation rows against the raw op list.

    All obligation into a node is assigned while its senders are processed,
    strictly before the node hands anything on, so the obligation reaching a
    node bounds what any one of its outgoing edges may carry.  That reached
    total is re-derived here by summing the inflow rows after each row is
    checked against the raw records: it must point at a real transfer with
    matching endpoints, dated after tainted funds could first have arrived at
    the sender, and neither its value nor its obligation may exceed what the
    raw transfer moved.  Finally each node's books must balance exactly:
    frozen + absorbed-by-burn + stranded + passed-on == reached.
    """
    records = _raw_records(spec)
    t0 = _dispute_seq(spec)
    root = records[t0][1]
    violations: list[str] = []

    # Earliest block-order moment tainted funds can reach each address,
    # replayed from the raw records alone.
    arrival = {root: t0}
    for seq in range(t0 + 1, len(records)):
        sender, to, _amount = records[seq]
        at = arrival.get(sender)
        if at is None or seq <= at or to is None:
            continue
        if to not in arrival or seq < arrival[to]:
            arrival[to] = seq

    inflow: dict[str, int] = {}
    outflow: dict[str, int] = {}
    for row in plan.per_edge:
        if not 0 <= row.seq < len(records):
            violations.append(f"obligationBound: row seq {row.seq} is not a raw record")
            continue
        sender, to, amount = records[row.seq]
        if sender != row.src or to != row.dst:
            violations.append(
                f"obligationBound: per-edge row at seq {row.seq} does not match the raw record"
            )
        if row.seq <= arrival.get(row.src, len(records)):
            violations.append(
                f"obligationBound: edge {row.src}->{row.dst} seq {row.seq} predates "
                f"the funds' arrival at {row.src}"
            )
        if row.value > amount:
            violations.append(
                f"obligationBound: edge {row.src}->{row.dst} value {row.value} "
                f"> raw transfer amount {amount}"
            )
        if row.obligation > row.value:
            violations.append(
                f"obligationBound: edge {row.src}->{row.dst} obligation {row.obligation} "
                f"exceeds edge value {row.value}"
            )
        inflow[row.dst] = inflow.get(row.dst, 0) + row.obligation
        outflow[row.src] = outflow.get(row.src, 0) + row.obligation

    def reached(node: str) -> int:
        return inflow.get(node, 0) + (demand if node == root else 0)

    for row in plan.per_edge:
        if row.obligation > reached(row.src):
            violations.append(
                f"obligationBound: edge {row.src}->{row.dst} obligation {row.obligation} "
                f"> obligation reaching {row.src} ({reached(row.src)})"
            )
    for node in plan.to_freeze:
        books = (
            plan.to_freeze.get(node, 0)
            + plan.absorbed_by_burn.get(node, 0)
            + plan.residual.get(node, 0)
            + outflow.get(node, 0)
        )
        if books != reached(node):
            violations.append(
                f"obligationBound: node {node} accounts for {books} "
                f"but obligation {reached(node)} reached it"
            )
    return violations


# -- the batch entry point ---------------------------------------------------------


SHAPES = ("generic", "layered", "interleaved")


def oracle_check(trials: int, seed: int, burns: str = "mixed") -> dict:
    """Run `trials` random trials; burns is 'none' or 'mixed'.

    Deterministic for a given (trials, seed, burns), and the report carries no
    wall-clock data, so its JSON form is byte-stable.
    """
    master = random.Random(seed)
    violations: list[dict] = []
    shape_counts = dict.fromkeys(SHAPES, 0)
    burn_trials = 0
    for index in range(trials):
        rng = random.Random(master.getrandbits(64))
        shape = SHAPES[index % len(SHAPES)]
        with_burns = burns == "mixed" and rng.random() < 0.3
        spec = generate_trial(rng, shape, with_burns)
        shape_counts[shape] += 1
        burn_trials += int(spec.burns)
        for violation in run_and_check(spec):
            violations.append({"trial": index, "detail": violation})
    return {
        "trials": trials,
        "seed": seed,
        "burns": burns,
        "shapes": shape_counts,
        "burnTrials": burn_trials,
        "violations": violations,
        "pass": not violations,
    }


def oracle_report_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"
