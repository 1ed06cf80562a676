"""Scenario files: a line-based format driving the whole engine.

Each non-comment line is one operation, `op key=value key=value ...`.  A `#`
(at line start or after whitespace) starts a comment.  Operations execute in
order against a single engine; `expect` lines assert on the state reached so
far, and any operation may carry `expectError=SomeError` to assert that it
fails with exactly that error.

Replaying a scenario produces a JSON report that is byte-identical across
runs: the report is a pure function of the scenario text.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

from .errors import LedgerError, ParseError
from .freeze import Claim, FreezeEngine
from .governance import (
    FeePolicy,
    FungibleTarget,
    Governance,
    JudgePool,
    NftTarget,
    Vote,
    commitment_hash,
)
from .ledger import BurnSource, TokenLedger
from .nft import NftRegistry
from .spendlog import EpochConfig, SpendRef

OPS = {
    "config", "judges", "advanceBlock", "mint", "transfer", "rtransfer",
    "burn", "clean", "nftMint", "nftTransfer", "nftClean",
    "submitFreeze", "commit", "reveal", "tally", "expect",
}

EXPECT_KINDS = {
    "balance", "supply", "freeze", "freezeTotal", "oblig", "spend",
    "edge", "claimStatus", "phase", "nftOwner", "nftFrozen", "nftHistory",
}


@dataclass
class ScenarioOp:
    line: int
    name: str
    params: dict[str, str]
    expect_error: str | None = None


def _split_comment(line: str) -> str:
    if line.lstrip().startswith("#"):
        return ""
    cut = line.find(" #")
    return line[:cut] if cut >= 0 else line


def parse_scenario(text: str) -> list[ScenarioOp]:
    ops: list[ScenarioOp] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = _split_comment(raw).strip()
        if not line:
            continue
        tokens = line.split()
        name = tokens[0]
        if name not in OPS:
            raise ParseError(f"unknown operation '{name}'", line_no, raw.find(name) + 1)
        params: dict[str, str] = {}
        expect_error = None
        for token in tokens[1:]:
            if "=" not in token:
                raise ParseError(
                    f"expected key=value, got '{token}'", line_no, raw.find(token) + 1
                )
            key, value = token.split("=", 1)
            if not key or not value:
                raise ParseError(
                    f"empty key or value in '{token}'", line_no, raw.find(token) + 1
                )
            if key == "expectError":
                expect_error = value
            elif key in params:
                raise ParseError(f"duplicate key '{key}'", line_no, raw.find(token) + 1)
            else:
                params[key] = value
        op = ScenarioOp(line_no, name, params, expect_error)
        _validate_op(op, raw)
        ops.append(op)
    return ops


_INT_KEYS = {
    "amount", "to_block", "epoch", "index", "token", "stake", "tip", "case",
    "length", "value_int", "r", "nr", "frozen", "available", "minted",
    "burned", "circulating", "original", "seq",
}


def _int_param(op: ScenarioOp, raw: str, key: str, required: bool = True) -> int | None:
    value = op.params.get(key)
    if value is None:
        if required:
            raise ParseError(f"'{op.name}' needs {key}=", op.line)
        return None
    try:
        n = int(value)
    except ValueError:
        raise ParseError(
            f"malformed {key} '{value}'", op.line, raw.find(value) + 1
        ) from None
    if n < 0:
        raise ParseError(f"{key} must be non-negative", op.line, raw.find(value) + 1)
    return n


def _require(op: ScenarioOp, raw: str, *keys: str) -> None:
    for key in keys:
        if key not in op.params:
            raise ParseError(f"'{op.name}' needs {key}=", op.line)


_OP_INT_FIELDS = {
    "advanceBlock": ["to"],
    "mint": ["amount"],
    "transfer": ["amount"],
    "rtransfer": ["amount"],
    "burn": ["amount"],
    "clean": ["epoch"],
    "nftMint": ["token"],
    "nftTransfer": ["token"],
    "commit": ["case"],
    "reveal": ["case"],
    "tally": ["case"],
}

_OP_REQUIRED = {
    "advanceBlock": ["to"],
    "mint": ["to", "amount"],
    "transfer": ["from", "to", "amount"],
    "rtransfer": ["from", "to", "amount"],
    "burn": ["from", "amount"],
    "clean": ["epoch", "senders"],
    "nftMint": ["token", "to"],
    "nftTransfer": ["token", "to"],
    "nftClean": ["tokens"],
    "submitFreeze": ["kind", "claimant", "stake"],
    "commit": ["case", "judge"],
    "reveal": ["case", "judge", "vote", "salt"],
    "tally": ["case"],
    "expect": ["kind"],
    "judges": ["ids"],
}


def _validate_op(op: ScenarioOp, raw: str) -> None:
    _require(op, raw, *_OP_REQUIRED.get(op.name, []))
    for key in _OP_INT_FIELDS.get(op.name, []):
        _int_param(op, raw, key)
    if op.name == "burn" and op.params.get("source", "nonreversible") not in (
        "reversible", "nonreversible"
    ):
        raise ParseError("burn source must be reversible or nonreversible", op.line)
    if op.name == "submitFreeze":
        kind = op.params["kind"]
        if kind == "fungible":
            _require(op, raw, "epoch", "from", "index")
            _int_param(op, raw, "epoch")
            _int_param(op, raw, "index")
        elif kind == "nft":
            _require(op, raw, "token", "index")
            _int_param(op, raw, "token")
            _int_param(op, raw, "index")
        else:
            raise ParseError("submitFreeze kind must be fungible or nft", op.line)
        _int_param(op, raw, "stake")
        _int_param(op, raw, "tip", required=False)
    if op.name == "commit" and "commitment" not in op.params:
        _require(op, raw, "vote", "salt")
    if op.name in ("commit", "reveal") and "vote" in op.params:
        if op.params["vote"] not in ("approve", "reject"):
            raise ParseError("vote must be approve or reject", op.line)
    if op.name == "expect":
        kind = op.params["kind"]
        if kind not in EXPECT_KINDS:
            raise ParseError(f"unknown expect kind '{kind}'", op.line)


def _parse_hex(value: str, what: str, line: int) -> bytes:
    padded = value if len(value) % 2 == 0 else "0" + value
    try:
        return bytes.fromhex(padded)
    except ValueError:
        raise ParseError(f"malformed {what} '{value}'", line) from None


@dataclass
class Check:
    line: int
    label: str
    passed: bool
    detail: str = ""


@dataclass
class RunResult:
    report: dict[str, Any]
    exit_code: int

    def to_json(self) -> str:
        return json.dumps(self.report, sort_keys=True, indent=2) + "\n"


_CONFIG_KEYS = {
    "delta", "window", "judgeFee", "minStake", "n", "freezeThreshold",
    "trialThreshold", "revealDeadline", "strikeLimit", "minorityRatio",
    "minCases", "extremeMinority", "tipTo",
}


class ScenarioRunner:
    """Executes parsed operations against one freshly wired engine."""

    def __init__(self, name: str = "scenario"):
        self.name = name
        self._config: dict[str, str] = {}
        self._built = False
        self.ledger: TokenLedger | None = None
        self.freeze: FreezeEngine | None = None
        self.nft: NftRegistry | None = None
        self.gov: Governance | None = None
        self.checks: list[Check] = []
        self.failed_ops: list[dict[str, Any]] = []
        self.clean_reports: list[dict[str, Any]] = []

    # -- engine wiring -------------------------------------------------------

    def _build(self) -> None:
        if self._built:
            return
        cfg = self._config
        epoch_config = EpochConfig(
            epoch_length=int(cfg.get("delta", 1000)),
            dispute_window=int(cfg.get("window", 24000)),
        )
        policy_kwargs: dict[str, Any] = {}
        if "judgeFee" in cfg:
            policy_kwargs["judge_fee"] = int(cfg["judgeFee"])
        if "n" in cfg:
            policy_kwargs["quorum_size"] = int(cfg["n"])
        if "minStake" in cfg:
            policy_kwargs["min_stake"] = int(cfg["minStake"])
        elif "n" in cfg or "judgeFee" in cfg:
            policy_kwargs["min_stake"] = (
                2 * policy_kwargs.get("quorum_size", 12)
                * policy_kwargs.get("judge_fee", 1)
            )
        if "freezeThreshold" in cfg:
            policy_kwargs["freeze_threshold"] = int(cfg["freezeThreshold"])
        if "trialThreshold" in cfg:
            policy_kwargs["trial_threshold"] = int(cfg["trialThreshold"])
        if "revealDeadline" in cfg:
            policy_kwargs["reveal_deadline"] = int(cfg["revealDeadline"])
        if "strikeLimit" in cfg:
            policy_kwargs["strike_limit"] = int(cfg["strikeLimit"])
        if "minorityRatio" in cfg:
            policy_kwargs["minority_ratio"] = float(cfg["minorityRatio"])
        if "minCases" in cfg:
            policy_kwargs["min_cases"] = int(cfg["minCases"])
        if "extremeMinority" in cfg:
            policy_kwargs["extreme_minority_max"] = int(cfg["extremeMinority"])
        if "tipTo" in cfg:
            policy_kwargs["tip_to"] = cfg["tipTo"]

        self.ledger = TokenLedger(epoch_config)
        self.freeze = FreezeEngine(self.ledger, governance="governance")
        self.nft = NftRegistry("governance", epoch_config.dispute_window)
        self.gov = Governance(
            self.ledger,
            self.freeze,
            self.nft,
            JudgePool(),
            FeePolicy(**policy_kwargs),
            identity="governance",
        )
        self._built = True

    # -- running ----------------------------------------------------------------

    def run(self, ops: list[ScenarioOp]) -> RunResult:
        for op in ops:
            self._run_op(op)
        return RunResult(self._report(ops), self._exit_code())

    def _exit_code(self) -> int:
        if self.failed_ops or any(not c.passed for c in self.checks):
            return 1
        return 0

    def _run_op(self, op: ScenarioOp) -> None:
        if op.name == "config":
            if self._built:
                self.failed_ops.append(
                    {"line": op.line, "op": op.name, "error": "ConfigAfterStart",
                     "message": "config lines must precede engine operations"}
                )
                return
            unknown = set(op.params) - _CONFIG_KEYS
            if unknown:
                self.failed_ops.append(
                    {"line": op.line, "op": op.name, "error": "ConfigKeyError",
                     "message": f"unknown config keys: {sorted(unknown)}"}
                )
                return
            self._config.update(op.params)
            return
        self._build()
        if op.name == "expect":
            self.checks.append(self._evaluate_expect(op))
            return
        try:
            self._dispatch(op)
        except LedgerError as err:
            kind = type(err).__name__
            if op.expect_error is not None:
                self.checks.append(Check(
                    op.line, f"{op.name} raises {op.expect_error}",
                    kind == op.expect_error,
                    "" if kind == op.expect_error else f"raised {kind}: {err}",
                ))
            else:
                self.failed_ops.append(
                    {"line": op.line, "op": op.name, "error": kind, "message": str(err)}
                )
            return
        if op.expect_error is not None:
            self.checks.append(Check(
                op.line, f"{op.name} raises {op.expect_error}", False,
                "operation succeeded",
            ))

    def _dispatch(self, op: ScenarioOp) -> None:
        p = op.params
        ledger, block = self.ledger, self.ledger.current_block
        if op.name == "judges":
            for judge in p["ids"].split(","):
                if judge:
                    self.gov.pool.add(judge)
        elif op.name == "advanceBlock":
            ledger.advance_block(int(p["to"]))
        elif op.name == "mint":
            ledger.mint(p["to"], int(p["amount"]), block)
        elif op.name == "transfer":
            ledger.transfer(p["from"], p["to"], int(p["amount"]), block)
        elif op.name == "rtransfer":
            ledger.rtransfer(p["from"], p["to"], int(p["amount"]), block)
        elif op.name == "burn":
            source = BurnSource(p.get("source", "nonreversible"))
            ledger.burn(p["from"], int(p["amount"]), block, source)
        elif op.name == "clean":
            senders = [s for s in p["senders"].split(",") if s]
            report = ledger.clean(int(p["epoch"]), senders, block)
            self.clean_reports.append({"line": op.line, **report.as_dict()})
        elif op.name == "nftMint":
            self.nft.mint(int(p["token"]), p["to"], block)
        elif op.name == "nftTransfer":
            self.nft.transfer(int(p["token"]), p["to"], block, p.get("from"))
        elif op.name == "nftClean":
            tokens = [int(t) for t in p["tokens"].split(",") if t]
            self.nft.clean(tokens, block)
        elif op.name == "submitFreeze":
            if p["kind"] == "fungible":
                target = FungibleTarget(SpendRef(int(p["epoch"]), p["from"], int(p["index"])))
            else:
                target = NftTarget(int(p["token"]), int(p["index"]))
            self.gov.submit_freeze_request(
                claimant=p["claimant"],
                target=target,
                stake=int(p["stake"]),
                tip=int(p.get("tip", 0)),
                evidence=p.get("evidence", ""),
                beacon_seed=_parse_hex(p.get("seed", "00"), "seed", op.line),
            )
        elif op.name == "commit":
            case_id = int(p["case"])
            if "commitment" in p:
                commitment = _parse_hex(p["commitment"], "commitment", op.line)
            else:
                commitment = commitment_hash(
                    Vote(p["vote"]), _parse_hex(p["salt"], "salt", op.line), case_id
                )
            self.gov.cast_commit(case_id, p["judge"], commitment)
        elif op.name == "reveal":
            self.gov.cast_reveal(
                int(p["case"]), p["judge"], Vote(p["vote"]),
                _parse_hex(p["salt"], "salt", op.line),
            )
        elif op.name == "tally":
            self.gov.tally(int(p["case"]))
        else:  # pragma: no cover - parser screens op names
            raise AssertionError(f"unhandled op {op.name}")

    # -- expectations -----------------------------------------------------------

    def _pick_claim(self, params: dict[str, str]) -> Claim | None:
        selector = params.get("claim", "last")
        order = self.freeze.claim_order
        if not order:
            return None
        if selector == "last":
            return self.freeze.claims[order[-1]]
        index = int(selector) - 1
        if not 0 <= index < len(order):
            return None
        return self.freeze.claims[order[index]]

    def _evaluate_expect(self, op: ScenarioOp) -> Check:
        p = op.params
        kind = p["kind"]
        label = " ".join(f"{k}={v}" for k, v in p.items())
        try:
            failures = self._expect_failures(kind, p)
        except LedgerError as err:
            failures = [f"{type(err).__name__}: {err}"]
        return Check(op.line, label, not failures, "; ".join(failures))

    def _expect_failures(self, kind: str, p: dict[str, str]) -> list[str]:
        failures: list[str] = []

        def want(actual: int | str | bool, key: str) -> None:
            if key not in p:
                return
            expected: Any = p[key]
            if isinstance(actual, bool):
                expected = expected == "true"
            elif isinstance(actual, int):
                expected = int(expected)
            if actual != expected:
                failures.append(f"{key}: expected {expected}, got {actual}")

        if kind == "balance":
            acct = self.ledger.account(p["addr"])
            want(acct.reversible, "r")
            want(acct.nonreversible, "nr")
            want(acct.frozen, "frozen")
            want(acct.available, "available")
        elif kind == "supply":
            want(self.ledger.total_minted, "minted")
            want(self.ledger.total_burned, "burned")
            want(self.ledger.circulating(), "circulating")
        elif kind in ("freeze", "freezeTotal", "oblig", "edge", "claimStatus"):
            claim = self._pick_claim(p)
            if claim is None:
                return [f"no claim matches selector '{p.get('claim', 'last')}'"]
            if kind == "freeze":
                want(claim.plan.to_freeze.get(p["addr"], 0), "amount")
            elif kind == "freezeTotal":
                want(claim.plan.total_frozen, "amount")
            elif kind == "oblig":
                want(claim.plan.obligations.get(p["addr"], 0), "amount")
            elif kind == "claimStatus":
                want(claim.status.value, "value")
            else:  # edge
                value = int(p["value"])
                hit = any(
                    src == p["src"] and dst == p["dst"] and val == value
                    for src, dst, val, _seq in claim.graph_edges
                )
                if not hit:
                    edges = [
                        (src, dst, val)
                        for src, dst, val, _seq in claim.graph_edges
                        if src == p["src"] and dst == p["dst"]
                    ]
                    failures.append(
                        f"no edge {p['src']}->{p['dst']} with value {value}; saw {edges}"
                    )
        elif kind == "spend":
            ref = SpendRef(int(p["epoch"]), p["from"], int(p["index"]))
            record = self.ledger.log.resolve(ref)
            want(record.amount, "amount")
            want(record.original_amount, "original")
        elif kind == "phase":
            case = self.gov.cases.get(int(p["case"]))
            if case is None:
                return [f"no case {p['case']}"]
            want(case.phase.value, "value")
        elif kind == "nftOwner":
            want(self.nft.owner_of(int(p["token"])), "owner")
        elif kind == "nftFrozen":
            token = self.nft._token(int(p["token"]))
            want(token.frozen, "value")
        elif kind == "nftHistory":
            want(len(self.nft.history(int(p["token"]))), "length")
        return failures

    # -- report ---------------------------------------------------------------

    def _report(self, ops: list[ScenarioOp]) -> dict[str, Any]:
        self._build()  # a config-only scenario still reports empty state
        accounts = {
            addr: {
                "reversible": acct.reversible,
                "nonreversible": acct.nonreversible,
                "frozen": acct.frozen,
            }
            for addr, acct in sorted(self.ledger.accounts.items())
        }
        spends = [
            {
                "epoch": ref.epoch,
                "sender": ref.sender,
                "index": ref.index,
                "to": rec.to,
                "amount": rec.amount,
                "original": rec.original_amount,
                "block": rec.block,
                "seq": rec.seq,
            }
            for ref, rec in self.ledger.log.all_records()
        ]
        claims = []
        for claim_id in self.freeze.claim_order:
            claim = self.freeze.claims[claim_id]
            claims.append({
                "id": claim.claim_id,
                "victim": claim.victim,
                "status": claim.status.value,
                "disputed": {
                    "epoch": claim.disputed.epoch,
                    "sender": claim.disputed.sender,
                    "index": claim.disputed.index,
                },
                "toFreeze": {a: v for a, v in sorted(claim.plan.to_freeze.items())},
                "obligations": {a: v for a, v in sorted(claim.plan.obligations.items())},
                "totalFrozen": claim.plan.total_frozen,
                "edges": sorted(claim.graph_edges, key=lambda e: e[3]),
            })
        cases = []
        for case_id in sorted(self.gov.cases):
            case = self.gov.cases[case_id]
            cases.append({
                "id": case.case_id,
                "phase": case.phase.value,
                "claimant": case.claimant,
                "defendant": case.defendant,
                "stakeRemaining": case.stake,
                "tipRemaining": case.tip,
                "feesPaid": case.fees_paid,
                "burned": case.burned,
                "returned": case.returned,
                "paidDefendant": case.paid_defendant,
                "tipPaidTo": case.tip_paid_to,
                "quorum": case.quorum,
                "claimId": case.claim_id,
            })
        nfts = {
            str(token_id): {
                "frozen": token.frozen,
                "owners": [[r.owner, r.block] for r in token.owners],
            }
            for token_id, token in sorted(self.nft.tokens.items())
        }
        stats = {
            "nodesVisited": sum(
                self.freeze.claims[c].plan.nodes_visited for c in self.freeze.claim_order
            ),
            "edgesTouched": sum(
                self.freeze.claims[c].plan.edges_touched for c in self.freeze.claim_order
            ),
        }
        return {
            "scenario": self.name,
            "ops": len(ops),
            "currentBlock": self.ledger.current_block,
            "accounts": accounts,
            "supply": {
                "minted": self.ledger.total_minted,
                "burned": self.ledger.total_burned,
                "circulating": self.ledger.circulating(),
            },
            "spends": spends,
            "claims": claims,
            "cases": cases,
            "nfts": nfts,
            "cleans": self.clean_reports,
            "checks": [
                {"line": c.line, "label": c.label, "pass": c.passed, "detail": c.detail}
                for c in self.checks
            ],
            "failedOps": self.failed_ops,
            "stats": stats,
        }


def run_scenario_text(text: str, name: str = "scenario") -> RunResult:
    ops = parse_scenario(text)
    runner = ScenarioRunner(name)
    result = runner.run(ops)
    return result
