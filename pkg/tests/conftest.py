from __future__ import annotations

import pytest

from revtok import (
    EpochConfig,
    FeePolicy,
    FreezeEngine,
    Governance,
    JudgePool,
    NftRegistry,
    TokenLedger,
    Vote,
    commitment_hash,
)

GOV = "governance"


def make_ledger(epoch_length: int = 1000, window: int = 24000) -> TokenLedger:
    return TokenLedger(EpochConfig(epoch_length=epoch_length, dispute_window=window))


def make_engine(ledger: TokenLedger | None = None) -> tuple[TokenLedger, FreezeEngine]:
    led = ledger or make_ledger()
    return led, FreezeEngine(led, GOV)


def make_stack(
    n_judges: int = 1,
    pool_size: int | None = None,
    epoch_length: int = 1000,
    window: int = 24000,
    **policy_kwargs,
):
    """Full environment: ledger, freeze engine, NFT registry, governance."""
    led = make_ledger(epoch_length, window)
    engine = FreezeEngine(led, GOV)
    nft = NftRegistry(GOV, window)
    judges = [f"j{i:02d}" for i in range(pool_size or n_judges)]
    policy_kwargs.setdefault("judge_fee", 1)
    policy_kwargs.setdefault("quorum_size", n_judges)
    policy_kwargs.setdefault("min_stake", 2 * n_judges * policy_kwargs["judge_fee"])
    policy = FeePolicy(**policy_kwargs)
    gov = Governance(led, engine, nft, JudgePool(judges), policy, identity=GOV)
    return led, engine, nft, gov, judges


def vote_round(gov: Governance, case_id: int, votes: dict[str, Vote], salt_base: int = 0):
    """Commit, reveal, and tally one full round for the given judges."""
    for i, (judge, vote) in enumerate(votes.items()):
        salt = bytes([salt_base + i])
        gov.cast_commit(case_id, judge, commitment_hash(vote, salt, case_id))
    for i, (judge, vote) in enumerate(votes.items()):
        salt = bytes([salt_base + i])
        gov.cast_reveal(case_id, judge, vote, salt)
    return gov.tally(case_id)


@pytest.fixture
def ledger() -> TokenLedger:
    return make_ledger()


# Filled by tests/test_acceptance.py; one entry per acceptance criterion.
ACCEPTANCE_RESULTS: list[tuple[int, str, bool, str]] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for num, label, ok, note in sorted(ACCEPTANCE_RESULTS):
        status = "PASS" if ok else "FAIL"
        suffix = f" [{note}]" if note else ""
        terminalreporter.write_line(
            f"criterion {num}: {status} - {label}{suffix}", green=ok, red=not ok
        )
