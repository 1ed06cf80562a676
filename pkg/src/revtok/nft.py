"""Reversible non-fungible tokens.

Each token keeps an append-only queue of (owner, block) records; the last
entry is the current owner.  Disputing the transfer that made owners[i+1] the
owner means freezing at index i: the token stops moving, and a reversal
appends the index-i owner back on top of the queue instead of rewriting
history.

Cleaning drops queue prefixes that can no longer be disputed, keeping every
record whose successor is still inside the dispute window plus the current
owner, so any freeze that was admissible before a clean is admissible after
it (at a shifted index).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import (
    BlockOrderError,
    DuplicateTokenError,
    FrozenAssetError,
    NotFrozenError,
    NotGovernanceError,
    NotOwnerError,
    UnknownTokenError,
)

Address = str


@dataclass(frozen=True)
class OwnerRecord:
    owner: Address
    block: int


@dataclass
class NftToken:
    token_id: int
    owners: list[OwnerRecord] = field(default_factory=list)
    frozen: bool = False

    @property
    def current_owner(self) -> Address:
        return self.owners[-1].owner


@dataclass
class NftCleanResult:
    token_id: int
    status: str  # "cleaned" or "skipped"
    reason: str = ""
    dropped: int = 0


class NftRegistry:
    def __init__(self, governance: Address, dispute_window: int):
        if dispute_window <= 0:
            raise ValueError("dispute_window must be positive")
        self.governance = governance
        self.dispute_window = dispute_window
        self.tokens: dict[int, NftToken] = {}

    def _token(self, token_id: int) -> NftToken:
        token = self.tokens.get(token_id)
        if token is None:
            raise UnknownTokenError(f"token {token_id}")
        return token

    def _require_governance(self, caller: Address) -> None:
        if caller != self.governance:
            raise NotGovernanceError(f"{caller} may not drive the freeze lifecycle")

    def mint(self, token_id: int, to: Address, block: int) -> None:
        if token_id in self.tokens:
            raise DuplicateTokenError(f"token {token_id}")
        self.tokens[token_id] = NftToken(token_id, [OwnerRecord(to, block)])

    def transfer(self, token_id: int, to: Address, block: int, sender: Address | None = None) -> None:
        """Append a new owner record.  `sender`, when given, must be the
        current owner; the queue's blocks must stay non-decreasing."""
        token = self._token(token_id)
        if token.frozen:
            raise FrozenAssetError(f"token {token_id} is frozen")
        if sender is not None and sender != token.current_owner:
            raise NotOwnerError(f"{sender} does not own token {token_id}")
        if block < token.owners[-1].block:
            raise BlockOrderError(
                f"block {block} is behind the token's last record {token.owners[-1].block}"
            )
        token.owners.append(OwnerRecord(to, block))

    def owner_of(self, token_id: int) -> Address:
        return self._token(token_id).current_owner

    def history(self, token_id: int) -> list[OwnerRecord]:
        return list(self._token(token_id).owners)

    def disputable_indexes(self, token_id: int, current_block: int) -> list[int]:
        """Indexes i whose i -> i+1 transfer is still inside the window."""
        token = self._token(token_id)
        return [
            i
            for i in range(len(token.owners) - 1)
            if current_block - token.owners[i + 1].block <= self.dispute_window
        ]

    def freeze(self, token_id: int, index: int, current_block: int, caller: Address) -> bool:
        """Freeze the token over the transfer that made owners[index+1] the
        owner.  Returns False (rather than raising) when the window has
        elapsed, the index does not name a transfer, or the token is already
        frozen, so governance can treat a hopeless vote as a dismissal."""
        self._require_governance(caller)
        token = self._token(token_id)
        if token.frozen:
            return False
        if not 0 <= index < len(token.owners) - 1:
            return False
        if current_block - token.owners[index + 1].block > self.dispute_window:
            return False
        token.frozen = True
        return True

    def reverse(self, token_id: int, index: int, current_block: int, caller: Address) -> None:
        """Return the token to owners[index] by appending a fresh record, and
        unfreeze it."""
        self._require_governance(caller)
        token = self._token(token_id)
        if not token.frozen:
            raise NotFrozenError(f"token {token_id} is not frozen")
        if not 0 <= index < len(token.owners):
            raise UnknownTokenError(f"token {token_id} has no record {index}")
        token.owners.append(OwnerRecord(token.owners[index].owner, current_block))
        token.frozen = False

    def reject_reverse(self, token_id: int, caller: Address) -> None:
        self._require_governance(caller)
        token = self._token(token_id)
        if not token.frozen:
            raise NotFrozenError(f"token {token_id} is not frozen")
        token.frozen = False

    def clean(self, token_ids: list[int], current_block: int) -> list[NftCleanResult]:
        """Drop history that is out of reach of any future dispute.

        Frozen tokens are skipped entirely.  For the rest, a record survives
        if its successor's block is still inside the window (its transfer can
        still be disputed) or it is the current owner.  Blocks are
        non-decreasing, so the kept records form a suffix and every still
        admissible freeze stays admissible at a shifted index.
        """
        results = []
        for token_id in token_ids:
            token = self._token(token_id)
            if token.frozen:
                results.append(NftCleanResult(token_id, "skipped", reason="frozen"))
                continue
            owners = token.owners
            kept = [
                rec
                for i, rec in enumerate(owners)
                if i == len(owners) - 1
                or current_block - owners[i + 1].block <= self.dispute_window
            ]
            dropped = len(owners) - len(kept)
            token.owners = kept
            results.append(NftCleanResult(token_id, "cleaned", dropped=dropped))
        return results
