"""Domain exceptions shared by every engine component.

All recoverable failures raise a subclass of LedgerError so callers (and the
scenario driver) can distinguish rule violations from programming bugs.  An
operation that raises must leave engine state untouched.
"""

from __future__ import annotations


class LedgerError(Exception):
    """Base class for every rule violation raised by the engine."""


class AmountOverflowError(LedgerError):
    """An amount or balance would leave the supported integer range."""


class BlockOrderError(LedgerError):
    """An operation carried a block number lower than the engine clock."""


class InsufficientNonReversibleError(LedgerError):
    """Spending more settled (non-reversible) balance than is held."""


class InsufficientReversibleError(LedgerError):
    """Spending more reversible balance than is held."""


class InsufficientBalanceError(LedgerError):
    """Burning more than the selected balance holds."""


class FrozenFloorError(LedgerError):
    """A spend would drop the reversible balance below the frozen total."""


class UnknownSpenditureError(LedgerError):
    """A spend-record reference does not resolve (bad ref, or cleaned)."""


class InvalidDisputeError(LedgerError):
    """The referenced record cannot be disputed (e.g. it is a burn)."""


class WindowElapsedError(LedgerError):
    """The dispute window for the referenced record has already closed."""


class NotGovernanceError(LedgerError):
    """A governance-only entry point was called by another identity."""


class UnknownClaimError(LedgerError):
    """No claim is registered under the given claim id."""


class ClaimNotFrozenError(LedgerError):
    """The claim is not in the Frozen state, so it cannot be settled."""


class UnknownTokenError(LedgerError):
    """No token is registered under the given token id."""


class DuplicateTokenError(LedgerError):
    """A token with this id has already been minted."""


class FrozenAssetError(LedgerError):
    """The token is frozen and cannot be transferred."""


class NotFrozenError(LedgerError):
    """A reversal was requested for a token that is not frozen."""


class NotOwnerError(LedgerError):
    """The stated sender does not own the token."""


class NotAffectedPartyError(LedgerError):
    """The claimant is not a party to the disputed record."""


class InsufficientStakeError(LedgerError):
    """The offered stake is below the configured minimum."""


class PoolTooSmallError(LedgerError):
    """The judge pool cannot seat a full quorum."""


class UnknownCaseError(LedgerError):
    """No case is registered under the given case id."""


class NotQuorumMemberError(LedgerError):
    """The voter is not part of the case's quorum."""


class DoubleVoteError(LedgerError):
    """The judge already committed or revealed in this phase."""


class CommitMismatchError(LedgerError):
    """The revealed vote and salt do not hash to the stored commitment."""


class PhaseError(LedgerError):
    """The case is not in a phase that permits the requested action."""


class ParseError(Exception):
    """A scenario file could not be parsed.

    Carries the 1-based line number and, when known, the 1-based column of
    the offending token.
    """

    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, col {column}: {message}")
        self.line = line
        self.column = column
