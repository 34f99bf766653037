"""Append-only double-entry ledger.

Every monetary movement in the economy goes through :class:`Ledger`, which
makes conservation an auditable property: each transaction's postings sum
to zero except deposit-interest mints, and the total of all balances always
equals opening endowments plus minted interest.

Account names are plain strings. ``loan:*`` accounts are liability
accounts and carry non-positive balances.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from .money import Money, fmt

TAGS = frozenset({
    "salary", "purchase", "rent", "tax", "ubi", "dividend", "deposit",
    "withdraw", "loan-issue", "loan-repay", "loan-interest", "interest-mint",
    "invest", "refund", "public-spend", "found", "write-off",
})
MINT_TAG = "interest-mint"
# tags allowed to push the source account below zero (loan issuance, and the
# bank absorbing a defaulted loan)
LIABILITY_TAGS = frozenset({"loan-issue", "loan-interest", "write-off"})


class LedgerError(Exception):
    pass


class InsufficientFunds(LedgerError):
    pass


class UnknownAccount(LedgerError):
    pass


@dataclass(frozen=True)
class Transaction:
    txid: int
    step: int
    tag: str
    postings: tuple[tuple[str, Money], ...]
    meta: dict[str, Any] = field(default_factory=dict, compare=False)

    @property
    def net(self) -> Money:
        return sum(amount for _, amount in self.postings)


@dataclass
class ConservationReport:
    passed: bool
    supply: Money
    expected_supply: Money
    opening: Money
    minted: Money
    bad_transactions: list[int] = field(default_factory=list)
    replay_mismatches: list[str] = field(default_factory=list)
    checked: int = 0

    def __str__(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        msg = (f"{status}: supply {fmt(self.supply)} = opening {fmt(self.opening)}"
               f" + minted {fmt(self.minted)} ({self.checked} transactions)")
        if self.bad_transactions:
            msg += f"; bad transactions {self.bad_transactions}"
        if self.replay_mismatches:
            msg += f"; replay mismatches {self.replay_mismatches[:5]}"
        return msg


class Ledger:
    """Single-writer ledger with cached balances and a replayable log."""

    def __init__(self) -> None:
        self.balances: dict[str, Money] = {}
        self.opening: dict[str, Money] = {}
        self.log: list[Transaction] = []
        self.minted: Money = 0
        self._audited_upto = 0
        self._audited_minted: Money = 0

    # accounts -------------------------------------------------------------

    def open(self, account: str, initial: Money = 0) -> None:
        """Create an account, optionally with an endowment that joins the opening supply."""
        if account in self.balances:
            raise LedgerError(f"account {account!r} already open")
        if initial < 0 and not account.startswith("loan:"):
            raise LedgerError("negative endowment")
        self.balances[account] = initial
        self.opening[account] = initial

    def ensure(self, account: str) -> None:
        if account not in self.balances:
            self.open(account)

    def balance(self, account: str) -> Money:
        try:
            return self.balances[account]
        except KeyError:
            raise UnknownAccount(account) from None

    def __contains__(self, account: str) -> bool:
        return account in self.balances

    @property
    def supply(self) -> Money:
        return sum(self.balances.values())

    @property
    def opening_supply(self) -> Money:
        return sum(self.opening.values())

    # movements ------------------------------------------------------------

    def transfer(self, src: str, dst: str, amount: Money, tag: str,
                 step: int = 0, **meta: Any) -> Transaction:
        if tag not in TAGS or tag == MINT_TAG:
            raise LedgerError(f"bad transfer tag {tag!r}")
        if not isinstance(amount, int) or amount < 0:
            raise LedgerError(f"transfer amount must be non-negative int cents, got {amount!r}")
        for acct in (src, dst):
            if acct not in self.balances:
                raise UnknownAccount(acct)
        if self.balances[src] < amount and tag not in LIABILITY_TAGS:
            raise InsufficientFunds(f"{src} holds {fmt(self.balances[src])}, needs {fmt(amount)}")
        self.balances[src] -= amount
        self.balances[dst] += amount
        return self._append(step, tag, ((src, -amount), (dst, amount)), meta)

    def mint_interest(self, dst: str, amount: Money, step: int = 0, **meta: Any) -> Transaction:
        if not isinstance(amount, int) or amount < 0:
            raise LedgerError(f"mint amount must be non-negative int cents, got {amount!r}")
        if dst not in self.balances:
            raise UnknownAccount(dst)
        self.balances[dst] += amount
        self.minted += amount
        return self._append(step, MINT_TAG, ((dst, amount),), meta)

    def _append(self, step, tag, postings, meta) -> Transaction:
        tx = Transaction(len(self.log), step, tag, postings, meta)
        self.log.append(tx)
        return tx

    # rollback support for step atomicity -----------------------------------

    def mark(self) -> tuple:
        return (len(self.log), dict(self.balances), dict(self.opening), self.minted)

    def rollback(self, mark: tuple) -> None:
        n, balances, opening, minted = mark
        del self.log[n:]
        self.balances = dict(balances)
        self.opening = dict(opening)
        self.minted = minted
        if n < self._audited_upto:
            self._audited_upto = 0
            self._audited_minted = 0

    # audit ----------------------------------------------------------------

    def audit(self, full: bool = True) -> ConservationReport:
        """Check zero-sum postings, the supply identity and (if ``full``) log replay.

        With ``full=False`` only transactions appended since the previous
        incremental audit are re-checked; the supply identity is always checked.
        """
        start = 0 if full else self._audited_upto
        bad = []
        minted = 0 if full else self._audited_minted
        for tx in self.log[start:]:
            if tx.tag == MINT_TAG:
                minted += tx.net
                if len(tx.postings) != 1 or tx.postings[0][1] < 0:
                    bad.append(tx.txid)
            elif tx.net != 0:
                bad.append(tx.txid)
        mismatches: list[str] = []
        if full:
            replay = dict(self.opening)
            for tx in self.log:
                for acct, amount in tx.postings:
                    replay[acct] = replay.get(acct, 0) + amount
            mismatches = sorted(a for a in set(replay) | set(self.balances)
                                if replay.get(a, 0) != self.balances.get(a, 0))
        supply = self.supply
        expected = self.opening_supply + minted
        passed = not bad and not mismatches and supply == expected and minted == self.minted
        if passed:
            self._audited_upto = len(self.log)
            self._audited_minted = minted
        return ConservationReport(passed, supply, expected, self.opening_supply, minted,
                                  bad, mismatches, len(self.log) - start)
