"""Sequential and batch false-discovery control.

The sequential procedure is an aggressive alpha-investing rule: each
test invests the bounded transform W/(1+W) of the current wealth W, is
charged alpha/(1-alpha) (algebraically the whole wealth) and earns the
payout back on a rejection. Early hypotheses therefore get the full
budget, matching an exploration order that puts the most promising
hypotheses first. Bonferroni and Benjamini-Hochberg are included for
batch comparison.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

DEFAULT_ALPHA = 0.05


class FdrError(ValueError):
    """Raised on invalid testing parameters."""


@dataclass(frozen=True)
class Decision:
    """Immutable record of one sequential test."""

    p_value: float
    alpha_spent: float
    rejected: bool


def ai_step(wealth: float, payout: float, p_value: float) -> tuple[bool, float, float]:
    """One alpha-investing test; returns (rejected, alpha_spent, new_wealth).

    With no wealth left, nothing is spent and nothing can be rejected.
    """
    if not (0.0 <= p_value <= 1.0):
        raise FdrError("p-value must be in [0, 1]")
    if wealth <= 0.0:
        return False, 0.0, max(wealth, 0.0)
    alpha_j = wealth / (1.0 + wealth)
    rejected = p_value <= alpha_j
    # alpha_j/(1-alpha_j) equals wealth exactly; clamp float residue.
    new_wealth = max(wealth - alpha_j / (1.0 - alpha_j), 0.0)
    if rejected:
        new_wealth += payout
    return rejected, alpha_j, new_wealth


@dataclass(frozen=True)
class AlphaInvestingState:
    """Wealth ledger for a sequence of alpha-investing tests."""

    wealth: float
    payout: float
    test_index: int = 0
    decisions: tuple[Decision, ...] = field(default_factory=tuple)

    @classmethod
    def start(cls, alpha: float = DEFAULT_ALPHA, payout: Optional[float] = None) -> "AlphaInvestingState":
        if not (0.0 < alpha < 1.0):
            raise FdrError("alpha must be in (0, 1)")
        return cls(wealth=alpha, payout=alpha if payout is None else payout)


def ai_test(state: AlphaInvestingState, p_value: float) -> tuple[bool, AlphaInvestingState]:
    """Apply one test, returning the decision and the successor state."""
    rejected, alpha_spent, new_wealth = ai_step(state.wealth, state.payout, p_value)
    decision = Decision(p_value=p_value, alpha_spent=alpha_spent, rejected=rejected)
    new_state = AlphaInvestingState(
        wealth=new_wealth,
        payout=state.payout,
        test_index=state.test_index + 1,
        decisions=state.decisions + (decision,),
    )
    return rejected, new_state


def bonferroni(p_values: Sequence[float], alpha: float, m: int) -> list[bool]:
    """Reject p <= alpha/m; m is the total test count, fixed in advance."""
    if m <= 0:
        raise FdrError("m must be positive")
    if m < len(p_values):
        raise FdrError("m must be at least the number of p-values")
    threshold = alpha / m
    return [p <= threshold for p in p_values]


def benjamini_hochberg(p_values: Sequence[float], alpha: float) -> list[bool]:
    """Standard step-up rule over a batch of p-values."""
    if not len(p_values):
        raise FdrError("empty p-value list")
    m = len(p_values)
    order = sorted(range(m), key=lambda i: p_values[i])
    cutoff_rank = 0
    for rank, idx in enumerate(order, start=1):
        if p_values[idx] <= rank * alpha / m:
            cutoff_rank = rank
    decisions = [False] * m
    for rank, idx in enumerate(order, start=1):
        if rank <= cutoff_rank:
            decisions[idx] = True
    return decisions


def mfdr(rejections: Sequence[bool], is_null: Sequence[bool]) -> float:
    """V/R for one run: false discoveries over total discoveries (0 when R=0)."""
    if len(rejections) != len(is_null):
        raise FdrError("rejections and ground truth must align")
    r = sum(1 for d in rejections if d)
    if r == 0:
        return 0.0
    v = sum(1 for d, null in zip(rejections, is_null) if d and null)
    return v / r
