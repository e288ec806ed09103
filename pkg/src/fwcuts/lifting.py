"""Sequential lifting of reduced-knapsack inequalities back to the full row.

A cut valid for the reduced knapsack (fixed variables removed) is extended to
a cut valid for the original single-row knapsack by introducing the fixed
variables one at a time.  Variables fixed at 1 are "down-lifted" first: each
release restores that item's weight to the capacity, so every intermediate
maximization runs over a nonnegative integer capacity.  Variables fixed at 0
are "up-lifted" afterwards.  Each coefficient comes from one exact knapsack
maximization over the variables introduced so far (real-valued profits,
capacity-indexed table).

The lifted right-hand side is the reduced one plus the sum of the
down-lifting coefficients, so at an LP point with the fixed variables at
their fixed values the violation of the lifted cut equals the violation of
the reduced cut.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionMismatchError
from .oracles import KnapsackSubproblem, knapsack_dp_max
from .separation import Cut

ORDER_DOWN_UP = "down-up"
ORDER_DOWN_ONLY = "down"
_POLICIES = (ORDER_DOWN_UP, ORDER_DOWN_ONLY)


@dataclass(frozen=True)
class LiftedCut:
    """A full-row inequality <alpha_full, x> <= beta_full obtained by lifting.

    `lifted_coeffs` maps each originally-fixed index to its coefficient
    (0.0 for variables skipped by the down-only policy); `order_used` is the
    sequence in which fixed variables were introduced.
    """

    alpha_full: np.ndarray
    beta_full: float
    lifted_coeffs: dict[int, float]
    order_used: tuple[int, ...]
    source: str = "lifted"

    def __post_init__(self):
        object.__setattr__(
            self, "alpha_full", np.asarray(self.alpha_full, dtype=np.float64)
        )

    def violation(self, point) -> float:
        return float(self.alpha_full @ np.asarray(point, dtype=np.float64) - self.beta_full)

    def as_cut(self, violation_at_target: float) -> Cut:
        return Cut(
            alpha=self.alpha_full,
            beta=self.beta_full,
            violation_at_target=violation_at_target,
            source=self.source,
        )


def _dp_value(profits, weights, capacity: int) -> float:
    """Exact max of <profits, x> over the 0/1 knapsack; 0 on an empty or
    infeasible item set (the empty selection is always feasible)."""
    if capacity < 0 or len(profits) == 0:
        return 0.0
    value, _ = knapsack_dp_max(
        KnapsackSubproblem.plain(weights, capacity), np.asarray(profits, dtype=np.float64)
    )
    return value


def uplift(processed_alpha, processed_weights, rhs: float, capacity: int, item_weight: int) -> float:
    """Coefficient for releasing one variable fixed at zero.

    The inequality <alpha, x> <= rhs is valid over the processed items at
    `capacity` with the new item fixed at 0.  Setting the item to 1 leaves
    capacity - item_weight for the others, so the largest coefficient that
    keeps the inequality valid is rhs minus the maximum the others can still
    reach.
    """
    z = _dp_value(processed_alpha, processed_weights, capacity - int(item_weight))
    return float(rhs) - z


def downlift(
    processed_alpha, processed_weights, rhs: float, capacity_when_fixed: int, item_weight: int
) -> tuple[float, float]:
    """Coefficient and updated rhs for releasing one variable fixed at one.

    The inequality is valid over the processed items at `capacity_when_fixed`
    (the item's weight already subtracted).  Freeing the item restores its
    weight; the x_j = 0 scenario then allows the others to reach z, so the
    coefficient is z - rhs and the right-hand side grows by the same amount.
    Returns (beta_j, new_rhs); beta_j may have either sign.
    """
    z = _dp_value(
        processed_alpha, processed_weights, int(capacity_when_fixed) + int(item_weight)
    )
    beta = z - float(rhs)
    return beta, float(rhs) + beta


def lift_cut(
    reduced_cut: Cut,
    sub: KnapsackSubproblem,
    order_policy: str = ORDER_DOWN_UP,
    f1_order: Sequence[int] | None = None,
    f0_order: Sequence[int] | None = None,
) -> LiftedCut:
    """Lift a cut valid for the reduced knapsack to the full row.

    `f1_order` / `f0_order` override the default ascending introduction order
    within each group (validity holds for every order; coefficients may
    differ).  The down-only policy leaves the zero-fixed variables at
    coefficient 0, which is valid because the cut then does not constrain
    them.
    """
    if order_policy not in _POLICIES:
        raise ValueError(f"unknown lifting order policy {order_policy!r}")
    if sub.row_weights is None:
        raise ValueError("subproblem does not carry the original row; cannot lift")
    alpha = np.asarray(reduced_cut.alpha, dtype=np.float64)
    if alpha.shape != (sub.size,):
        raise DimensionMismatchError("cut dimension differs from the reduced knapsack")

    f1 = tuple(f1_order) if f1_order is not None else sub.fixed_one
    f0 = tuple(f0_order) if f0_order is not None else sub.fixed_zero
    if sorted(f1) != sorted(sub.fixed_one) or sorted(f0) != sorted(sub.fixed_zero):
        raise ValueError("lifting orders must permute the fixed index sets")

    n = sub.original_dimension
    row_w = sub.row_weights
    alpha_full = np.zeros(n)
    alpha_full[list(sub.index_map)] = alpha
    rhs = float(reduced_cut.beta)
    capacity = sub.capacity
    processed = list(sub.index_map)
    lifted: dict[int, float] = {}
    order_used: list[int] = []

    for j in f1:
        beta_j, rhs = downlift(
            alpha_full[processed], row_w[processed], rhs, capacity, int(row_w[j])
        )
        capacity += int(row_w[j])
        alpha_full[j] = beta_j
        lifted[j] = beta_j
        processed.append(j)
        order_used.append(j)
    assert capacity == sub.row_capacity

    if order_policy == ORDER_DOWN_UP:
        for j in f0:
            beta_j = uplift(
                alpha_full[processed], row_w[processed], rhs, capacity, int(row_w[j])
            )
            alpha_full[j] = beta_j
            lifted[j] = beta_j
            processed.append(j)
            order_used.append(j)
    else:
        for j in f0:
            lifted[j] = 0.0

    return LiftedCut(
        alpha_full=alpha_full,
        beta_full=rhs,
        lifted_coeffs=lifted,
        order_used=tuple(order_used),
    )
