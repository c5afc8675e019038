"""Full alternating optimizer driving the ratio price to its fixed point.

Each outer pass re-solves the association and offload block at the
current price, re-solves the per-link resource block under the returned
connections, and re-prices the objective at the trust-cost ratio of the
new allocation. Ratios of accepted iterates can only climb, so the loop
stops when the price stalls within tolerance, when an iterate fails to
improve, or at the iteration cap, returning the best allocation seen.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .part1 import solve_part1
from .part2 import solve_part2
from .qcqp import gamma_star
from .scenario import (Allocation, ResourcePlan, Scenario,
                       assemble_allocation, compute_metrics, delay_matrices,
                       initial_plan, pattern_assoc)


@dataclass(frozen=True)
class OuterTraceRow:
    """One outer pass: the price it ran at and what the pass achieved."""

    iteration: int
    price: float             # ratio price the pass was solved at
    value: float             # trust-cost ratio of the accepted iterate
    total_delay: float
    total_energy: float
    total_trust: float
    assoc_iterations: int    # passes spent in the association block
    resource_iterations: int  # surrogate solves spent in the resource block
    seconds: float


@dataclass(frozen=True)
class RunTrace:
    """Per-pass history of a full run, oldest row first.

    `stop_reason` records why the loop ended: "converged" when the price
    moved less than the tolerance, "no-improvement" when a pass failed
    to raise the ratio, "iteration-cap" when the pass budget ran out, or
    "" for algorithms that never iterate. `final_gap` is the relative
    price movement observed at the stop, including a rejected final pass
    that the rows themselves do not show.
    """

    rows: tuple[OuterTraceRow, ...]
    stop_reason: str = ""
    final_gap: float = float("nan")

    def __iter__(self):
        return iter(self.rows)

    def __len__(self) -> int:
        return len(self.rows)

    def __getitem__(self, idx):
        return self.rows[idx]

    @property
    def final(self) -> OuterTraceRow:
        return self.rows[-1]

    @property
    def values(self) -> np.ndarray:
        return np.array([row.value for row in self.rows])


def dinkelbach_update(scenario: Scenario, alloc: Allocation) -> float:
    """New ratio price: accumulated trust over the weighted cost."""
    metrics = compute_metrics(scenario, alloc)
    if metrics.cost <= 0:
        raise ValueError("zero cost makes the ratio update degenerate")
    return metrics.total_trust / metrics.cost


def _realized(scenario: Scenario, assoc: np.ndarray, offload: np.ndarray,
              split: np.ndarray, plan: ResourcePlan) -> Allocation:
    """Commit a plan and stamp it with its realized worst delay."""
    alloc = assemble_allocation(scenario, assoc, offload, split, plan)
    server_delay, user_delay = delay_matrices(scenario, alloc)
    worst = np.maximum(server_delay, user_delay)[assoc > 0.5]
    alloc.delay_bound = float(worst.max()) if worst.size else 0.0
    return alloc


def _merge_offers(previous: ResourcePlan, grants: ResourcePlan,
                  assoc: np.ndarray) -> ResourcePlan:
    """Adopt the granted resources where users connected, keep the old

    offers elsewhere so alternative servers stay open to the next pass.
    """
    merged = previous.copy()
    connected = assoc > 0.5
    merged.bandwidth[connected] = grants.bandwidth[connected]
    merged.server_power[connected] = grants.server_power[connected]
    merged.server_freq[connected] = grants.server_freq[connected]
    merged.user_power = grants.user_power.copy()
    merged.user_freq = grants.user_freq.copy()
    return merged


def run_dashf(scenario: Scenario, tol: float | None = None,
              max_iters: int | None = None) -> tuple[Allocation, RunTrace]:
    """Alternate both blocks until the ratio price reaches a fixed point.

    Starts from the fixed connection pattern with half offload, the
    energy-balanced frequency split, and uniform per-user shares of every
    cap. Returns the best allocation found and the per-pass trace; the
    recorded ratio values never decrease because a pass that fails to
    improve the ratio ends the loop with the previous iterate kept.
    """
    params = scenario.params
    eps = params.tol_outer if tol is None else float(tol)
    cap = params.max_outer if max_iters is None else int(max_iters)
    n, m = scenario.n_users, scenario.n_servers

    split = np.full((n, m), gamma_star(params.block_ratio))
    plan = initial_plan(scenario)
    alloc = _realized(scenario, pattern_assoc(n, m), np.full(n, 0.5),
                      split, plan)
    y = dinkelbach_update(scenario, alloc)
    start_metrics = compute_metrics(scenario, alloc)
    rows = [OuterTraceRow(iteration=0, price=y, value=y,
                          total_delay=start_metrics.total_delay,
                          total_energy=start_metrics.total_energy,
                          total_trust=start_metrics.total_trust,
                          assoc_iterations=0, resource_iterations=0,
                          seconds=0.0)]

    best_alloc = alloc
    best_y = y
    reason = "iteration-cap"
    gap = float("inf")
    for it in range(1, cap + 1):
        tick = time.perf_counter()
        part1 = solve_part1(scenario, plan, price=y)
        part2 = solve_part2(scenario, part1.assoc, part1.offload,
                            price=part1.price)
        candidate = part2.allocation
        y_new = dinkelbach_update(scenario, candidate)
        gap = abs(y_new - y) / max(abs(y), 1e-12)
        if y_new < best_y - 1e-12 * max(1.0, abs(best_y)):
            reason = "no-improvement"
            break
        metrics = compute_metrics(scenario, candidate)
        rows.append(OuterTraceRow(
            iteration=it, price=y, value=y_new,
            total_delay=metrics.total_delay,
            total_energy=metrics.total_energy,
            total_trust=metrics.total_trust,
            assoc_iterations=part1.outer_iterations,
            resource_iterations=part2.iterations,
            seconds=time.perf_counter() - tick,
        ))
        best_alloc = candidate
        plan = _merge_offers(plan, part2.plan, part1.assoc)
        converged = gap <= eps
        best_y = y = y_new
        if converged:
            reason = "converged"
            break
    return best_alloc, RunTrace(rows=tuple(rows), stop_reason=reason,
                                final_gap=gap)


__all__ = ["OuterTraceRow", "RunTrace", "dinkelbach_update", "run_dashf"]
