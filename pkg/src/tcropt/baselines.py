"""Comparison schemes sharing the scenario and metrics code paths.

Four reference points bracket the full optimizer: random connections
with equal resource shares, greedy load-balanced connections with equal
shares, association and offload optimization over equal shares, and
per-link resource optimization under the greedy connections. All of
them return allocations that pass the feasibility audit, so measured
gaps come from decision quality rather than constraint slack.
"""

from __future__ import annotations

import time

import numpy as np

from .dashf import OuterTraceRow, RunTrace, dinkelbach_update
from .part1 import solve_part1
from .part2 import solve_part2
from .qcqp import gamma_star
from .scenario import (Allocation, ResourcePlan, Scenario,
                       assemble_allocation, compute_metrics, delay_matrices,
                       equal_split_plan)


def _realized(scenario: Scenario, assoc: np.ndarray, offload: np.ndarray,
              plan: ResourcePlan) -> Allocation:
    """Commit a plan and stamp it with its realized worst delay."""
    n, m = assoc.shape
    split = np.full((n, m), gamma_star(scenario.params.block_ratio))
    alloc = assemble_allocation(scenario, assoc, offload, split, plan)
    server_delay, user_delay = delay_matrices(scenario, alloc)
    worst = np.maximum(server_delay, user_delay)[assoc > 0.5]
    alloc.delay_bound = float(worst.max()) if worst.size else 0.0
    return alloc


def _metrics_row(scenario: Scenario, alloc: Allocation, iteration: int,
                 price: float, assoc_iters: int, resource_iters: int,
                 seconds: float) -> OuterTraceRow:
    metrics = compute_metrics(scenario, alloc)
    return OuterTraceRow(iteration=iteration, price=price,
                         value=metrics.tcr,
                         total_delay=metrics.total_delay,
                         total_energy=metrics.total_energy,
                         total_trust=metrics.total_trust,
                         assoc_iterations=assoc_iters,
                         resource_iterations=resource_iters,
                         seconds=seconds)


def rucaa(scenario: Scenario, seed: int) -> Allocation:
    """Random connections; every cap split equally over the users it got.

    Each user joins a uniformly random server, devices run at their own
    power and frequency caps, half the task is offloaded.
    """
    rng = np.random.default_rng(seed)
    n, m = scenario.n_users, scenario.n_servers
    assoc = np.zeros((n, m))
    assoc[np.arange(n), rng.integers(0, m, size=n)] = 1.0
    plan = equal_split_plan(scenario, assoc)
    return _realized(scenario, assoc, np.full(n, 0.5), plan)


def gucaa(scenario: Scenario) -> Allocation:
    """Greedy load balancing; every cap split equally over its users.

    Users are processed in index order and each joins the server
    currently holding the fewest users, lowest index on ties.
    """
    n, m = scenario.n_users, scenario.n_servers
    assoc = np.zeros((n, m))
    load = np.zeros(m, dtype=int)
    for i in range(n):
        j = int(load.argmin())
        assoc[i, j] = 1.0
        load[j] += 1
    plan = equal_split_plan(scenario, assoc)
    return _realized(scenario, assoc, np.full(n, 0.5), plan)


def aauco_run(scenario: Scenario, tol: float | None = None,
              max_iters: int | None = None) -> tuple[Allocation, RunTrace]:
    """Connection and offload optimization over equal resource shares.

    Each pass re-solves the association block at the current ratio
    price, snaps resources back to equal shares under the new
    connections, and re-prices. Accepted ratio values never decrease;
    a pass that fails to improve ends the loop with the best kept.
    """
    params = scenario.params
    eps = params.tol_outer if tol is None else float(tol)
    cap = params.max_outer if max_iters is None else int(max_iters)
    n, m = scenario.n_users, scenario.n_servers

    assoc = gucaa(scenario).assoc
    offload = np.full(n, 0.5)
    plan = equal_split_plan(scenario, assoc)
    alloc = _realized(scenario, assoc, offload, plan)
    y = dinkelbach_update(scenario, alloc)
    rows = [_metrics_row(scenario, alloc, 0, y, 0, 0, 0.0)]

    best_alloc = alloc
    best_y = y
    reason = "iteration-cap"
    gap = float("inf")
    for it in range(1, cap + 1):
        tick = time.perf_counter()
        part1 = solve_part1(scenario, plan, price=y)
        plan = equal_split_plan(scenario, part1.assoc)
        candidate = _realized(scenario, part1.assoc, part1.offload, plan)
        y_new = dinkelbach_update(scenario, candidate)
        gap = abs(y_new - y) / max(abs(y), 1e-12)
        if y_new < best_y - 1e-12 * max(1.0, abs(best_y)):
            reason = "no-improvement"
            break
        rows.append(_metrics_row(scenario, candidate, it, y,
                                 part1.outer_iterations, 0,
                                 time.perf_counter() - tick))
        best_alloc = candidate
        converged = gap <= eps
        best_y = y = y_new
        if converged:
            reason = "converged"
            break
    return best_alloc, RunTrace(rows=tuple(rows), stop_reason=reason,
                                final_gap=gap)


def aauco(scenario: Scenario, tol: float | None = None,
          max_iters: int | None = None) -> Allocation:
    """Connection and offload optimization over equal resource shares."""
    alloc, _ = aauco_run(scenario, tol=tol, max_iters=max_iters)
    return alloc


def gucro_run(scenario: Scenario, tol: float | None = None,
              max_iters: int | None = None) -> tuple[Allocation, RunTrace]:
    """Per-link resource optimization under greedy connections.

    The association comes from the load-balancing baseline and half the
    task is offloaded; only the radio and compute grants are optimized.
    The tolerance arguments are accepted for interface symmetry; the
    resource block reads its own thresholds from the scenario.
    """
    del tol, max_iters
    n = scenario.n_users
    assoc = gucaa(scenario).assoc
    offload = np.full(n, 0.5)
    start = _realized(scenario, assoc, offload,
                      equal_split_plan(scenario, assoc))
    rows = [_metrics_row(scenario, start, 0,
                         dinkelbach_update(scenario, start), 0, 0, 0.0)]
    tick = time.perf_counter()
    result = solve_part2(scenario, assoc, offload,
                         price=dinkelbach_update(scenario, start))
    rows.append(_metrics_row(scenario, result.allocation, 1,
                             rows[0].value, 0, result.iterations,
                             time.perf_counter() - tick))
    gap = abs(rows[1].value - rows[0].value) / max(abs(rows[0].value),
                                                   1e-12)
    if rows[1].value < rows[0].value:
        return start, RunTrace(rows=(rows[0],),
                               stop_reason="no-improvement", final_gap=gap)
    return result.allocation, RunTrace(rows=tuple(rows),
                                       stop_reason="converged",
                                       final_gap=gap)


def gucro(scenario: Scenario, tol: float | None = None,
          max_iters: int | None = None) -> Allocation:
    """Per-link resource optimization under greedy connections."""
    alloc, _ = gucro_run(scenario, tol=tol, max_iters=max_iters)
    return alloc


__all__ = ["aauco", "aauco_run", "gucaa", "gucro", "gucro_run", "rucaa"]
