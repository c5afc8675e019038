"""Association and offload optimization at fixed radio and compute budgets.

Alternates relaxed semidefinite solves with assignment rounding: an inner
loop re-solves the lifted surrogate while refreshing the ratio price from
the fractional iterate, the fractional association is rounded to a
matching, and an exact linear program then refines the offload vector and
the delay bound with the association pinned.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .assignment import round_connection
from .qcqp import (Coefficients, DelayConstants, build_qcqp,
                   compute_coefficients, delay_constants, extract_solution,
                   gamma_star, lift_to_sdp)
from .scenario import (Allocation, ResourcePlan, Scenario,
                       assemble_allocation, delay_matrices, pattern_assoc,
                       rescale_plan, tcr, trust_matrix)
from .sdp import SDPSession

# Repriced re-solves start from the previous pass's primal/dual pair and
# only need loop-grade objectives, so they get a tighter iteration budget
# than the cold first solve.
_WARM_MAX_ITER = 3000


@dataclass
class Part1Result:
    """Outcome of the association/offload block."""

    assoc: np.ndarray                  # (N, M) binary
    offload: np.ndarray                # (N,)
    split: np.ndarray                  # (N, M), one shared value
    delay_bound: float
    price: float                       # ratio price at the final point
    sdr_values: list                   # per outer pass: surrogate optima
    refine_values: list                # per outer pass: refinement values
    outer_values: list                 # one surrogate value per outer pass
    outer_iterations: int
    sdr_solves: int
    plan: ResourcePlan                 # offers shrunk to the final loads
    allocation: Allocation


def _close(new: float, old: float, tol: float) -> bool:
    return abs(new - old) <= tol * max(abs(old), 1e-12)


def _plan_allocation(plan: ResourcePlan, assoc: np.ndarray,
                     offload: np.ndarray, split: np.ndarray) -> Allocation:
    return Allocation(assoc=assoc, offload=offload, split=split,
                      bandwidth=plan.bandwidth, user_power=plan.user_power,
                      server_power=plan.server_power,
                      user_freq=plan.user_freq,
                      server_freq=plan.server_freq)


def refine_phi(scenario: Scenario, assoc: np.ndarray, price: float,
               coeffs: Coefficients, consts: DelayConstants,
               trust: np.ndarray):
    """Exact offload refinement at a fixed binary association.

    With the association pinned, the surrogate is linear in the offload
    vector and the delay bound, and every delay chain is a linear row, so
    one linear program solves the instance exactly. Returns the offload
    vector, the delay bound, and the surrogate value (trust included).
    """
    n, m = assoc.shape
    params = scenario.params
    server_of = assoc.argmax(axis=1)
    idx = np.arange(n)

    cost = np.zeros(n + 1)
    cost[:n] = coeffs.phi_linear + coeffs.pair_reduced[idx, server_of]
    cost[n] = price * params.delay_weight

    rows = np.zeros((2 * n, n + 1))
    rhs = np.zeros(2 * n)
    rows[:, n] = -1.0
    for i in range(n):
        j = server_of[i]
        rows[i, i] = consts.offload_lin[i, j]
        rhs[i] = -consts.offload_const[i, j]
        # Device-side rows of unconnected pairs lack the download term and
        # are dominated by the connected row, so only that one is emitted.
        rows[n + i, i] = consts.device_quad[i, j] + consts.device_lin[i]
        rhs[n + i] = -consts.device_const[i]

    floor = 0.0
    for i in range(n):
        for j in range(m):
            if j != server_of[i]:
                floor = max(floor, float(consts.offload_const[i, j]))

    bounds = [(0.0, 1.0)] * n + [(floor, None)]
    res = linprog(cost, A_ub=rows, b_ub=rhs, bounds=bounds, method="highs")
    if not res.success:
        raise RuntimeError(f"offload refinement failed: {res.message}")
    offload = np.clip(res.x[:n], 0.0, 1.0)
    bound = float(res.x[n])
    value = float(res.fun) - float((assoc * trust).sum())
    return offload, bound, value


def solve_part1(scenario: Scenario, plan: ResourcePlan,
                price: float | None = None) -> Part1Result:
    """Pick the association, offload ratios, and delay bound for a plan.

    The plan's per-pair offers stay fixed through every pass; only the
    returned plan has its offers shrunk to fit the servers each user
    finally landed on. When no price is given, the starting price is the
    trust-cost ratio of the fixed-pattern initial point.
    """
    params = scenario.params
    n, m = scenario.n_users, scenario.n_servers
    split = np.full((n, m), gamma_star(params.block_ratio))
    assoc = pattern_assoc(n, m)
    offload = np.full(n, 0.5)
    if price is None:
        price = tcr(scenario, _plan_allocation(plan, assoc, offload, split))
    y = float(price)

    trust = trust_matrix(scenario, plan)
    consts = delay_constants(scenario, plan, split)

    # The constraint stack never changes across passes and the surrogate
    # objective is affine in the price, so the lift is built once and each
    # pass only reprices it: objective(y) = y * cost part + trust part.
    unit_coeffs = compute_coefficients(scenario, plan, 1.0)
    zero_coeffs = compute_coefficients(scenario, plan, 0.0)
    cost_lift = lift_to_sdp(build_qcqp(scenario, plan, unit_coeffs,
                                       np.zeros_like(trust), consts))
    trust_lift = lift_to_sdp(build_qcqp(scenario, plan, zero_coeffs, trust,
                                        consts))
    session = SDPSession(cost_lift.problem)

    sdr_values: list[list[float]] = []
    refine_values: list[list[float]] = []
    outer_values: list[float] = []
    sdr_solves = 0
    outer_prev = None
    outer_iterations = 0

    for _ in range(params.max_assoc_iters):
        outer_iterations += 1

        block: list[float] = []
        sdr_prev = None
        frac_assoc = assoc
        frac_offload = offload
        for _ in range(params.max_sdr_iters):
            objective = (y * cost_lift.problem.objective
                         + trust_lift.problem.objective)
            budget = params.sdp_max_iter if sdr_solves == 0 \
                else min(params.sdp_max_iter, _WARM_MAX_ITER)
            sol = session.solve(objective=objective,
                                aux_objective=y * params.delay_weight,
                                tol=params.sdp_tol, max_iter=budget)
            sdr_solves += 1
            if sol.status == "infeasible":
                raise RuntimeError(
                    "association relaxation reported infeasible "
                    f"(residual {sol.primal_residual:.3e})")
            frac_assoc, frac_offload, _ = extract_solution(sol, cost_lift)
            block.append(sol.objective)
            y = tcr(scenario, _plan_allocation(plan, frac_assoc,
                                               frac_offload, split))
            if sdr_prev is not None and _close(sol.objective, sdr_prev,
                                               params.tol_sdr):
                break
            sdr_prev = sol.objective
        sdr_values.append(block)

        assoc = round_connection(frac_assoc)

        # The price is frozen through the refinement passes so the exact
        # subproblem keeps its descent guarantee; it is refreshed from the
        # refined point before the next outer pass.
        coeffs = compute_coefficients(scenario, plan, y)
        refine_block: list[float] = []
        refine_prev = None
        value = 0.0
        bound = 0.0
        for _ in range(params.max_phi_iters):
            offload, bound, value = refine_phi(scenario, assoc, y, coeffs,
                                               consts, trust)
            refine_block.append(value)
            if refine_prev is not None and _close(value, refine_prev,
                                                  params.tol_phi):
                break
            refine_prev = value
        refine_values.append(refine_block)

        outer_values.append(value)
        y = tcr(scenario, _plan_allocation(plan, assoc, offload, split))
        if outer_prev is not None:
            prev_value, prev_assoc, prev_offload = outer_prev
            settled = (np.array_equal(assoc, prev_assoc)
                       and np.max(np.abs(offload - prev_offload))
                       <= params.tol_assoc)
            if settled or _close(value, prev_value, params.tol_assoc):
                break
        outer_prev = (value, assoc.copy(), offload.copy())

    shrunk = rescale_plan(scenario, plan, assoc)
    alloc = assemble_allocation(scenario, assoc, offload, split, shrunk,
                                delay_bound=0.0)
    server_delay, user_delay = delay_matrices(scenario, alloc)
    bound = float(np.maximum(server_delay, user_delay).max())
    alloc.delay_bound = bound
    final_price = tcr(scenario, alloc)
    return Part1Result(assoc=assoc, offload=offload, split=split,
                       delay_bound=bound, price=final_price,
                       sdr_values=sdr_values, refine_values=refine_values,
                       outer_values=outer_values,
                       outer_iterations=outer_iterations,
                       sdr_solves=sdr_solves, plan=shrunk, allocation=alloc)


__all__ = ["Part1Result", "refine_phi", "solve_part1"]
