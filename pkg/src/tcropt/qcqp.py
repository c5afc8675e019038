"""Surrogate objective for the association block and its semidefinite lift.

At fixed resources and price, the weighted trust-minus-cost objective in
the association matrix and offload ratios reduces to a quadratic form
after the per-pair frequency split is optimized in closed form. This
module builds that quadratic, lifts it to a rank-relaxed semidefinite
program (with an epigraph scalar for the delay), and maps solutions back.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scenario import (ResourcePlan, Scenario, plan_rates, trust_matrix,
                       verification_delay)
from .sdp import SDPProblem, SDPSolution

_CORNER_FLOOR = 1e-9


def gamma_star(block_ratio: float) -> float:
    """Frequency split minimizing the split-dependent server energy.

    The energy contribution is quadratic in the split with a positive
    curvature, so the minimizer has the closed form r / (1 + r).
    """
    if block_ratio <= 0:
        raise ValueError("block_ratio must be positive")
    return block_ratio / (1.0 + block_ratio)


@dataclass(frozen=True)
class Coefficients:
    """Per-pair weights of the reduced association/offload objective.

    phi_linear multiplies the offload ratio alone, pair_base multiplies
    the association-offload product before the split is optimized,
    split_lin and split_quad are the linear and quadratic split weights,
    and pair_reduced folds the optimal split back into pair_base.
    """

    phi_linear: np.ndarray             # (N,)
    pair_base: np.ndarray              # (N, M)
    split_lin: np.ndarray              # (N, M)
    split_quad: np.ndarray             # (N, M)
    pair_reduced: np.ndarray           # (N, M)
    price: float


def compute_coefficients(scenario: Scenario, plan: ResourcePlan,
                         price: float) -> Coefficients:
    if price < 0:
        raise ValueError("price must be nonnegative")
    p = scenario.params
    rate_up, rate_down = plan_rates(scenario, plan)
    if np.any(rate_up <= 0) or np.any(rate_down <= 0):
        i, j = np.argwhere((rate_up <= 0) | (rate_down <= 0))[0]
        raise ValueError(
            f"degenerate pair (user {i}, server {j}): zero link rate")
    if np.any(plan.server_freq <= 0):
        i, j = np.argwhere(plan.server_freq <= 0)[0]
        raise ValueError(
            f"degenerate pair (user {i}, server {j}): no server frequency")
    if np.any(plan.user_freq <= 0):
        i = int(np.argwhere(plan.user_freq <= 0)[0][0])
        raise ValueError(f"degenerate user {i}: no local frequency")

    ye = price * p.energy_weight
    d = scenario.user_data
    kap_u = scenario.user_switch
    kap_s = scenario.server_switch[None, :]
    f_block = scenario.server_block_cycles[None, :]
    f_data = scenario.server_data_cycles[None, :]
    fsq = plan.server_freq ** 2

    phi_linear = (ye * (p.feedback_ratio - 1.0) * kap_u * d
                  * scenario.user_cycles * plan.user_freq ** 2)
    transmit = d[:, None] * (plan.user_power[:, None] / rate_up
                             + plan.server_power * p.feedback_ratio
                             / rate_down)
    block_term = p.block_ratio * ye * kap_s * d[:, None] * f_block * fsq
    pair_base = ye * transmit + block_term
    split_lin = -2.0 * block_term
    split_quad = ye * kap_s * d[:, None] * (f_data + p.block_ratio * f_block) * fsq

    with np.errstate(divide="ignore", invalid="ignore"):
        shift = np.where(split_quad > 0,
                         split_lin ** 2 / (4.0 * split_quad), 0.0)
    pair_reduced = pair_base - shift
    return Coefficients(phi_linear=phi_linear, pair_base=pair_base,
                        split_lin=split_lin, split_quad=split_quad,
                        pair_reduced=pair_reduced, price=price)


@dataclass(frozen=True)
class DelayConstants:
    """Delay-chain constants at fixed resources and split.

    The offload-side chain is offload_lin * x * phi + offload_const; the
    device-side chain is device_quad * x * phi + device_lin * phi
    + device_const per pair.
    """

    offload_lin: np.ndarray            # (N, M)
    offload_const: np.ndarray          # (N, M)
    device_quad: np.ndarray            # (N, M)
    device_lin: np.ndarray             # (N,)
    device_const: np.ndarray           # (N,)


def delay_constants(scenario: Scenario, plan: ResourcePlan,
                    split: np.ndarray) -> DelayConstants:
    p = scenario.params
    d = scenario.user_data[:, None]
    rate_up, rate_down = plan_rates(scenario, plan)
    f_data = scenario.server_data_cycles[None, :]
    f_block = scenario.server_block_cycles[None, :]

    offload_lin = (d / rate_up
                   + d * f_data / (split * plan.server_freq)
                   + d * p.block_ratio * f_block
                   / ((1.0 - split) * plan.server_freq))
    offload_const = (scenario.block_delay
                     + verification_delay(scenario, split, plan.server_freq))
    device_quad = p.feedback_ratio * d / rate_down
    local = scenario.user_data * scenario.user_cycles / plan.user_freq
    device_lin = (p.feedback_ratio - 1.0) * local
    device_const = local
    return DelayConstants(offload_lin=offload_lin,
                          offload_const=offload_const,
                          device_quad=device_quad, device_lin=device_lin,
                          device_const=device_const)


@dataclass(frozen=True)
class QCQPForm:
    """Quadratic surrogate in the stacked vector (offload, associations)."""

    n_users: int
    n_servers: int
    quad: np.ndarray                   # (K0, K0) symmetric
    lin: np.ndarray                    # (K0,)
    band_offers: np.ndarray            # (N, M)
    power_offers: np.ndarray           # (N, M)
    freq_offers: np.ndarray            # (N, M)
    band_caps: np.ndarray              # (M,)
    power_caps: np.ndarray             # (M,)
    freq_caps: np.ndarray              # (M,)
    delays: DelayConstants
    price: float
    delay_weight: float

    @property
    def dim(self) -> int:
        return self.n_users * (1 + self.n_servers)


def xpos(n: int, m: int, n_users: int) -> int:
    """Index of association entry (n, m) in the stacked decision vector."""
    return n_users + m * n_users + n


def build_qcqp(scenario: Scenario, plan: ResourcePlan, coeffs: Coefficients,
               trust_values: np.ndarray,
               delays: DelayConstants) -> QCQPForm:
    n, m = trust_values.shape
    k0 = n * (1 + m)
    quad = np.zeros((k0, k0))
    lin = np.zeros(k0)
    lin[:n] = coeffs.phi_linear
    idx = np.arange(n)
    for j in range(m):
        lin[n + j * n: n + (j + 1) * n] = -trust_values[:, j]
        quad[idx, n + j * n + idx] += coeffs.pair_reduced[:, j] / 2.0
        quad[n + j * n + idx, idx] += coeffs.pair_reduced[:, j] / 2.0
    return QCQPForm(
        n_users=n, n_servers=m, quad=quad, lin=lin,
        band_offers=plan.bandwidth.copy(),
        power_offers=plan.server_power.copy(),
        freq_offers=plan.server_freq.copy(),
        band_caps=scenario.server_bandwidth.copy(),
        power_caps=scenario.server_max_power.copy(),
        freq_caps=scenario.server_max_freq.copy(),
        delays=delays, price=coeffs.price,
        delay_weight=scenario.params.delay_weight,
    )


def qcqp_objective(form: QCQPForm, assoc: np.ndarray, offload: np.ndarray,
                   delay_bound: float) -> float:
    """Scalar surrogate value at a concrete (association, offload) point."""
    q = np.concatenate([offload, assoc.T.ravel()])
    return float(q @ form.quad @ q + form.lin @ q
                 + form.price * form.delay_weight * delay_bound)


@dataclass(frozen=True)
class LiftedProblem:
    problem: SDPProblem
    n_users: int
    n_servers: int


def lift_to_sdp(form: QCQPForm) -> LiftedProblem:
    """Rank-relaxed lift with the delay epigraph kept as a free scalar.

    Beyond the direct images of the quadratic constraints, the lift adds
    sign and product cuts (offload-association cross terms are between 0
    and the association value, and the epigraph scalar is nonnegative);
    without them the relaxation is unbounded below. All cuts hold at every
    feasible binary point, so the lifted optimum stays a lower bound.
    """
    n, m = form.n_users, form.n_servers
    k0 = form.dim
    k = k0 + 1
    corner = k0

    def sym(entries) -> np.ndarray:
        mat = np.zeros((k, k))
        for i, j, val in entries:
            mat[i, j] += val / 2.0
            mat[j, i] += val / 2.0
        return mat

    eq_mats, eq_rhs = [], []
    ineq_mats, ineq_rhs, ineq_aux = [], [], []

    one = np.zeros((k, k))
    one[corner, corner] = 1.0
    eq_mats.append(one)
    eq_rhs.append(1.0)

    for j in range(m):
        for i in range(n):
            pos = xpos(i, j, n)
            mat = np.zeros((k, k))
            mat[pos, pos] = 1.0
            mat[pos, corner] = -0.5
            mat[corner, pos] = -0.5
            eq_mats.append(mat)
            eq_rhs.append(0.0)
    for i in range(n):
        eq_mats.append(sym([(xpos(i, j, n), corner, 1.0) for j in range(m)]))
        eq_rhs.append(1.0)

    for i in range(n):
        ineq_mats.append(sym([(i, corner, 1.0)]))
        ineq_rhs.append(1.0)
        ineq_aux.append(0.0)
        ineq_mats.append(sym([(i, corner, -1.0)]))
        ineq_rhs.append(0.0)
        ineq_aux.append(0.0)

    for offers, caps in ((form.band_offers, form.band_caps),
                         (form.power_offers, form.power_caps),
                         (form.freq_offers, form.freq_caps)):
        for j in range(m):
            ineq_mats.append(sym([(xpos(i, j, n), corner, offers[i, j])
                                  for i in range(n)]))
            ineq_rhs.append(float(caps[j]))
            ineq_aux.append(0.0)

    d = form.delays
    for j in range(m):
        for i in range(n):
            pos = xpos(i, j, n)
            ineq_mats.append(sym([(i, pos, d.offload_lin[i, j])]))
            ineq_rhs.append(-float(d.offload_const[i, j]))
            ineq_aux.append(-1.0)
    for j in range(m):
        for i in range(n):
            pos = xpos(i, j, n)
            ineq_mats.append(sym([(i, pos, d.device_quad[i, j]),
                                  (i, corner, d.device_lin[i])]))
            ineq_rhs.append(-float(d.device_const[i]))
            ineq_aux.append(-1.0)

    # Product cuts: 0 <= phi_i * x_ij <= x_ij, plus a nonnegative epigraph.
    for j in range(m):
        for i in range(n):
            pos = xpos(i, j, n)
            ineq_mats.append(sym([(i, pos, -1.0)]))
            ineq_rhs.append(0.0)
            ineq_aux.append(0.0)
            ineq_mats.append(sym([(i, pos, 1.0), (pos, corner, -1.0)]))
            ineq_rhs.append(0.0)
            ineq_aux.append(0.0)
    ineq_mats.append(np.zeros((k, k)))
    ineq_rhs.append(0.0)
    ineq_aux.append(-1.0)

    objective = np.zeros((k, k))
    objective[:k0, :k0] = form.quad
    objective[:k0, corner] = form.lin / 2.0
    objective[corner, :k0] = form.lin / 2.0
    problem = SDPProblem(
        dim=k, objective=objective,
        eq_mats=eq_mats, eq_rhs=eq_rhs,
        ineq_mats=ineq_mats, ineq_rhs=ineq_rhs,
        eq_aux=[0.0] * len(eq_mats), ineq_aux=ineq_aux,
        aux_objective=form.price * form.delay_weight, with_aux=True,
    )
    return LiftedProblem(problem=problem, n_users=n, n_servers=m)


def extract_solution(solution: SDPSolution, lifted: LiftedProblem):
    """Read a fractional (association, offload, delay bound) off the lift.

    Uses the corner column when the corner entry is healthy, otherwise
    falls back to the dominant eigenvector.
    """
    n, m = lifted.n_users, lifted.n_servers
    k0 = n * (1 + m)
    corner = k0
    S = solution.X
    pivot = S[corner, corner]
    if pivot >= _CORNER_FLOOR:
        q = S[:corner, corner] / pivot
    else:
        vals, vecs = np.linalg.eigh(S)
        lead = vecs[:, -1] * math.sqrt(max(vals[-1], 0.0))
        if abs(lead[corner]) < 1e-12:
            raise ValueError("lift collapsed: no usable corner component")
        q = lead[:corner] / lead[corner]
    offload = np.clip(q[:n], 0.0, 1.0)
    assoc = np.clip(q[n:].reshape(m, n).T, 0.0, 1.0)
    return assoc, offload, float(solution.aux_T)


__all__ = ["gamma_star", "Coefficients", "compute_coefficients",
           "DelayConstants", "delay_constants", "QCQPForm", "xpos",
           "build_qcqp", "qcqp_objective", "LiftedProblem", "lift_to_sdp",
           "extract_solution"]
