"""Per-link radio and compute grants under a fixed connection pattern.

With connections and offload shares pinned, the remaining levers are each
user's bandwidth slice, the transmit powers on both ends of the link and
the CPU frequencies on both sides, plus the delay bound they must jointly
meet. The two transmit-energy terms (power times bits over a Shannon
rate) are the only non-concave pieces of the priced objective; replacing
each with its quadratic-transform surrogate makes every term concave at
fixed auxiliaries and never overstates the true value, so alternating
exact surrogate solves with auxiliary refreshes climbs the true ratio.
Each surrogate problem is solved with a log-barrier interior method
using analytic first and second derivatives throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .qcqp import gamma_star
from .scenario import (
    Allocation,
    ResourcePlan,
    Scenario,
    assemble_allocation,
    delay_matrices,
    energy_totals,
    plan_rates,
    tcr,
    total_trust,
)

LN2 = math.log(2.0)

_MU_START = 1e-2       # first barrier weight
_BARRIER_STAGES = 5    # the weight shrinks tenfold per stage
_NEWTON_MAX = 200      # damped steps allowed per stage
_FLOOR = 1e-8          # positivity floor, in units of each cap
_CEILING = 50.0        # delay-variable ceiling, in units of its scale


@dataclass(frozen=True)
class FPAuxiliaries:
    """Quadratic-transform auxiliaries for the two transmit-energy terms.

    Entries are populated only where a connected pair actually ships
    bits; every other position holds NaN.
    """

    z1: np.ndarray                     # (N, M) uplink auxiliaries
    z2: np.ndarray                     # (N, M) feedback auxiliaries


@dataclass(frozen=True)
class ResourceTraceRow:
    """One accepted step of the resource loop."""

    iteration: int
    value: float                       # trust-cost ratio of the iterate
    kkt_residual: float


@dataclass
class InnerSolution:
    """Interior point returned by one barrier solve."""

    b: np.ndarray                      # (N,) granted bandwidth, Hz
    p_u: np.ndarray                    # (N,) device transmit power, W
    p_s: np.ndarray                    # (N,) server transmit power, W
    f_u: np.ndarray                    # (N,) device frequency, Hz
    f_s: np.ndarray                    # (N,) server frequency, Hz
    T: float                           # delay bound, s
    value: float                       # surrogate objective at the point
    kkt_residual: float                # relative stationarity residual
    newton_steps: int
    point: np.ndarray                  # scaled coordinates, reusable as a warm start


@dataclass
class Part2Result:
    """Converged resource block for a fixed association and offload."""

    b: np.ndarray                      # (N, M) bandwidth grants, Hz
    p_u: np.ndarray                    # (N,) device transmit power, W
    p_s: np.ndarray                    # (N, M) server transmit power, W
    f_u: np.ndarray                    # (N,) device frequency, Hz
    f_s: np.ndarray                    # (N, M) server frequency, Hz
    T: float                           # realized delay bound, s
    trace: list[ResourceTraceRow]
    price: float                       # trust-cost ratio of the result
    iterations: int                    # inner solves performed
    kkt_residual: float
    plan: ResourcePlan
    allocation: Allocation


def _binary_rows(assoc: np.ndarray) -> np.ndarray:
    a = np.asarray(assoc, dtype=float)
    if a.ndim != 2:
        raise ValueError("association must be a users-by-servers matrix")
    if not np.all((a == 0.0) | (a == 1.0)):
        raise ValueError("association entries must be exactly 0 or 1")
    if not np.all(a.sum(axis=1) == 1.0):
        raise ValueError("every user must connect to exactly one server")
    return a


def fp_auxiliaries(scenario: Scenario, alloc: Allocation) -> FPAuxiliaries:
    """Optimal surrogate auxiliaries at the given allocation.

    With z chosen this way the surrogate touches the true transmit
    energy, so re-solving at refreshed auxiliaries can only improve the
    genuine objective.
    """
    p = scenario.params
    assoc = np.asarray(alloc.assoc, dtype=float)
    n, m = assoc.shape
    ship = alloc.offload * scenario.user_data
    up, down = plan_rates(scenario, alloc)
    z1 = np.full((n, m), math.nan)
    z2 = np.full((n, m), math.nan)
    for i in range(n):
        if ship[i] <= 0:
            continue
        for j in range(m):
            if assoc[i, j] <= 0.5:
                continue
            if up[i, j] <= 0 or down[i, j] <= 0:
                raise ValueError(
                    f"degenerate rate for connected pair (user {i}, "
                    f"server {j}) with positive offload")
            m1 = alloc.user_power[i] * ship[i]
            m2 = alloc.server_power[i, j] * ship[i] * p.feedback_ratio
            if m1 <= 0 or m2 <= 0:
                raise ValueError(
                    f"zero transmit term for connected pair (user {i}, "
                    f"server {j}) with positive offload")
            z1[i, j] = 1.0 / (2.0 * m1 * up[i, j])
            z2[i, j] = 1.0 / (2.0 * m2 * down[i, j])
    return FPAuxiliaries(z1=z1, z2=z2)


def priced_value(scenario: Scenario, alloc: Allocation, price: float,
                 bound: float | None = None) -> float:
    """Trust minus priced cost: the quantity the ratio iteration climbs."""
    if bound is None:
        bound = float(alloc.delay_bound)
    if not math.isfinite(bound):
        raise ValueError("delay bound must be finite")
    p = scenario.params
    user_e, server_e = energy_totals(scenario, alloc)
    cost = p.energy_weight * (user_e + server_e) + p.delay_weight * bound
    return total_trust(scenario, alloc) - price * cost


def fp_value(scenario: Scenario, alloc: Allocation, price: float,
             aux: FPAuxiliaries, bound: float | None = None) -> float:
    """Priced value with transmit energies replaced by their surrogates.

    Never exceeds `priced_value` and matches it exactly when the
    auxiliaries come from `fp_auxiliaries` at the same allocation.
    """
    if bound is None:
        bound = float(alloc.delay_bound)
    if not math.isfinite(bound):
        raise ValueError("delay bound must be finite")
    p = scenario.params
    d = scenario.user_data
    phi = alloc.offload
    ship = alloc.assoc * phi[:, None] * d[:, None]
    up, down = plan_rates(scenario, alloc)

    local_cycles = scenario.user_cycles * d
    e_local = (scenario.user_switch * (1.0 - phi) * local_cycles
               * alloc.user_freq ** 2)
    e_feedback = (scenario.user_switch * p.feedback_ratio * phi
                  * local_cycles * alloc.user_freq ** 2)
    kappa = scenario.server_switch[None, :]
    f_data = scenario.server_data_cycles[None, :]
    f_block = scenario.server_block_cycles[None, :]
    e_proc = kappa * ship * f_data * (alloc.split * alloc.server_freq) ** 2
    e_gen = (kappa * ship * p.block_ratio * f_block
             * ((1.0 - alloc.split) * alloc.server_freq) ** 2)
    energy = float(e_local.sum() + e_feedback.sum()
                   + e_proc.sum() + e_gen.sum())

    for i, j in zip(*np.nonzero(ship > 0)):
        z1 = aux.z1[i, j]
        z2 = aux.z2[i, j]
        if not (math.isfinite(z1) and math.isfinite(z2)):
            raise ValueError(
                f"missing auxiliaries for shipping pair (user {i}, "
                f"server {j})")
        m1 = alloc.user_power[i] * ship[i, j]
        m2 = alloc.server_power[i, j] * ship[i, j] * p.feedback_ratio
        energy += m1 * m1 * z1 + 1.0 / (4.0 * up[i, j] ** 2 * z1)
        energy += m2 * m2 * z2 + 1.0 / (4.0 * down[i, j] ** 2 * z2)

    cost = p.energy_weight * energy + p.delay_weight * bound
    return total_trust(scenario, alloc) - price * cost


class _InnerForm:
    """Surrogate objective and constraint rows over the flat variable.

    Coordinates run (b, p_u, p_s, f_u, f_s) per user followed by the
    shared delay bound. Methods taking `w` expect physical units; the
    barrier driver works in cap-relative coordinates through `scale`.
    """

    def __init__(self, scenario: Scenario, assoc: np.ndarray,
                 offload: np.ndarray, split_of: np.ndarray, price: float,
                 aux: FPAuxiliaries, t_scale: float):
        p = scenario.params
        n = scenario.n_users
        self.n = n
        self.iT = 5 * n
        self.dim = 5 * n + 1
        served_by = assoc.argmax(axis=1)
        self.served_by = served_by
        rows = np.arange(n)

        self.sigma = p.noise_density
        self.gain = scenario.gains.g[rows, served_by]
        self.ship = offload * scenario.user_data
        self.wp = p.feedback_ratio
        self.block = scenario.block_delay
        self.e_w = price * p.energy_weight
        self.t_coef = price * p.delay_weight

        self.b_cap = scenario.server_bandwidth[served_by]
        self.pu_cap = scenario.user_max_power.astype(float)
        self.ps_cap = scenario.server_max_power[served_by]
        self.fu_cap = scenario.user_max_freq.astype(float)
        self.fs_cap = scenario.server_max_freq[served_by]

        self.ts = p.trust_scale
        self.tg = p.trust_gain
        self.hist = p.history_score

        local_cycles = scenario.user_cycles * scenario.user_data
        mix = 1.0 - offload + self.wp * offload
        self.local_coef = scenario.user_switch * local_cycles * mix
        self.lc_eff = local_cycles * mix

        f_data = scenario.server_data_cycles[served_by]
        f_block = scenario.server_block_cycles[served_by]
        kappa = scenario.server_switch[served_by]
        g1 = split_of
        g2 = 1.0 - split_of
        self.srv_coef = kappa * self.ship * (f_data * g1 ** 2
                                             + p.block_ratio * f_block * g2 ** 2)
        self.k_delay = f_data / g1 + p.block_ratio * f_block / g2

        self.z1 = np.where(self.ship > 0, aux.z1[rows, served_by], 0.0)
        self.z2 = np.where(self.ship > 0, aux.z2[rows, served_by], 0.0)
        if self.e_w > 0:
            bad = (self.ship > 0) & ~(np.isfinite(self.z1)
                                      & np.isfinite(self.z2)
                                      & (self.z1 > 0) & (self.z2 > 0))
            if bad.any():
                raise ValueError("missing auxiliaries for shipping users "
                                 f"{np.nonzero(bad)[0].tolist()}")

        self.scale = np.empty(self.dim)
        for i in range(n):
            self.scale[5 * i:5 * i + 5] = (self.b_cap[i], self.pu_cap[i],
                                           self.ps_cap[i], self.fu_cap[i],
                                           self.fs_cap[i])
        self.scale[self.iT] = t_scale
        self.t_ceiling = _CEILING * t_scale
        self.floor = _FLOOR * self.scale[:self.iT]

        # shared-cap rows, one per server and resource kind, members only
        self.cap_rows: list[tuple[np.ndarray, float]] = []
        for j in range(scenario.n_servers):
            members = np.nonzero(served_by == j)[0]
            if members.size == 0:
                continue
            for off, cap in ((0, scenario.server_bandwidth[j]),
                             (2, scenario.server_max_power[j]),
                             (4, scenario.server_max_freq[j])):
                self.cap_rows.append((5 * members + off, float(cap)))

    def _coords(self, i: int) -> tuple[int, int, int, int, int]:
        k = 5 * i
        return k, k + 1, k + 2, k + 3, k + 4

    @staticmethod
    def _rate(b: float, power: float, gain: float, sigma: float):
        """Rate, its gradient in (b, power), and the rank-1 curvature."""
        u = gain * power / (sigma * b)
        r = b * math.log1p(u) / LN2
        if u < 1e-4:
            # log1p(u) - u/(1+u) to second order, avoiding cancellation
            rb = u * u * (0.5 - 2.0 * u / 3.0) / LN2
        else:
            rb = (math.log1p(u) - u / (1.0 + u)) / LN2
        rp = gain / (sigma * (1.0 + u) * LN2)
        curv = u * u / (b * (1.0 + u) ** 2 * LN2)
        grad = np.array([rb, rp])
        vec = np.array([1.0, -b / power])
        return r, grad, vec, curv

    def objective(self, w: np.ndarray, need_hess: bool = True):
        """Surrogate value with gradient (and Hessian) in physical units."""
        grad = np.zeros(self.dim)
        hess = np.zeros((self.dim, self.dim)) if need_hess else None
        val = -self.t_coef * w[self.iT]
        grad[self.iT] = -self.t_coef
        for i in range(self.n):
            ib, ipu, ips, ifu, ifs = self._coords(i)
            b, pu, ps, fu, fs = w[ib], w[ipu], w[ips], w[ifu], w[ifs]

            # trust earned by the granted server share
            share = (b / self.b_cap[i] + ps / self.ps_cap[i]
                     + fs / self.fs_cap[i])
            arg = self.tg * (share + self.hist)
            kvec = self.tg * np.array([1.0 / self.b_cap[i],
                                       1.0 / self.ps_cap[i],
                                       1.0 / self.fs_cap[i]])
            val += self.ts * math.log1p(arg)
            idx3 = [ib, ips, ifs]
            grad[idx3] += self.ts / (1.0 + arg) * kvec
            if need_hess:
                hess[np.ix_(idx3, idx3)] -= (self.ts / (1.0 + arg) ** 2
                                             * np.outer(kvec, kvec))

            # compute energy on both sides, quadratic in the frequencies
            lc = self.e_w * self.local_coef[i]
            val -= lc * fu * fu
            grad[ifu] -= 2.0 * lc * fu
            sc = self.e_w * self.srv_coef[i]
            val -= sc * fs * fs
            grad[ifs] -= 2.0 * sc * fs
            if need_hess:
                hess[ifu, ifu] -= 2.0 * lc
                hess[ifs, ifs] -= 2.0 * sc

            if self.ship[i] > 0 and self.e_w > 0:
                shp = self.ship[i]
                # uplink transmit surrogate
                r, dr, v, curv = self._rate(b, pu, self.gain[i], self.sigma)
                z = self.z1[i]
                quad = self.e_w * z * shp * shp
                a = self.e_w / (4.0 * z)
                val -= quad * pu * pu + a / (r * r)
                grad[ipu] -= 2.0 * quad * pu
                idx2 = [ib, ipu]
                grad[idx2] += 2.0 * a * r ** -3 * dr
                if need_hess:
                    hess[ipu, ipu] -= 2.0 * quad
                    blk = (-6.0 * a * r ** -4 * np.outer(dr, dr)
                           - 2.0 * a * r ** -3 * curv * np.outer(v, v))
                    hess[np.ix_(idx2, idx2)] += blk
                # feedback transmit surrogate
                r2, dr2, v2, curv2 = self._rate(b, ps, self.gain[i],
                                                self.sigma)
                z2 = self.z2[i]
                quad2 = self.e_w * z2 * (shp * self.wp) ** 2
                a2 = self.e_w / (4.0 * z2)
                val -= quad2 * ps * ps + a2 / (r2 * r2)
                grad[ips] -= 2.0 * quad2 * ps
                idx2b = [ib, ips]
                grad[idx2b] += 2.0 * a2 * r2 ** -3 * dr2
                if need_hess:
                    hess[ips, ips] -= 2.0 * quad2
                    blk2 = (-6.0 * a2 * r2 ** -4 * np.outer(dr2, dr2)
                            - 2.0 * a2 * r2 ** -3 * curv2 * np.outer(v2, v2))
                    hess[np.ix_(idx2b, idx2b)] += blk2
        return val, grad, hess

    def _rows(self, w: np.ndarray, need_grad: bool):
        """Yield (value, indices, gradient, hessian) per constraint row.

        Every row is written as an expression that must stay negative;
        the hessian slot is None for linear rows.
        """
        one = np.array([1.0])
        for idx, cap in self.cap_rows:
            val = float(w[idx].sum()) - cap
            yield val, idx, np.ones(idx.size) if need_grad else None, None
        for i in range(self.n):
            ib, ipu, ips, ifu, ifs = self._coords(i)
            yield w[ipu] - self.pu_cap[i], [ipu], one, None
            yield w[ifu] - self.fu_cap[i], [ifu], one, None
        yield w[self.iT] - self.t_ceiling, [self.iT], one, None
        for k in range(self.iT):
            yield self.floor[k] - w[k], [k], -one, None

        big_t = w[self.iT]
        for i in range(self.n):
            ib, ipu, ips, ifu, ifs = self._coords(i)
            shp = self.ship[i]
            # offload-side chain: transmit, process, seal, propagate
            if shp > 0:
                r, dr, v, curv = self._rate(w[ib], w[ipu], self.gain[i],
                                            self.sigma)
                kd = shp * self.k_delay[i]
                val = shp / r + kd / w[ifs] + self.block - big_t
                idx = [ib, ipu, ifs, self.iT]
                gr = hh = None
                if need_grad:
                    gr = np.array([-shp * r ** -2 * dr[0],
                                   -shp * r ** -2 * dr[1],
                                   -kd * w[ifs] ** -2, -1.0])
                    hh = np.zeros((4, 4))
                    hh[:2, :2] = shp * (2.0 * r ** -3 * np.outer(dr, dr)
                                        + r ** -2 * curv * np.outer(v, v))
                    hh[2, 2] = 2.0 * kd * w[ifs] ** -3
                yield val, idx, gr, hh
            else:
                yield self.block - big_t, [self.iT], -one, None
            # device-side chain: local work, feedback check, download
            base = self.lc_eff[i]
            if shp > 0:
                r2, dr2, v2, curv2 = self._rate(w[ib], w[ips], self.gain[i],
                                                self.sigma)
                num = shp * self.wp
                val = base / w[ifu] + num / r2 - big_t
                idx = [ib, ips, ifu, self.iT]
                gr = hh = None
                if need_grad:
                    gr = np.array([-num * r2 ** -2 * dr2[0],
                                   -num * r2 ** -2 * dr2[1],
                                   -base * w[ifu] ** -2, -1.0])
                    hh = np.zeros((4, 4))
                    hh[:2, :2] = num * (2.0 * r2 ** -3 * np.outer(dr2, dr2)
                                        + r2 ** -2 * curv2 * np.outer(v2, v2))
                    hh[2, 2] = 2.0 * base * w[ifu] ** -3
                yield val, idx, gr, hh
            else:
                val = base / w[ifu] - big_t
                gr = hh = None
                if need_grad:
                    gr = np.array([-base * w[ifu] ** -2, -1.0])
                    hh = np.zeros((2, 2))
                    hh[0, 0] = 2.0 * base * w[ifu] ** -3
                yield val, [ifu, self.iT], gr, hh

    def row_values(self, w: np.ndarray) -> np.ndarray:
        return np.array([row[0] for row in self._rows(w, False)])

    def _in_linear_domain(self, w: np.ndarray) -> bool:
        """True when every linear row is strictly satisfied.

        The nonlinear rows and the objective only make sense on positive
        coordinates, so trial points must pass this gate before anything
        else touches them.
        """
        if np.any(w[:self.iT] <= self.floor):
            return False
        if w[self.iT] >= self.t_ceiling or w[self.iT] <= self.block:
            return False
        for i in range(self.n):
            if w[5 * i + 1] >= self.pu_cap[i] or w[5 * i + 3] >= self.fu_cap[i]:
                return False
        for idx, cap in self.cap_rows:
            if w[idx].sum() >= cap:
                return False
        return True

    def objective_value_hat(self, w_hat: np.ndarray) -> float:
        val, _, _ = self.objective(w_hat * self.scale, need_hess=False)
        return val

    def barrier(self, w_hat: np.ndarray, mu: float, eta: float):
        """Barrier value, gradient, Hessian and largest force, all scaled.

        The force is the biggest single contribution any term makes to
        the gradient; the stationarity residual is meaningful relative
        to it, since near-active rows evaluate their slack with absolute
        noise proportional to that magnitude.
        """
        w = w_hat * self.scale
        if not self._in_linear_domain(w):
            return math.inf, None, None, 0.0
        val, gobj, hobj = self.objective(w, need_hess=True)
        phi = -val / eta
        grad = -gobj / eta
        hess = -hobj / eta
        force = float(np.abs(grad * self.scale).max())
        for rv, idx, rg, rh in self._rows(w, True):
            if rv >= 0:
                return math.inf, None, None, 0.0
            lam = mu / (-rv)
            phi -= mu * math.log(-rv)
            push = lam * rg
            grad[idx] += push
            force = max(force, float(np.abs(push * self.scale[idx]).max()))
            hess[np.ix_(idx, idx)] += (lam / (-rv)) * np.outer(rg, rg)
            if rh is not None:
                hess[np.ix_(idx, idx)] += lam * rh
        grad_hat = grad * self.scale
        hess_hat = hess * self.scale[:, None] * self.scale[None, :]
        return phi, grad_hat, hess_hat, force

    def barrier_value(self, w_hat: np.ndarray, mu: float,
                      eta: float) -> float:
        w = w_hat * self.scale
        if not self._in_linear_domain(w):
            return math.inf
        val, _, _ = self.objective(w, need_hess=False)
        phi = -val / eta
        for rv, _idx, _rg, _rh in self._rows(w, False):
            if rv >= 0:
                return math.inf
            phi -= mu * math.log(-rv)
        return phi

    def default_start(self) -> np.ndarray:
        w_hat = np.empty(self.dim)
        frac = 1.0 / self.n
        for i in range(self.n):
            w_hat[5 * i:5 * i + 5] = (frac, 1.0, frac, 1.0, frac)
        w_hat[self.iT] = 1.0
        return w_hat

    def pull_inside(self, w_hat: np.ndarray) -> np.ndarray:
        """Nudge a point strictly inside every row, keeping its shape."""
        z = np.asarray(w_hat, dtype=float).copy()
        if z.shape != (self.dim,):
            raise ValueError("start point has the wrong dimension")
        lo = 2.0 * _FLOOR
        z[:self.iT] = np.clip(z[:self.iT], lo, 0.998)
        for idx, cap in self.cap_rows:
            cap_hat = cap / self.scale[idx[0]]
            used = z[idx].sum()
            if used > 0.997 * cap_hat:
                z[idx] *= 0.997 * cap_hat / used
        z[:self.iT] = np.maximum(z[:self.iT], 1.5 * _FLOOR)

        w = z * self.scale
        worst = self.block
        for i in range(self.n):
            ib, ipu, ips, ifu, ifs = self._coords(i)
            shp = self.ship[i]
            dev = self.lc_eff[i] / w[ifu]
            if shp > 0:
                r, _, _, _ = self._rate(w[ib], w[ipu], self.gain[i],
                                        self.sigma)
                r2, _, _, _ = self._rate(w[ib], w[ips], self.gain[i],
                                         self.sigma)
                srv = shp / r + shp * self.k_delay[i] / w[ifs] + self.block
                dev += shp * self.wp / r2
                worst = max(worst, srv)
            worst = max(worst, dev)
        if worst * (1.0 + 1e-6) + 1e-12 >= 0.99 * self.t_ceiling:
            raise RuntimeError("start point delays exceed the working range")
        # Start the bound well clear of the delay rows: Newton descends
        # into a barrier valley cheaply, but climbing out of a wall costs
        # hundreds of microscopic steps because the barrier curvature
        # grows as the inverse square of the slack.
        roomy = min(1.25 * worst + 1e-3 * self.t_ceiling,
                    0.5 * (worst + self.t_ceiling))
        z[self.iT] = max(z[self.iT], roomy / self.scale[self.iT])

        if float(self.row_values(z * self.scale).max()) >= 0:
            raise RuntimeError("could not build a strictly feasible start")
        return z


def _newton_direction(hess: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """Solve ``hess @ delta = -grad`` by Cholesky, regularising only on need.

    The barrier Hessian is positive semidefinite in exact arithmetic, but
    entries near active rows reach ``mu / slack**2`` while soft directions
    keep curvature of order one, so any ridge sized to the large entries
    would destroy the step along the soft directions. Factor unmodified
    first; escalate a diagonal shift only when the factorisation fails.
    """
    ridge = 0.0
    bump = 1e-14 * max(1.0, float(np.abs(np.diagonal(hess)).max()))
    for _ in range(20):
        try:
            work = hess if ridge == 0.0 else hess + ridge * np.eye(hess.shape[0])
            chol = np.linalg.cholesky(work)
        except np.linalg.LinAlgError:
            ridge = bump if ridge == 0.0 else ridge * 100.0
            continue
        delta = np.linalg.solve(chol.T, np.linalg.solve(chol, -grad))
        if np.isfinite(delta).all():
            return delta
        ridge = bump if ridge == 0.0 else ridge * 100.0
    return np.linalg.lstsq(hess, -grad, rcond=None)[0]


def _solve_barrier(form: _InnerForm, w_hat: np.ndarray, tol: float):
    """Damped-Newton barrier descent; returns the point and its residual.

    Convergence is judged on the stationarity residual relative to the
    largest gradient contribution, because slacks of near-active rows
    are evaluated with cancellation noise on exactly that scale.
    """
    w = w_hat
    eta = 1.0 + abs(form.objective_value_hat(w))
    steps = 0
    mu = _MU_START
    for stage in range(_BARRIER_STAGES):
        last = stage == _BARRIER_STAGES - 1
        stage_tol = tol if last else max(tol, 1e-3 * mu)
        best_w = w
        best_res = math.inf
        stall = 0
        prev_phi = math.inf
        for _ in range(_NEWTON_MAX):
            phi, grad, hess, force = form.barrier(w, mu, eta)
            if not math.isfinite(phi):
                raise RuntimeError("barrier evaluated outside its domain")
            residual = float(np.abs(grad).max()) / max(1.0, force)
            improved_res = residual < best_res
            if improved_res:
                best_res = residual
                best_w = w
            if prev_phi - phi > 1e-12 * max(1.0, abs(phi)) or improved_res:
                stall = 0
            else:
                stall += 1
            prev_phi = phi
            if residual <= stage_tol:
                break
            if stall >= 3:
                # Neither the value nor the residual is moving beyond
                # rounding noise; the stage optimum has been reached.
                break
            delta = _newton_direction(hess, grad)
            slope = float(grad @ delta)
            if slope >= 0:
                delta = -grad
                slope = -float(grad @ grad)
            floor_scale = max(1.0, abs(phi))
            t = 1.0
            moved = False
            while t >= 1e-13:
                cand = w + t * delta
                cand_phi = form.barrier_value(cand, mu, eta)
                if cand_phi <= phi + 1e-4 * t * slope:
                    moved = True
                    break
                if (t == 1.0
                        and math.isfinite(cand_phi)
                        and abs(slope) <= 1e-13 * floor_scale
                        and cand_phi <= phi + 1e-12 * floor_scale):
                    # The predicted decrease sits below double precision,
                    # so the value test cannot certify it; take the step
                    # and let the gradient criterion decide convergence.
                    moved = True
                    break
                t *= 0.5
            if not moved:
                break
            w = cand
            steps += 1
        w = best_w
        if not last:
            mu *= 0.1
    _, grad, _, force = form.barrier(w, mu, eta)
    return w, float(np.abs(grad).max()) / max(1.0, force), steps


def _uniform_plan(scenario: Scenario) -> ResourcePlan:
    """Every server cap split over all users, device resources at cap."""
    n = scenario.n_users
    return ResourcePlan(
        bandwidth=np.tile(scenario.server_bandwidth / n, (n, 1)),
        user_power=scenario.user_max_power.copy(),
        server_power=np.tile(scenario.server_max_power / n, (n, 1)),
        user_freq=scenario.user_max_freq.copy(),
        server_freq=np.tile(scenario.server_max_freq / n, (n, 1)),
    )


def _realize(scenario: Scenario, assoc: np.ndarray, offload: np.ndarray,
             split: np.ndarray, plan: ResourcePlan) -> Allocation:
    """Commit a plan and stamp it with its realized delay bound."""
    alloc = assemble_allocation(scenario, assoc, offload, split, plan)
    server_d, user_d = delay_matrices(scenario, alloc)
    worst = np.maximum(server_d, user_d)[assoc > 0.5]
    alloc.delay_bound = float(worst.max()) if worst.size else 0.0
    return alloc


def solve_part2_inner(scenario: Scenario, assoc: np.ndarray,
                      offload: np.ndarray, price: float,
                      aux: FPAuxiliaries, tol: float = 1e-7,
                      start: np.ndarray | None = None) -> InnerSolution:
    """Maximize the surrogate at fixed price and auxiliaries.

    The barrier weight drops tenfold over five stages; each stage runs
    damped Newton steps with exact derivatives until the stationarity
    residual, relative to the largest force it balances, falls under
    the stage target.
    """
    assoc = _binary_rows(assoc)
    offload = np.clip(np.asarray(offload, dtype=float), 0.0, 1.0)
    n = scenario.n_users
    gamma = gamma_star(scenario.params.block_ratio)
    split_of = np.full(n, gamma)
    split = np.full((n, scenario.n_servers), gamma)
    seed_alloc = _realize(scenario, assoc, offload, split,
                          _uniform_plan(scenario))
    form = _InnerForm(scenario, assoc, offload, split_of, price, aux,
                      t_scale=max(seed_alloc.delay_bound, scenario.block_delay))
    w0 = form.pull_inside(np.asarray(start, dtype=float)
                          if start is not None else form.default_start())
    w, kkt, steps = _solve_barrier(form, w0, tol)
    phys = w * form.scale
    idx = np.arange(n)
    return InnerSolution(
        b=phys[5 * idx],
        p_u=phys[5 * idx + 1],
        p_s=phys[5 * idx + 2],
        f_u=phys[5 * idx + 3],
        f_s=phys[5 * idx + 4],
        T=float(phys[form.iT]),
        value=float(form.objective(phys, need_hess=False)[0]),
        kkt_residual=kkt,
        newton_steps=steps,
        point=w,
    )


def fp_gradient(scenario: Scenario, alloc: Allocation, price: float,
                aux: FPAuxiliaries,
                bound: float | None = None) -> dict[str, np.ndarray | float]:
    """Analytic partials of `fp_value` at a binary-association point.

    Keys mirror the allocation fields; matrix entries on unconnected
    pairs are zero because those resources never enter the objective.
    """
    assoc = _binary_rows(alloc.assoc)
    n, m = assoc.shape
    served_by = assoc.argmax(axis=1)
    rows = np.arange(n)
    offload = np.clip(np.asarray(alloc.offload, dtype=float), 0.0, 1.0)
    split_of = alloc.split[rows, served_by]
    if np.any(split_of <= 0) or np.any(split_of >= 1):
        raise ValueError("frequency splits must lie strictly inside (0, 1)")
    if bound is None:
        bound = float(alloc.delay_bound)
    form = _InnerForm(scenario, assoc, offload, split_of, price, aux,
                      t_scale=1.0)
    w = np.empty(form.dim)
    w[5 * rows] = alloc.bandwidth[rows, served_by]
    w[5 * rows + 1] = alloc.user_power
    w[5 * rows + 2] = alloc.server_power[rows, served_by]
    w[5 * rows + 3] = alloc.user_freq
    w[5 * rows + 4] = alloc.server_freq[rows, served_by]
    w[form.iT] = bound
    _, grad, _ = form.objective(w, need_hess=False)
    out_b = np.zeros((n, m))
    out_ps = np.zeros((n, m))
    out_fs = np.zeros((n, m))
    out_b[rows, served_by] = grad[5 * rows]
    out_ps[rows, served_by] = grad[5 * rows + 2]
    out_fs[rows, served_by] = grad[5 * rows + 4]
    return {
        "bandwidth": out_b,
        "user_power": grad[5 * rows + 1],
        "server_power": out_ps,
        "user_freq": grad[5 * rows + 3],
        "server_freq": out_fs,
        "delay_bound": float(grad[form.iT]),
    }


def solve_part2(scenario: Scenario, assoc: np.ndarray, offload: np.ndarray,
                price: float | None = None) -> Part2Result:
    """Alternate surrogate solves and auxiliary refreshes to a fixed ratio.

    Starts from uniform per-user shares of every cap. Each accepted step
    re-prices the objective at the new trust-cost ratio, so the recorded
    trace can only climb; a step that fails to improve the ratio ends
    the loop with the previous iterate kept.
    """
    assoc = _binary_rows(assoc)
    offload = np.clip(np.asarray(offload, dtype=float), 0.0, 1.0)
    p = scenario.params
    n, m = assoc.shape
    gamma = gamma_star(p.block_ratio)
    split = np.full((n, m), gamma)
    alloc = _realize(scenario, assoc, offload, split, _uniform_plan(scenario))
    y = float(price) if price is not None else tcr(scenario, alloc)
    trace = [ResourceTraceRow(0, tcr(scenario, alloc), math.nan)]
    warm = None
    kkt = math.nan
    inner_calls = 0
    rows = np.arange(n)
    served_by = assoc.argmax(axis=1)
    for it in range(1, p.max_resource_iters + 1):
        aux = fp_auxiliaries(scenario, alloc)
        sol = solve_part2_inner(scenario, assoc, offload, y, aux, start=warm)
        inner_calls += 1
        plan = ResourcePlan(
            bandwidth=np.zeros((n, m)),
            user_power=sol.p_u.copy(),
            server_power=np.zeros((n, m)),
            user_freq=sol.f_u.copy(),
            server_freq=np.zeros((n, m)),
        )
        plan.bandwidth[rows, served_by] = sol.b
        plan.server_power[rows, served_by] = sol.p_s
        plan.server_freq[rows, served_by] = sol.f_s
        cand = _realize(scenario, assoc, offload, split, plan)
        y_new = tcr(scenario, cand)
        best = trace[-1].value
        if y_new < best - 1e-12 * max(1.0, abs(best)):
            break
        alloc = cand
        warm = sol.point
        kkt = sol.kkt_residual
        trace.append(ResourceTraceRow(it, y_new, sol.kkt_residual))
        if abs(y_new - best) <= p.tol_resource * max(abs(best), 1e-12):
            break
        y = y_new
    final_plan = ResourcePlan(
        bandwidth=alloc.bandwidth.copy(),
        user_power=alloc.user_power.copy(),
        server_power=alloc.server_power.copy(),
        user_freq=alloc.user_freq.copy(),
        server_freq=alloc.server_freq.copy(),
    )
    return Part2Result(
        b=alloc.bandwidth.copy(),
        p_u=alloc.user_power.copy(),
        p_s=alloc.server_power.copy(),
        f_u=alloc.user_freq.copy(),
        f_s=alloc.server_freq.copy(),
        T=float(alloc.delay_bound),
        trace=trace,
        price=float(trace[-1].value),
        iterations=inner_calls,
        kkt_residual=float(kkt),
        plan=final_plan,
        allocation=alloc,
    )


__all__ = [
    "FPAuxiliaries",
    "InnerSolution",
    "Part2Result",
    "ResourceTraceRow",
    "fp_auxiliaries",
    "fp_gradient",
    "fp_value",
    "priced_value",
    "solve_part2",
    "solve_part2_inner",
]
