"""Core system model: scenario data, channel physics, delay/energy/trust metrics.

All quantities are SI internally (Hz, W, bits, seconds, joules). Conversions
from human-friendly units happen in :mod:`tcropt.config`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

LN2 = math.log(2.0)

# Large-scale path loss constants (dB): PL = 128.1 + 37.6 log10(d / 1 km),
# distance clamped to 1 m so the model stays finite for co-located nodes.
_PL_OFFSET_DB = 128.1
_PL_SLOPE_DB = 37.6
_MIN_DISTANCE_M = 1.0


@dataclass(frozen=True)
class SystemParams:
    """Weights, blockchain constants and solver tolerances shared by a run."""

    delay_weight: float = 0.5          # weight of total delay in the cost
    energy_weight: float = 0.5         # weight of total energy in the cost
    block_ratio: float = 1.0           # task bits -> block bits change ratio
    feedback_ratio: float = 0.9        # task bits -> result bits change ratio
    block_size_bits: float = 64e6      # ledger block size (8 MB)
    wired_rate_bps: float = 15e6       # slowest inter-server wired link
    verify_cycles: float = 1e6         # CPU cycles to verify one block
    noise_density: float = 10.0 ** (-16.4)  # thermal noise, W/Hz
    trust_scale: float = 100.0 / LN2
    trust_gain: float = 0.25
    history_score: float = 0.5         # prior behaviour score in [0, 1]
    tol_outer: float = 1e-3            # ratio-iteration exit threshold
    tol_sdr: float = 1e-3              # relaxation loop exit threshold
    tol_phi: float = 1e-3              # offload-refinement loop threshold
    tol_assoc: float = 1e-3            # association block exit threshold
    tol_resource: float = 1e-3         # resource block exit threshold
    max_outer: int = 50
    max_sdr_iters: int = 20
    max_phi_iters: int = 10
    max_assoc_iters: int = 6
    max_resource_iters: int = 15
    sdp_tol: float = 1e-6
    sdp_max_iter: int = 50000

    def validate(self) -> list[str]:
        problems = []
        if self.delay_weight < 0 or self.energy_weight < 0:
            problems.append("cost weights must be nonnegative")
        if self.delay_weight + self.energy_weight <= 0:
            problems.append("at least one cost weight must be positive")
        if self.block_ratio <= 0:
            problems.append("block_ratio must be positive")
        if not 0 <= self.feedback_ratio <= 1:
            problems.append("feedback_ratio must lie in [0, 1]")
        if self.noise_density <= 0:
            problems.append("noise_density must be positive")
        if self.wired_rate_bps <= 0:
            problems.append("wired_rate_bps must be positive")
        if not 0 <= self.history_score <= 1:
            problems.append("history_score must lie in [0, 1]")
        return problems


@dataclass(frozen=True)
class UserNode:
    position: tuple[float, float]
    data_bits: float
    cycles_per_bit: float = 279.62
    max_freq: float = 1e9              # Hz
    max_power: float = 0.2             # W
    switch_cap: float = 1e-27


@dataclass(frozen=True)
class ServerNode:
    position: tuple[float, float]
    max_freq: float = 20e9             # Hz
    max_power: float = 10.0            # W
    bandwidth: float = 10e6            # Hz
    switch_cap: float = 1e-27
    data_cycles_per_bit: float = 279.62
    block_cycles_per_bit: float = 737.5


@dataclass(frozen=True)
class ChannelGains:
    """Uplink/downlink power gains, factored into path loss and fading."""

    large_scale: np.ndarray            # (N, M) path gain from distance
    fading: np.ndarray                 # (N, M) unit-mean exponential draws

    @cached_property
    def g(self) -> np.ndarray:
        return self.large_scale * self.fading


@dataclass(frozen=True)
class ScenarioConfig:
    """Knobs for synthetic scenario generation."""

    n_users: int = 20
    n_servers: int = 3
    area_m: float = 1000.0
    data_bits_lo: float = 4e6          # 500 KB
    data_bits_hi: float = 1.6e7        # 2000 KB
    user_cycles_per_bit: float = 279.62
    user_max_freq: float = 1e9
    user_max_power: float = 0.2
    user_switch_cap: float = 1e-27
    server_max_freq: float = 20e9
    server_max_power: float = 10.0
    server_bandwidth: float = 10e6
    server_switch_cap: float = 1e-27
    server_data_cycles_per_bit: float = 279.62
    server_block_cycles_per_bit: float = 737.5
    params: SystemParams = field(default_factory=SystemParams)

    def validate(self) -> list[str]:
        problems = list(self.params.validate())
        if self.n_users < 1:
            problems.append("need at least one user")
        if self.n_servers < 1:
            problems.append("need at least one server")
        if self.area_m <= 0:
            problems.append("area side must be positive")
        if not 0 < self.data_bits_lo <= self.data_bits_hi:
            problems.append("data size range must satisfy 0 < lo <= hi")
        for name in ("user_max_freq", "user_max_power", "server_max_freq",
                     "server_max_power", "server_bandwidth"):
            if getattr(self, name) <= 0:
                problems.append(f"{name} must be positive")
        return problems


@dataclass(frozen=True)
class Scenario:
    params: SystemParams
    users: tuple[UserNode, ...]
    servers: tuple[ServerNode, ...]
    gains: ChannelGains
    seed: int | None = None

    @property
    def n_users(self) -> int:
        return len(self.users)

    @property
    def n_servers(self) -> int:
        return len(self.servers)

    # Cached per-node arrays so hot loops avoid Python-level attribute walks.
    @cached_property
    def user_data(self) -> np.ndarray:
        return np.array([u.data_bits for u in self.users])

    @cached_property
    def user_cycles(self) -> np.ndarray:
        return np.array([u.cycles_per_bit for u in self.users])

    @cached_property
    def user_max_freq(self) -> np.ndarray:
        return np.array([u.max_freq for u in self.users])

    @cached_property
    def user_max_power(self) -> np.ndarray:
        return np.array([u.max_power for u in self.users])

    @cached_property
    def user_switch(self) -> np.ndarray:
        return np.array([u.switch_cap for u in self.users])

    @cached_property
    def server_max_freq(self) -> np.ndarray:
        return np.array([s.max_freq for s in self.servers])

    @cached_property
    def server_max_power(self) -> np.ndarray:
        return np.array([s.max_power for s in self.servers])

    @cached_property
    def server_bandwidth(self) -> np.ndarray:
        return np.array([s.bandwidth for s in self.servers])

    @cached_property
    def server_switch(self) -> np.ndarray:
        return np.array([s.switch_cap for s in self.servers])

    @cached_property
    def server_data_cycles(self) -> np.ndarray:
        return np.array([s.data_cycles_per_bit for s in self.servers])

    @cached_property
    def server_block_cycles(self) -> np.ndarray:
        return np.array([s.block_cycles_per_bit for s in self.servers])

    @cached_property
    def block_delay(self) -> float:
        """Fixed ledger propagation delay over the wired backbone."""
        return self.params.block_size_bits / self.params.wired_rate_bps


@dataclass
class ResourcePlan:
    """Per-pair resource hypotheses used while the association is undecided.

    Rows are users, columns servers. Entries on pairs that end up
    unconnected are offers, not commitments; `mask_to_assoc` zeroes them
    once an association is final.
    """

    bandwidth: np.ndarray              # (N, M) Hz
    user_power: np.ndarray             # (N,) W
    server_power: np.ndarray           # (N, M) W
    user_freq: np.ndarray              # (N,) Hz
    server_freq: np.ndarray            # (N, M) Hz

    def copy(self) -> "ResourcePlan":
        return ResourcePlan(self.bandwidth.copy(), self.user_power.copy(),
                            self.server_power.copy(), self.user_freq.copy(),
                            self.server_freq.copy())


@dataclass
class Allocation:
    """A complete decision: association, offload split and resources."""

    assoc: np.ndarray                  # (N, M) association, binary at output
    offload: np.ndarray                # (N,) share of each task shipped out
    split: np.ndarray                  # (N, M) server frequency share for data
    bandwidth: np.ndarray              # (N, M) Hz
    user_power: np.ndarray             # (N,) W
    server_power: np.ndarray           # (N, M) W
    user_freq: np.ndarray              # (N,) Hz
    server_freq: np.ndarray            # (N, M) Hz
    delay_bound: float = math.nan      # auxiliary epigraph value, if any

    def copy(self) -> "Allocation":
        return Allocation(self.assoc.copy(), self.offload.copy(),
                          self.split.copy(), self.bandwidth.copy(),
                          self.user_power.copy(), self.server_power.copy(),
                          self.user_freq.copy(), self.server_freq.copy(),
                          self.delay_bound)


@dataclass(frozen=True)
class Metrics:
    server_delay: np.ndarray           # (N, M) offload-side chain per pair
    user_delay: np.ndarray             # (N, M) device-side chain per pair
    total_delay: float
    user_energy: float
    server_energy: float
    total_energy: float
    total_trust: float
    cost: float
    tcr: float


@dataclass(frozen=True)
class Violation:
    constraint: str
    where: str
    amount: float

    def __str__(self) -> str:
        return f"{self.constraint} at {self.where}: excess {self.amount:.3e}"


# ---------------------------------------------------------------------------
# scenario generation

def path_gain(distance_m: np.ndarray | float) -> np.ndarray | float:
    """Large-scale power gain of the urban path-loss law."""
    d = np.maximum(distance_m, _MIN_DISTANCE_M)
    loss_db = _PL_OFFSET_DB + _PL_SLOPE_DB * np.log10(d / 1000.0)
    return 10.0 ** (-loss_db / 10.0)


def channel_gain(user: UserNode, server: ServerNode, fade: float) -> float:
    """Power gain between one user and one server for a given fading draw."""
    dx = user.position[0] - server.position[0]
    dy = user.position[1] - server.position[1]
    return float(path_gain(math.hypot(dx, dy)) * fade)


def _server_grid(m: int, side: float) -> list[tuple[float, float]]:
    # Deterministic centered lattice, row-major fill of a near-square grid.
    cols = math.ceil(math.sqrt(m))
    rows = math.ceil(m / cols)
    pts = []
    for k in range(m):
        r, c = divmod(k, cols)
        pts.append(((c + 0.5) * side / cols, (r + 0.5) * side / rows))
    return pts


def generate_scenario(config: ScenarioConfig, seed: int) -> Scenario:
    """Draw a random scenario.

    RNG draw order (fixed, part of the determinism contract):
    user positions, then task sizes, then channel fading.
    """
    problems = config.validate()
    if problems:
        raise ValueError("bad scenario config: " + "; ".join(problems))

    rng = np.random.default_rng(seed)
    n, m = config.n_users, config.n_servers
    positions = rng.uniform(0.0, config.area_m, size=(n, 2))
    data = rng.uniform(config.data_bits_lo, config.data_bits_hi, size=n)
    fading = rng.exponential(1.0, size=(n, m))

    users = tuple(
        UserNode(position=(positions[i, 0], positions[i, 1]),
                 data_bits=data[i],
                 cycles_per_bit=config.user_cycles_per_bit,
                 max_freq=config.user_max_freq,
                 max_power=config.user_max_power,
                 switch_cap=config.user_switch_cap)
        for i in range(n))
    servers = tuple(
        ServerNode(position=pos,
                   max_freq=config.server_max_freq,
                   max_power=config.server_max_power,
                   bandwidth=config.server_bandwidth,
                   switch_cap=config.server_switch_cap,
                   data_cycles_per_bit=config.server_data_cycles_per_bit,
                   block_cycles_per_bit=config.server_block_cycles_per_bit)
        for pos in _server_grid(m, config.area_m))

    upos = positions[:, None, :]
    spos = np.array([s.position for s in servers])[None, :, :]
    dist = np.linalg.norm(upos - spos, axis=2)
    gains = ChannelGains(large_scale=path_gain(dist), fading=fading)
    return Scenario(params=config.params, users=users, servers=servers,
                    gains=gains, seed=seed)


# ---------------------------------------------------------------------------
# physics

def uplink_rate(bandwidth, power, gain, noise_density):
    """Shannon rate over `bandwidth` Hz; zero bandwidth carries zero bits."""
    b = np.asarray(bandwidth, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        snr = gain * power / (noise_density * b)
        rate = b * np.log1p(snr) / LN2
    return np.where(b > 0, rate, 0.0)


def _safe_div(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    """num / den with the convention 0 / anything = 0, pos / 0 = inf."""
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    out = np.full(np.broadcast(num, den).shape, np.inf)
    np.divide(num, den, out=out, where=den != 0)
    return np.where(num == 0, 0.0, out)


def plan_rates(scenario: Scenario, plan: ResourcePlan | Allocation):
    """Uplink and downlink Shannon rates for every pair of a plan."""
    g = scenario.gains.g
    sigma = scenario.params.noise_density
    up = uplink_rate(plan.bandwidth, plan.user_power[:, None], g, sigma)
    down = uplink_rate(plan.bandwidth, plan.server_power, g, sigma)
    return up, down


def trust_matrix(scenario: Scenario, plan: ResourcePlan | Allocation) -> np.ndarray:
    """Per-pair trust value earned by the server's committed resources."""
    p = scenario.params
    share = (plan.server_power / scenario.server_max_power[None, :]
             + plan.server_freq / scenario.server_max_freq[None, :]
             + plan.bandwidth / scenario.server_bandwidth[None, :])
    return p.trust_scale * np.log1p(p.trust_gain * (share + p.history_score))


def verification_delay(scenario: Scenario, split: np.ndarray,
                       server_freq: np.ndarray) -> np.ndarray:
    """Cross-validation wait: slowest block check among the user's other

    candidate servers. Pairs holding no server frequency are skipped; a pair
    whose alternatives are all empty waits for nobody.
    """
    n, m = server_freq.shape
    vc = scenario.params.verify_cycles
    with np.errstate(divide="ignore"):
        per_pair = np.where(server_freq > 0,
                            vc / ((1.0 - split) * server_freq),
                            0.0)
    out = np.zeros((n, m))
    if m == 1:
        return out
    for j in range(m):
        others = np.delete(per_pair, j, axis=1)
        out[:, j] = others.max(axis=1)
    return out


def delay_matrices(scenario: Scenario, alloc: Allocation):
    """Offload-side and device-side delay chains for every pair."""
    p = scenario.params
    d = scenario.user_data
    x = alloc.assoc
    phi = alloc.offload
    ship = x * phi[:, None] * d[:, None]          # bits sent per pair

    up, down = plan_rates(scenario, alloc)
    f_data = scenario.server_data_cycles[None, :]
    f_block = scenario.server_block_cycles[None, :]

    t_up = _safe_div(ship, up)
    t_proc = _safe_div(ship * f_data, alloc.split * alloc.server_freq)
    t_gen = _safe_div(ship * p.block_ratio * f_block,
                      (1.0 - alloc.split) * alloc.server_freq)
    server_delay = (t_up + t_proc + t_gen + scenario.block_delay
                    + verification_delay(scenario, alloc.split,
                                         alloc.server_freq))

    local_cycles = scenario.user_cycles * d
    t_local = _safe_div((1.0 - phi) * local_cycles, alloc.user_freq)
    t_feedback = _safe_div(p.feedback_ratio * phi * local_cycles,
                           alloc.user_freq)
    t_down = _safe_div(ship * p.feedback_ratio, down)
    user_delay = (t_local + t_feedback)[:, None] + t_down
    return server_delay, user_delay


def energy_totals(scenario: Scenario, alloc: Allocation) -> tuple[float, float]:
    """(device-side, server-side) energy in joules."""
    p = scenario.params
    d = scenario.user_data
    phi = alloc.offload
    ship = alloc.assoc * phi[:, None] * d[:, None]
    up, down = plan_rates(scenario, alloc)

    local_cycles = scenario.user_cycles * d
    e_local = (scenario.user_switch * (1.0 - phi) * local_cycles
               * alloc.user_freq ** 2)
    e_feedback = (scenario.user_switch * p.feedback_ratio * phi * local_cycles
                  * alloc.user_freq ** 2)
    e_up = alloc.user_power[:, None] * _safe_div(ship, up)
    user_energy = float(e_local.sum() + e_feedback.sum() + e_up.sum())

    kappa = scenario.server_switch[None, :]
    f_data = scenario.server_data_cycles[None, :]
    f_block = scenario.server_block_cycles[None, :]
    e_proc = kappa * ship * f_data * (alloc.split * alloc.server_freq) ** 2
    e_gen = (kappa * ship * p.block_ratio * f_block
             * ((1.0 - alloc.split) * alloc.server_freq) ** 2)
    e_down = alloc.server_power * _safe_div(ship * p.feedback_ratio, down)
    server_energy = float(e_proc.sum() + e_gen.sum() + e_down.sum())
    return user_energy, server_energy


def total_trust(scenario: Scenario, alloc: Allocation) -> float:
    return float((alloc.assoc * trust_matrix(scenario, alloc)).sum())


def compute_metrics(scenario: Scenario, alloc: Allocation) -> Metrics:
    server_delay, user_delay = delay_matrices(scenario, alloc)
    connected = alloc.assoc > 1e-9
    if connected.any():
        worst = np.maximum(server_delay, user_delay)[connected]
        t_total = float(worst.max())
    else:
        t_total = 0.0
    user_energy, server_energy = energy_totals(scenario, alloc)
    e_total = user_energy + server_energy
    v = total_trust(scenario, alloc)
    p = scenario.params
    cost = p.delay_weight * t_total + p.energy_weight * e_total
    ratio = v / cost if cost > 0 else math.inf if v > 0 else 0.0
    return Metrics(server_delay=server_delay, user_delay=user_delay,
                   total_delay=t_total, user_energy=user_energy,
                   server_energy=server_energy, total_energy=e_total,
                   total_trust=v, cost=cost, tcr=ratio)


def tcr(scenario: Scenario, alloc: Allocation) -> float:
    return compute_metrics(scenario, alloc).tcr


# ---------------------------------------------------------------------------
# plan and allocation helpers

def initial_plan(scenario: Scenario) -> ResourcePlan:
    """Uniform resource hypotheses: every server cap split over all users."""
    n, m = scenario.n_users, scenario.n_servers
    return ResourcePlan(
        bandwidth=np.tile(scenario.server_bandwidth / n, (n, 1)),
        user_power=scenario.user_max_power.copy(),
        server_power=np.tile(scenario.server_max_power / n, (n, 1)),
        user_freq=scenario.user_max_freq.copy(),
        server_freq=np.tile(scenario.server_max_freq / n, (n, 1)),
    )


def equal_split_plan(scenario: Scenario, assoc: np.ndarray) -> ResourcePlan:
    """Offers sized by current load: each cap split over its connected users."""
    n = scenario.n_users
    load = np.maximum(assoc.sum(axis=0), 1.0)
    return ResourcePlan(
        bandwidth=np.tile(scenario.server_bandwidth / load, (n, 1)),
        user_power=scenario.user_max_power.copy(),
        server_power=np.tile(scenario.server_max_power / load, (n, 1)),
        user_freq=scenario.user_max_freq.copy(),
        server_freq=np.tile(scenario.server_max_freq / load, (n, 1)),
    )


def rescale_plan(scenario: Scenario, plan: ResourcePlan,
                 assoc: np.ndarray) -> ResourcePlan:
    """Shrink offers proportionally wherever a server's connected load

    exceeds its cap, leaving offers on unconnected pairs untouched.
    """
    out = plan.copy()
    caps = (scenario.server_bandwidth, scenario.server_max_power,
            scenario.server_max_freq)
    mats = (out.bandwidth, out.server_power, out.server_freq)
    connected = assoc > 0.5
    for cap, mat in zip(caps, mats):
        used = np.where(connected, mat, 0.0).sum(axis=0)
        over = used > cap
        if over.any():
            scale = np.ones_like(used)
            scale[over] = cap[over] / used[over]
            mat[:] = np.where(connected, mat * scale[None, :], mat)
    return out


def assemble_allocation(scenario: Scenario, assoc: np.ndarray,
                        offload: np.ndarray, split: np.ndarray,
                        plan: ResourcePlan,
                        delay_bound: float = math.nan) -> Allocation:
    """Commit a plan to an association: unconnected offers drop to zero."""
    keep = assoc > 0.5
    return Allocation(
        assoc=assoc.astype(float).copy(),
        offload=offload.copy(),
        split=split.copy(),
        bandwidth=np.where(keep, plan.bandwidth, 0.0),
        user_power=plan.user_power.copy(),
        server_power=np.where(keep, plan.server_power, 0.0),
        user_freq=plan.user_freq.copy(),
        server_freq=np.where(keep, plan.server_freq, 0.0),
        delay_bound=delay_bound,
    )


def pattern_assoc(n_users: int, n_servers: int) -> np.ndarray:
    """Round-robin starting association: user i joins server i mod M."""
    x = np.zeros((n_users, n_servers))
    x[np.arange(n_users), np.arange(n_users) % n_servers] = 1.0
    return x


# ---------------------------------------------------------------------------
# feasibility audit

def check_feasibility(scenario: Scenario, alloc: Allocation,
                      tol: float = 1e-6) -> list[Violation]:
    """Audit every model constraint; an empty list means feasible.

    Cap checks weight each server column by the association, so offers
    parked on unconnected pairs are not charged against the caps.
    """
    out: list[Violation] = []
    x = alloc.assoc
    n, m = x.shape

    binary_gap = np.abs(x * (1.0 - x))
    for i, j in zip(*np.nonzero(binary_gap > tol)):
        out.append(Violation("association-binary", f"user {i}, server {j}",
                             float(binary_gap[i, j])))
    row = x.sum(axis=1)
    for i in np.nonzero(np.abs(row - 1.0) > tol)[0]:
        out.append(Violation("association-row-sum", f"user {i}",
                             float(abs(row[i] - 1.0))))

    low = np.minimum(alloc.offload, 0.0)
    high = np.maximum(alloc.offload - 1.0, 0.0)
    for i in np.nonzero((-low + high) > tol)[0]:
        out.append(Violation("offload-range", f"user {i}",
                             float(-low[i] + high[i])))

    bad_split = (alloc.split <= 0.0) | (alloc.split >= 1.0)
    for i, j in zip(*np.nonzero(bad_split & (x > 0.5))):
        out.append(Violation("split-range", f"user {i}, server {j}",
                             float(max(-alloc.split[i, j],
                                       alloc.split[i, j] - 1.0))))

    def server_cap(mat, caps, name):
        used = (x * mat).sum(axis=0)
        rel = (used - caps) / caps
        for j in np.nonzero(rel > tol)[0]:
            out.append(Violation(name, f"server {j}", float(rel[j])))

    server_cap(alloc.bandwidth, scenario.server_bandwidth, "bandwidth-cap")
    server_cap(alloc.server_power, scenario.server_max_power,
               "server-power-cap")
    server_cap(alloc.server_freq, scenario.server_max_freq, "server-freq-cap")

    rel_pu = (alloc.user_power - scenario.user_max_power) / scenario.user_max_power
    for i in np.nonzero(rel_pu > tol)[0]:
        out.append(Violation("user-power-cap", f"user {i}", float(rel_pu[i])))
    rel_fu = (alloc.user_freq - scenario.user_max_freq) / scenario.user_max_freq
    for i in np.nonzero(rel_fu > tol)[0]:
        out.append(Violation("user-freq-cap", f"user {i}", float(rel_fu[i])))
    for i in np.nonzero(alloc.user_power < -tol)[0]:
        out.append(Violation("user-power-sign", f"user {i}",
                             float(-alloc.user_power[i])))
    for i in np.nonzero(alloc.user_freq <= 0)[0]:
        out.append(Violation("user-freq-sign", f"user {i}",
                             float(-alloc.user_freq[i])))
    for name, mat in (("bandwidth-sign", alloc.bandwidth),
                      ("server-power-sign", alloc.server_power),
                      ("server-freq-sign", alloc.server_freq)):
        for i, j in zip(*np.nonzero(mat < -tol)):
            out.append(Violation(name, f"user {i}, server {j}",
                                 float(-mat[i, j])))

    if math.isfinite(alloc.delay_bound):
        server_delay, user_delay = delay_matrices(scenario, alloc)
        connected = x > 0.5
        scale = max(alloc.delay_bound, 1.0)
        for nm, mat in (("delay-bound-offload", server_delay),
                        ("delay-bound-device", user_delay)):
            gap = (mat - alloc.delay_bound) / scale
            for i, j in zip(*np.nonzero(connected & (gap > tol))):
                out.append(Violation(nm, f"user {i}, server {j}",
                                     float(gap[i, j])))
    return out


__all__ = [
    "SystemParams", "UserNode", "ServerNode", "ChannelGains", "Scenario",
    "ScenarioConfig", "ResourcePlan", "Allocation", "Metrics", "Violation",
    "generate_scenario", "path_gain", "channel_gain", "uplink_rate",
    "plan_rates", "trust_matrix", "delay_matrices", "verification_delay",
    "energy_totals", "total_trust", "compute_metrics", "tcr",
    "initial_plan", "equal_split_plan", "rescale_plan",
    "assemble_allocation", "pattern_assoc", "check_feasibility",
]
