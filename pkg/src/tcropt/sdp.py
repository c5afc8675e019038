"""Dense semidefinite solver built on operator splitting.

Minimizes tr(C X) (+ an optional scalar term) over PSD X subject to
linear trace equalities and inequalities. Each iteration alternates a
cached least-squares projection onto the affine constraints with a
projection onto the cone, plus an over-relaxed dual update. Suited to
the small dense problems produced by the relaxation step; no sparsity
is exploited.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.linalg import cho_factor, cho_solve

_RELAX = 1.6
_RHO_LIMITS = (1e-4, 1e4)
_PLATEAU_WINDOW = 2000
_PLATEAU_FLOOR = 1e-2


@dataclass
class SDPProblem:
    """min tr(C X) + aux_objective * t  over X >= 0 (PSD) and free scalar t

    subject to  tr(eq_mats[i] X) + eq_aux[i] * t == eq_rhs[i]
    and         tr(ineq_mats[j] X) + ineq_aux[j] * t <= ineq_rhs[j].

    The scalar t only exists when `with_aux` is set.
    """

    dim: int
    objective: np.ndarray
    eq_mats: list[np.ndarray] = field(default_factory=list)
    eq_rhs: list[float] = field(default_factory=list)
    ineq_mats: list[np.ndarray] = field(default_factory=list)
    ineq_rhs: list[float] = field(default_factory=list)
    eq_aux: list[float] | None = None
    ineq_aux: list[float] | None = None
    aux_objective: float = 0.0
    with_aux: bool = False


@dataclass
class SDPSolution:
    X: np.ndarray
    aux_T: float
    objective: float
    status: str                       # optimal | max-iters | infeasible
    primal_residual: float
    psd_violation: float
    iterations: int
    residual_trace: list[float] = field(default_factory=list)


def validate_problem(problem: SDPProblem) -> list[str]:
    errs = []
    k = problem.dim
    mats = [("objective", problem.objective)]
    mats += [(f"eq[{i}]", m) for i, m in enumerate(problem.eq_mats)]
    mats += [(f"ineq[{j}]", m) for j, m in enumerate(problem.ineq_mats)]
    for name, m in mats:
        if m.shape != (k, k):
            errs.append(f"{name} has shape {m.shape}, expected ({k}, {k})")
            continue
        if not np.all(np.isfinite(m)):
            errs.append(f"{name} has non-finite entries")
            continue
        if np.max(np.abs(m - m.T)) > 1e-12 * max(1.0, np.max(np.abs(m))):
            errs.append(f"{name} is not symmetric")
    if len(problem.eq_mats) != len(problem.eq_rhs):
        errs.append("eq_mats and eq_rhs length mismatch")
    if len(problem.ineq_mats) != len(problem.ineq_rhs):
        errs.append("ineq_mats and ineq_rhs length mismatch")
    if problem.with_aux:
        if problem.eq_aux is not None and len(problem.eq_aux) != len(problem.eq_mats):
            errs.append("eq_aux length mismatch")
        if problem.ineq_aux is not None and len(problem.ineq_aux) != len(problem.ineq_mats):
            errs.append("ineq_aux length mismatch")
    return errs


# ---------------------------------------------------------------------------
# symmetric vectorization

def _svec_layout(k: int):
    rows, cols = np.tril_indices(k)
    scale = np.where(rows == cols, 1.0, math.sqrt(2.0))
    return rows, cols, scale


def svec(mat: np.ndarray, layout) -> np.ndarray:
    rows, cols, scale = layout
    return mat[rows, cols] * scale


def unsvec(vec: np.ndarray, k: int, layout) -> np.ndarray:
    rows, cols, scale = layout
    out = np.zeros((k, k))
    vals = vec / scale
    out[rows, cols] = vals
    out[cols, rows] = vals
    return out


# ---------------------------------------------------------------------------
# solver

class _Workspace:
    """Precomputed constraint stack for one problem instance."""

    def __init__(self, problem: SDPProblem):
        k = problem.dim
        self.k = k
        self.layout = _svec_layout(k)
        self.n_sv = len(self.layout[0])
        self.n_eq = len(problem.eq_mats)
        self.n_ineq = len(problem.ineq_mats)
        self.with_aux = problem.with_aux
        self.nz = self.n_sv + self.n_ineq + (1 if self.with_aux else 0)
        self.t_idx = self.n_sv + self.n_ineq if self.with_aux else -1

        rows = self.n_eq + self.n_ineq
        A = np.zeros((rows, self.nz))
        rhs = np.zeros(rows)
        eq_aux = problem.eq_aux or [0.0] * self.n_eq
        ineq_aux = problem.ineq_aux or [0.0] * self.n_ineq
        for i, m in enumerate(problem.eq_mats):
            A[i, :self.n_sv] = svec(m, self.layout)
            if self.with_aux:
                A[i, self.t_idx] = eq_aux[i]
            rhs[i] = problem.eq_rhs[i]
        for j, m in enumerate(problem.ineq_mats):
            r = self.n_eq + j
            A[r, :self.n_sv] = svec(m, self.layout)
            if self.with_aux:
                A[r, self.t_idx] = ineq_aux[j]
            rhs[r] = problem.ineq_rhs[j]

        # Measure the free scalar in the units its own rows suggest. With
        # the raw column, a scalar whose natural range dwarfs the unit-box
        # entries of the matrix block crawls toward its active face at the
        # objective-drift speed and stalls the whole solve.
        self.t_scale = 1.0
        if self.with_aux:
            col = A[:, self.t_idx]
            live = np.abs(col) > 1e-12
            if live.any():
                self.t_scale = max(1.0, float(np.max(np.abs(rhs[live])
                                                     / np.abs(col[live]))))
            A[:, self.t_idx] *= self.t_scale

        # Normalize rows before wiring up slack columns so every slack
        # lives in the normalized row's O(1) units; mixed physical scales
        # (hertz next to unit boxes) otherwise stall the splitting.
        norms = np.linalg.norm(A, axis=1)
        norms = np.where(norms > 1e-12, norms, 1.0)
        A = A / norms[:, None]
        rhs = rhs / norms
        for j in range(self.n_ineq):
            A[self.n_eq + j, self.n_sv + j] = 1.0
        # Constraint rows touch a handful of entries each; sparse storage
        # keeps the per-iteration projections out of memory-bound territory.
        self.A = sp.csr_matrix(A)
        self.AT = sp.csr_matrix(A.T)
        self.rhs = rhs

        if rows:
            gram = A @ A.T
            jitter = 0.0
            while True:
                try:
                    self.chol = cho_factor(gram + jitter * np.eye(rows),
                                           lower=True)
                    break
                except np.linalg.LinAlgError:
                    jitter = max(jitter * 10.0, 1e-12)
                    if jitter > 1e-6:
                        raise
        else:
            self.chol = None

        self.problem = problem
        self.set_cost(problem.objective,
                      problem.aux_objective if self.with_aux else 0.0)

    def set_cost(self, objective: np.ndarray,
                 aux_objective: float = 0.0) -> None:
        """Swap the objective; the constraint geometry is untouched."""
        c = np.zeros(self.nz)
        c[:self.n_sv] = svec(objective, self.layout)
        if self.with_aux:
            c[self.t_idx] = aux_objective * self.t_scale
        self.c_scale = max(1.0, float(np.linalg.norm(c)))
        self.c = c / self.c_scale
        self.objective_mat = objective
        self.aux_objective = aux_objective

    def project_affine(self, v: np.ndarray) -> np.ndarray:
        if self.chol is None:
            return v
        gap = self.A.dot(v) - self.rhs
        return v - self.AT.dot(cho_solve(self.chol, gap))

    def project_cone(self, v: np.ndarray) -> np.ndarray:
        out = v.copy()
        mat = unsvec(v[:self.n_sv], self.k, self.layout)
        vals, vecs = np.linalg.eigh(mat)
        vals = np.clip(vals, 0.0, None)
        out[:self.n_sv] = svec((vecs * vals) @ vecs.T, self.layout)
        sl = slice(self.n_sv, self.n_sv + self.n_ineq)
        out[sl] = np.clip(v[sl], 0.0, None)
        return out

    def true_residual(self, z: np.ndarray) -> float:
        """Worst constraint violation, measured relative to each row's scale.

        Rows are normalized at construction, so one unit here means a
        violation as large as the row itself; the measure is invariant to
        the physical units a constraint was stated in.
        """
        gap = self.A.dot(z) - self.rhs
        worst = 0.0
        if self.n_eq:
            worst = float(np.max(np.abs(gap[:self.n_eq])))
        if self.n_ineq:
            # Slack variables absorb inequality rows; a positive row gap
            # with the slack already at zero is a real violation either
            # way, so the signed equality gap is the honest bound.
            worst = max(worst, float(np.max(np.abs(gap[self.n_eq:]))))
        return worst

    def point(self, z: np.ndarray):
        X = unsvec(z[:self.n_sv], self.k, self.layout)
        t = float(z[self.t_idx]) * self.t_scale if self.with_aux \
            else math.nan
        return X, t

    def objective_value(self, X: np.ndarray, t: float) -> float:
        val = float(np.tensordot(self.objective_mat, X))
        if self.with_aux:
            val += self.aux_objective * t
        return val


def _seed_from_matrix(ws: _Workspace, x0: np.ndarray) -> np.ndarray:
    if x0.shape != (ws.k, ws.k):
        raise ValueError("x0 shape mismatch")
    z = np.zeros(ws.nz)
    z[:ws.n_sv] = svec(0.5 * (x0 + x0.T), ws.layout)
    z = ws.project_cone(z)
    # Seed slacks consistently with the warm-started matrix part.
    row_gap = ws.rhs - ws.A.dot(z)
    sl = slice(ws.n_sv, ws.n_sv + ws.n_ineq)
    z[sl] = np.clip(row_gap[ws.n_eq:], 0.0, None)
    return z


def _run_splitting(ws: _Workspace, tol: float, max_iter: int,
                   check_every: int, state=None):
    """Core splitting loop; returns the solution and the end state."""
    nz = ws.nz
    scale_steps = math.sqrt(nz)

    if state is None:
        z = np.zeros(nz)
        u = np.zeros(nz)
        rho = 1.0
    else:
        z, u, rho = state
        z = z.copy()
        u = u.copy()

    best_res = math.inf
    best_z = z.copy()
    plateau_anchor = math.inf
    status = "max-iters"
    it = 0
    r_cons = math.inf
    r_dual = math.inf
    residual_trace: list[float] = []

    while it < max_iter:
        it += 1
        z_aff = ws.project_affine(z - u - ws.c / rho)
        z_rel = _RELAX * z_aff + (1.0 - _RELAX) * z
        z_new = ws.project_cone(z_rel + u)
        u = u + z_rel - z_new
        r_dual = rho * float(np.linalg.norm(z_new - z)) / scale_steps
        r_cons = float(np.linalg.norm(z_aff - z_new)) / scale_steps
        z = z_new

        if it % check_every == 0 or it == max_iter:
            res = ws.true_residual(z)
            if res < best_res:
                best_res = res
                best_z = z.copy()
            residual_trace.append(best_res)
            live = tol * (1.0 + float(np.linalg.norm(z)) / scale_steps)
            if res <= tol and r_cons <= live and r_dual <= live:
                status = "optimal"
                break

        if it % 100 == 0:
            if r_cons > 10.0 * r_dual and rho < _RHO_LIMITS[1]:
                rho *= 2.0
                u /= 2.0
            elif r_dual > 10.0 * r_cons and rho > _RHO_LIMITS[0]:
                rho /= 2.0
                u *= 2.0

        if it % _PLATEAU_WINDOW == 0:
            if (best_res > _PLATEAU_FLOOR
                    and best_res > 0.99 * plateau_anchor):
                status = "infeasible"
                break
            plateau_anchor = best_res

    if status == "optimal":
        final_z = z
        final_res = ws.true_residual(z)
    else:
        final_z = best_z if best_res < math.inf else z
        final_res = best_res if best_res < math.inf else ws.true_residual(z)

    X, t = ws.point(final_z)
    eigs = np.linalg.eigvalsh(X)
    psd_violation = float(max(0.0, -eigs.min())) if eigs.size else 0.0
    solution = SDPSolution(X=X, aux_T=t, objective=ws.objective_value(X, t),
                           status=status, primal_residual=final_res,
                           psd_violation=psd_violation, iterations=it,
                           residual_trace=residual_trace)
    return solution, (z, u, rho)


def solve_sdp(problem: SDPProblem, tol: float = 1e-6,
              max_iter: int = 50000, x0: np.ndarray | None = None,
              check_every: int = 25) -> SDPSolution:
    """Solve one dense SDP; see module docstring for the formulation."""
    errs = validate_problem(problem)
    if errs:
        raise ValueError("bad SDP problem: " + "; ".join(errs))
    ws = _Workspace(problem)
    state = None
    if x0 is not None:
        state = (_seed_from_matrix(ws, x0), np.zeros(ws.nz), 1.0)
    solution, _ = _run_splitting(ws, tol, max_iter, check_every, state)
    return solution


class SDPSession:
    """Re-solve one constraint stack under a drifting objective.

    The affine geometry (rows, normalization, factorization) is built
    once; each solve swaps in a new objective and warm-starts from the
    previous pass's primal/dual pair. Alternating schemes that only
    reprice the objective between passes converge in a fraction of the
    cold-start iteration count this way.
    """

    def __init__(self, problem: SDPProblem):
        errs = validate_problem(problem)
        if errs:
            raise ValueError("bad SDP problem: " + "; ".join(errs))
        self._ws = _Workspace(problem)
        self._state = None

    def solve(self, objective: np.ndarray | None = None,
              aux_objective: float | None = None, tol: float = 1e-6,
              max_iter: int = 50000, check_every: int = 25) -> SDPSolution:
        if objective is not None:
            aux = self._ws.aux_objective if aux_objective is None \
                else aux_objective
            self._ws.set_cost(objective, aux)
        elif aux_objective is not None:
            self._ws.set_cost(self._ws.objective_mat, aux_objective)
        solution, self._state = _run_splitting(self._ws, tol, max_iter,
                                               check_every, self._state)
        return solution


# ---------------------------------------------------------------------------
# debug dump

def dump_problem(problem: SDPProblem, path: str) -> None:
    """Write a problem as plain text for external cross-checking."""
    def put_mat(fh, mat):
        for row in mat:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")

    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"dim {problem.dim}\n")
        fh.write(f"aux {int(problem.with_aux)} {problem.aux_objective!r}\n")
        fh.write("objective\n")
        put_mat(fh, problem.objective)
        eq_aux = problem.eq_aux or [0.0] * len(problem.eq_mats)
        fh.write(f"eq {len(problem.eq_mats)}\n")
        for m, b, a in zip(problem.eq_mats, problem.eq_rhs, eq_aux):
            fh.write(f"row {b!r} {a!r}\n")
            put_mat(fh, m)
        ineq_aux = problem.ineq_aux or [0.0] * len(problem.ineq_mats)
        fh.write(f"ineq {len(problem.ineq_mats)}\n")
        for m, b, a in zip(problem.ineq_mats, problem.ineq_rhs, ineq_aux):
            fh.write(f"row {b!r} {a!r}\n")
            put_mat(fh, m)


def load_problem(path: str) -> SDPProblem:
    with open(path, "r", encoding="utf-8") as fh:
        tokens = fh.read().split("\n")
    pos = 0

    def take():
        nonlocal pos
        line = tokens[pos]
        pos += 1
        return line

    dim = int(take().split()[1])
    aux_parts = take().split()
    with_aux = bool(int(aux_parts[1]))
    aux_objective = float(aux_parts[2])

    def read_mat():
        rows = [np.array([float(v) for v in take().split()])
                for _ in range(dim)]
        return np.vstack(rows)

    assert take() == "objective"
    objective = read_mat()

    def read_block():
        count = int(take().split()[1])
        mats, rhs, aux = [], [], []
        for _ in range(count):
            parts = take().split()
            rhs.append(float(parts[1]))
            aux.append(float(parts[2]))
            mats.append(read_mat())
        return mats, rhs, aux

    eq_mats, eq_rhs, eq_aux = read_block()
    ineq_mats, ineq_rhs, ineq_aux = read_block()
    return SDPProblem(dim=dim, objective=objective, eq_mats=eq_mats,
                      eq_rhs=eq_rhs, ineq_mats=ineq_mats, ineq_rhs=ineq_rhs,
                      eq_aux=eq_aux, ineq_aux=ineq_aux,
                      aux_objective=aux_objective, with_aux=with_aux)


__all__ = ["SDPProblem", "SDPSolution", "SDPSession", "validate_problem",
           "solve_sdp", "svec", "unsvec", "dump_problem", "load_problem"]
