"""Sequential quadratic programming for small, smooth nonlinear programs.

Solves::

    min f(z)  s.t.  c_eq(z) = 0,  c_in(z) >= 0,  lower <= z <= upper

Each iteration solves a QP built from the exact Lagrangian Hessian and the
constraint linearisations. Where the Hessian is indefinite it is convexified with
multiples of ``J_S^T J_S`` over the active rows ``S``, which leaves the QP step of
the exact Hessian unchanged; only negative curvature inside the active null space
is clipped. The QP goes to a single OSQP instance per solve whose sparsity is fixed
at the first iteration, later QPs only update values and warm-start from the last
duals. Steps are globalised on the L1 merit function by a second-order correction
followed by Armijo backtracking.
"""
from dataclasses import dataclass, field
from typing import Callable, Optional

import osqp
import numpy as np
from scipy import sparse

from trollector.exceptions import MaxIterations, SolverInfeasible
from trollector.utils import get_logger


logger = get_logger("Sqp Solver")

# OSQP treats bounds beyond this magnitude as infinite
_QP_INFINITY = 1e30

# Penalty weights tried on J_S^T J_S before falling back to eigenvalue clipping
_GRAM_WEIGHTS = (0.0, 1.0, 10.0, 100.0, 1e3, 1e4)


@dataclass(frozen=True)
class ConstraintBlock:
    """A group of constraints with its Jacobian and Hessian contraction.

    ``hess(z, y)`` returns ``sum_i y_i * d2 c_i / dz2``. ``pattern`` is an optional
    ``(rows, cols)`` pair covering every entry the Jacobian can ever fill; without
    it the Jacobian is treated as dense.
    """
    fun: Callable
    jac: Callable
    hess: Callable
    pattern: Optional[tuple] = None


@dataclass(frozen=True)
class NlpProblem:
    objective: Callable
    gradient: Callable
    hessian: Callable
    lower: np.ndarray
    upper: np.ndarray
    equality: Optional[ConstraintBlock] = None
    inequality: Optional[ConstraintBlock] = None

    @property
    def size(self):
        return len(self.lower)


@dataclass(frozen=True)
class SqpOptions:
    """Iteration budget and tolerances of :func:`solve_nlp`.

    ``hessian_shift`` is the smallest eigenvalue kept in the QP Hessian, relative
    to its largest entry. ``min_step`` is the shortest backtracking step tried
    before the line search gives up.
    """
    max_iter: int = 100
    kkt_tol: float = 1e-6
    feas_tol: float = 1e-6
    armijo: float = 1e-4
    min_step: float = 1e-6
    hessian_shift: float = 1e-9
    active_tol: float = 1e-9
    qp_eps: float = 1e-8
    qp_max_iter: int = 4000


@dataclass
class NlpResult:
    z: np.ndarray
    status: str
    iterations: int
    objective: float
    kkt: float
    violation: float
    best_feasible: Optional[np.ndarray] = None
    best_objective: float = float("nan")
    multipliers: dict = field(default_factory=dict)
    trace: list = field(default_factory=list)

    @property
    def succeeded(self):
        return self.status == "optimal"

    def raise_for_status(self):
        if self.status == "max_iter":
            raise MaxIterations(f"SQP stopped after {self.iterations} iterations (KKT residual {self.kkt:.2e}).")
        if self.status == "infeasible":
            raise SolverInfeasible("A QP subproblem was infeasible.")


def _dense(mat):
    if sparse.issparse(mat):
        return mat.toarray()
    return np.asarray(mat, dtype=float)


def _values(block, z):
    if block is None:
        return np.zeros(0)
    return np.asarray(block.fun(z), dtype=float)


class _Point:
    """Function values of the problem at one iterate; derivatives on demand."""
    def __init__(self, problem, z):
        self.z = z
        self.f = float(problem.objective(z))
        self.c_eq = _values(problem.equality, z)
        self.c_in = _values(problem.inequality, z)
        self.g = None
        self.j_eq = None
        self.j_in = None

    def linearize(self, problem):
        if self.g is None:
            n = len(self.z)
            self.g = np.asarray(problem.gradient(self.z), dtype=float)
            self.j_eq = _dense(problem.equality.jac(self.z)) if len(self.c_eq) else np.zeros((0, n))
            self.j_in = _dense(problem.inequality.jac(self.z)) if len(self.c_in) else np.zeros((0, n))
        return self

    def violation(self, problem):
        parts = [0.0]
        if len(self.c_eq):
            parts.append(np.max(np.abs(self.c_eq)))
        if len(self.c_in):
            parts.append(np.max(-self.c_in))
        parts.append(np.max(problem.lower - self.z))
        parts.append(np.max(self.z - problem.upper))
        return float(max(parts))

    def infeasibility_l1(self):
        return float(np.sum(np.abs(self.c_eq)) + np.sum(np.clip(-self.c_in, 0, None)))

    def merit(self, rho):
        return self.f + rho * self.infeasibility_l1()


def _block_pattern(block, n_rows, n, offset):
    if block is None or n_rows == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    if block.pattern is None:
        return offset + np.repeat(np.arange(n_rows), n), np.tile(np.arange(n), n_rows)
    rows, cols = block.pattern
    return offset + np.asarray(rows, dtype=np.int64).ravel(), np.asarray(cols, dtype=np.int64).ravel()


class _QpWorkspace:
    """One OSQP instance reused by every QP of a solve.

    ``P`` keeps its dense upper triangle and ``A = [J_eq; J_in; I]`` the union of
    the constraint patterns, both in CSC order, so that later QPs only pass new
    values to ``update``.
    """
    def __init__(self, problem, m_eq, m_in, options):
        n = problem.size
        self.n = n
        self.lower = problem.lower
        self.upper = problem.upper
        self.options = options
        self.solver = None
        self.duals = None

        p_cols, p_rows = np.tril_indices(n)
        self.p_index = (p_rows, p_cols)
        self.p_indptr = np.concatenate([[0], np.cumsum(np.arange(1, n + 1))])

        self.m = m_eq + m_in + n
        blocks = [
            _block_pattern(problem.equality, m_eq, n, 0),
            _block_pattern(problem.inequality, m_in, n, m_eq),
            (m_eq + m_in + np.arange(n), np.arange(n)),
        ]
        rows = np.concatenate([block[0] for block in blocks])
        cols = np.concatenate([block[1] for block in blocks])
        keys = np.unique(cols * self.m + rows)
        self.a_index = (keys % self.m, keys // self.m)
        self.a_indptr = np.concatenate([[0], np.cumsum(np.bincount(keys // self.m, minlength=n))])

    def _bounds(self, z, c_eq, c_in):
        lower = np.concatenate([-c_eq, -c_in, self.lower - z])
        upper = np.concatenate([-c_eq, np.full(len(c_in), np.inf), self.upper - z])
        return np.clip(lower, -_QP_INFINITY, _QP_INFINITY), np.clip(upper, -_QP_INFINITY, _QP_INFINITY)

    def _setup(self, p_data, q, a_data, lower, upper):
        mat_p = sparse.csc_matrix((p_data, self.p_index[0], self.p_indptr), shape=(self.n, self.n))
        mat_a = sparse.csc_matrix((a_data, self.a_index[0], self.a_indptr), shape=(self.m, self.n))
        self.solver = osqp.OSQP()
        self.solver.setup(
            mat_p, q, mat_a, lower, upper,
            verbose=False, eps_abs=self.options.qp_eps, eps_rel=self.options.qp_eps, polish=True,
            max_iter=self.options.qp_max_iter, warm_start=True,
        )

    def _run(self):
        res = self.solver.solve()
        status = str(res.info.status).lower()
        if "infeasible" in status or "non convex" in status or res.x is None or not np.all(np.isfinite(res.x)):
            logger.debug("QP subproblem failed: %s", status)
            return None
        return np.asarray(res.x, dtype=float), np.asarray(res.y, dtype=float)

    def solve(self, hess, point):
        """Step and duals of the QP at ``point`` with Hessian ``hess``, None when it has no solution."""
        p_data = hess[self.p_index]
        a_data = np.vstack([point.j_eq, point.j_in, np.eye(self.n)])[self.a_index]
        lower, upper = self._bounds(point.z, point.c_eq, point.c_in)

        if self.solver is not None:
            try:
                self.solver.update(q=point.g, l=lower, u=upper, Px=p_data, Ax=a_data)
            except ValueError as err:
                logger.debug("QP update rejected (%s); setting up a new workspace", err)
                self.solver = None
            else:
                if self.duals is not None:
                    self.solver.warm_start(x=np.zeros(self.n), y=self.duals)
        if self.solver is None:
            self._setup(p_data, point.g, a_data, lower, upper)

        result = self._run()
        if result is not None:
            self.duals = result[1]
        return result

    def correct(self, point, step, trial):
        """Second-order correction: the last QP with the constraints re-linearised at ``z + step``."""
        lower, upper = self._bounds(point.z, trial.c_eq - point.j_eq @ step, trial.c_in - point.j_in @ step)
        self.solver.update(l=lower, u=upper)
        result = self._run()
        return None if result is None else result[0]


def _lagrangian_hessian(problem, z, y_eq, y_in):
    hess = np.array(problem.hessian(z), dtype=float)
    if problem.equality is not None and len(y_eq):
        hess += _dense(problem.equality.hess(z, y_eq))
    if problem.inequality is not None and len(y_in):
        hess += _dense(problem.inequality.hess(z, y_in))
    return 0.5 * (hess + hess.T)


def _convexify(hess, active_jac, shift):
    """Positive definite QP Hessian, returned with the weight put on ``active_jac``.

    ``hess + c J_S^T J_S`` adds ``c |J_S p|^2`` to the QP objective, which is
    constant while the rows ``S`` stay active, so the step is that of ``hess``.
    The smallest listed ``c`` that passes a Cholesky test is used. When none does,
    the remaining negative eigenvalues are clipped to the floor.
    """
    floor = shift * (1.0 + np.max(np.abs(hess), initial=0.0))
    eye = np.eye(len(hess))
    gram = active_jac.T @ active_jac
    weights = _GRAM_WEIGHTS if len(active_jac) else _GRAM_WEIGHTS[:1]
    for weight in weights:
        candidate = hess + weight * gram + floor * eye
        try:
            np.linalg.cholesky(candidate)
        except np.linalg.LinAlgError:
            continue
        return candidate, weight

    weight = weights[-1]
    eigval, eigvec = np.linalg.eigh(hess + weight * gram)
    logger.debug("Clipping %d negative eigenvalue(s) of the QP Hessian", int(np.sum(eigval < floor)))
    return (eigvec * np.maximum(eigval, floor)) @ eigvec.T, weight


def _kkt_residual(point, problem, y_eq, y_in, y_bound):
    """Scaled stationarity, feasibility, complementarity and dual sign error, combined by max."""
    grad_l = point.g + point.j_eq.T @ y_eq + point.j_in.T @ y_in + y_bound
    stationarity = np.max(np.abs(grad_l)) / (1.0 + np.max(np.abs(point.g), initial=0.0))

    comp = [0.0]
    if len(y_in):
        comp.append(np.max(np.abs(y_in) * np.abs(point.c_in)))
        comp.append(np.max(y_in))
    low_active = y_bound < 0
    up_active = y_bound > 0
    if np.any(low_active):
        comp.append(np.max(-y_bound[low_active] * (point.z[low_active] - problem.lower[low_active])))
    if np.any(up_active):
        comp.append(np.max(y_bound[up_active] * (problem.upper[up_active] - point.z[up_active])))
    return float(max(stationarity, point.violation(problem), max(comp)))


def _line_search(problem, workspace, point, step, rho, options):
    """Merit-decreasing iterate along ``step``: full step, corrected step, then backtracking.

    Returns ``(point, alpha, corrected)`` or None when even ``min_step`` fails.
    """
    if np.max(np.abs(step), initial=0.0) <= 1e-14 * (1.0 + np.max(np.abs(point.z), initial=0.0)):
        return None

    def clip(z):
        return np.clip(z, problem.lower, problem.upper)

    merit0 = point.merit(rho)
    slope = min(float(point.g @ step) - rho * point.infeasibility_l1(), 0.0)
    rounding = 1e-14 * (1.0 + abs(merit0))

    def accepts(candidate, alpha):
        return candidate.merit(rho) <= merit0 + options.armijo * alpha * slope + rounding

    full = _Point(problem, clip(point.z + step))
    if accepts(full, 1.0):
        return full, 1.0, False

    correction = workspace.correct(point, step, full)
    if correction is not None:
        corrected = _Point(problem, clip(point.z + correction))
        if accepts(corrected, 1.0):
            return corrected, 1.0, True

    alpha = 0.5
    while alpha >= options.min_step:
        candidate = _Point(problem, clip(point.z + alpha * step))
        if accepts(candidate, alpha):
            return candidate, alpha, False
        alpha *= 0.5
    return None


def solve_nlp(problem, z0, options=SqpOptions()):
    """Run SQP from ``z0``.

    Parameters
    ----------
    problem: NlpProblem
    z0: array
        Initial guess; clipped into the variable bounds.
    options: SqpOptions

    Returns
    -------
    NlpResult
        ``status`` is 'optimal' when the KKT residual at an iterate, measured with
        the multipliers of the QP solved there, fell below ``kkt_tol``. It is
        'max_iter' when the iteration budget ran out or the line search could not
        decrease the merit function (with zero iterations the initial guess is
        returned), and 'infeasible' when a QP subproblem had no solution.
        ``best_feasible`` is the last iterate satisfying all constraints within
        ``feas_tol`` and ``best_objective`` its cost.
    """
    z = np.clip(np.asarray(z0, dtype=float), problem.lower, problem.upper)
    point = _Point(problem, z).linearize(problem)
    n, m_eq, m_in = len(z), len(point.c_eq), len(point.c_in)
    y_eq, y_in, y_bound = np.zeros(m_eq), np.zeros(m_in), np.zeros(n)
    active_in = np.zeros(m_in, dtype=bool)
    active_bound = np.zeros(n, dtype=bool)
    workspace = _QpWorkspace(problem, m_eq, m_in, options)
    rho = 1.0
    kkt = np.inf
    status = "max_iter"
    trace = []
    best_feasible, best_objective = None, float("nan")
    if point.violation(problem) <= options.feas_tol:
        best_feasible, best_objective = point.z.copy(), point.f

    for iteration in range(1, options.max_iter + 1):
        hess = _lagrangian_hessian(problem, point.z, y_eq, y_in)
        active_jac = np.vstack([point.j_eq, point.j_in[active_in], np.eye(n)[active_bound]])
        qp_hess, weight = _convexify(hess, active_jac, options.hessian_shift)
        qp = workspace.solve(qp_hess, point)
        if qp is None:
            logger.info("QP subproblem failed at iteration %d", iteration)
            status = "infeasible"
            break

        step, duals = qp
        raw_eq, raw_in, raw_bound = duals[:m_eq], duals[m_eq:m_eq + m_in], duals[m_eq + m_in:]
        # multipliers of the QP with the unmodified Hessian
        qp_eq = raw_eq + weight * (point.j_eq @ step)
        qp_in = raw_in.copy()
        qp_in[active_in] += weight * (point.j_in[active_in] @ step)
        qp_bound = raw_bound.copy()
        qp_bound[active_bound] += weight * step[active_bound]

        kkt = _kkt_residual(point, problem, qp_eq, qp_in, qp_bound)
        violation = point.violation(problem)
        entry = {"iteration": iteration, "objective": point.f, "violation": violation, "kkt": kkt}
        logger.debug("SQP %d: f=%.6e viol=%.2e kkt=%.2e", iteration, point.f, violation, kkt)
        if kkt < options.kkt_tol:
            y_eq, y_in, y_bound = qp_eq, qp_in, qp_bound
            trace.append({**entry, "step": 0.0, "alpha": 0.0, "rho": rho, "corrected": False})
            status = "optimal"
            break

        rho = max(rho, 1.1 * np.max(np.abs(np.concatenate([raw_eq, raw_in])), initial=0.0) + 1e-3)
        accepted = _line_search(problem, workspace, point, step, rho, options)
        if accepted is None:
            trace.append({**entry, "step": 0.0, "alpha": 0.0, "rho": rho, "corrected": False})
            logger.info("Line search failed at iteration %d (KKT residual %.2e)", iteration, kkt)
            break

        candidate, alpha, corrected = accepted
        y_eq = y_eq + alpha * (qp_eq - y_eq)
        y_in = y_in + alpha * (qp_in - y_in)
        y_bound = y_bound + alpha * (qp_bound - y_bound)
        active_in = raw_in < -options.active_tol
        active_bound = np.abs(raw_bound) > options.active_tol
        trace.append({
            **entry,
            "step": float(np.max(np.abs(candidate.z - point.z), initial=0.0)),
            "alpha": alpha,
            "rho": rho,
            "corrected": corrected,
        })

        point = candidate.linearize(problem)
        if point.violation(problem) <= options.feas_tol:
            best_feasible, best_objective = point.z.copy(), point.f

    if status != "optimal":
        logger.debug("SQP finished with status %s after %d iteration(s)", status, len(trace))

    return NlpResult(
        z=point.z,
        status=status,
        iterations=len(trace),
        objective=point.f,
        kkt=kkt,
        violation=point.violation(problem),
        best_feasible=best_feasible,
        best_objective=best_objective,
        multipliers={"equality": y_eq, "inequality": y_in, "bounds": y_bound},
        trace=trace,
    )
