"""Approach and docking NMPC with discrete-time barrier constraints.

The horizon is transcribed by direct multiple shooting: every state ``x_0..x_N``
and control ``u_0..u_{N-1}`` is a decision variable, tied together by the
Euler dynamics as equality constraints. Docking adds one slack per step to the
view barrier constraint. The resulting NLP is solved by :func:`solve_nlp`.

Decision vector layout::

    z = [x_0 .. x_N | u_0 .. u_{N-1} | delta_0 .. delta_{N-1} (docking only)]

Theta is not wrapped inside the NLP; the terminal cost uses the wrapped heading
error so it stays continuous across +-pi.
"""
# pylint: disable=C0103
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from trollector.geometry import Pose2, wrap_angle
from trollector.exceptions import InfeasibleStart, MaxIterations, SolverInfeasible
from trollector.constants.frames import STATE_DIM, CONTROL_DIM
from trollector.planner.model import dd_step_array, dd_step_jacobian, dd_step_hessian_contraction, rollout
from trollector.planner.barriers import h_obstacle
from trollector.planner.nlp import NlpProblem, ConstraintBlock, SqpOptions, solve_nlp
from trollector.utils import get_logger


logger = get_logger("Cbf Planner")


@dataclass(frozen=True, eq=False)
class NmpcProblem:
    horizon: int
    x_init: Pose2
    x_goal: Pose2
    terminal_weight: np.ndarray = field(default_factory=lambda: np.diag([10.0, 10.0, 2.0]))
    control_weight: np.ndarray = field(default_factory=lambda: np.diag([1.0, 0.5]))
    barriers: tuple = ()
    slack_weight: Optional[float] = None

    def __post_init__(self):
        p_f = np.array(self.terminal_weight, dtype=float).reshape(3, 3)
        q_u = np.array(self.control_weight, dtype=float).reshape(2, 2)
        if self.horizon < 1:
            raise ValueError(f"Horizon must be at least 1, received {self.horizon}")
        if not np.allclose(p_f, p_f.T) or np.linalg.eigvalsh(p_f)[0] < -1e-12:
            raise ValueError("Terminal weight must be symmetric positive semi-definite.")
        if not np.allclose(q_u, q_u.T) or np.linalg.eigvalsh(q_u)[0] <= 0:
            raise ValueError("Control weight must be symmetric positive definite.")
        object.__setattr__(self, "terminal_weight", p_f)
        object.__setattr__(self, "control_weight", q_u)
        object.__setattr__(self, "barriers", tuple(self.barriers))
        if len(self.view_barriers) > 1:
            raise ValueError("At most one view barrier is supported.")
        if self.view_barriers and not (self.slack_weight is not None and self.slack_weight > 0):
            raise ValueError("A view barrier needs a positive slack weight.")

    @property
    def obstacle_barriers(self):
        return [bar for bar in self.barriers if not bar.is_view]

    @property
    def view_barriers(self):
        return [bar for bar in self.barriers if bar.is_view]


@dataclass(frozen=True, eq=False)
class NmpcSolution:
    states: tuple
    controls: np.ndarray
    slacks: np.ndarray
    status: str
    solve_time: float
    objective: float = float("nan")
    iterations: int = 0
    kkt: float = float("inf")
    trajectory: np.ndarray = None

    @property
    def first_control(self):
        return tuple(float(val) for val in self.controls[0])

    @property
    def slack_max(self):
        return float(np.max(np.abs(self.slacks), initial=0.0))

    def raise_for_status(self):
        if self.status == "max_iter":
            raise MaxIterations(f"NMPC stopped after {self.iterations} iterations.")
        if self.status == "infeasible":
            raise SolverInfeasible("NMPC subproblem was infeasible.")
        return self


class _Layout:
    def __init__(self, horizon, docking):
        self.N = horizon
        self.n_x = STATE_DIM * (horizon + 1)
        self.n_u = CONTROL_DIM * horizon
        self.n_d = horizon if docking else 0
        self.size = self.n_x + self.n_u + self.n_d

    def split(self, z):
        states = z[:self.n_x].reshape(self.N + 1, STATE_DIM)
        controls = z[self.n_x:self.n_x + self.n_u].reshape(self.N, CONTROL_DIM)
        slacks = z[self.n_x + self.n_u:]
        return states, controls, slacks


def _terminal_error(state, goal):
    err = np.asarray(state, dtype=float) - goal.as_array()
    err[2] = wrap_angle(err[2])
    return err


def terminal_cost_gradient(state, goal, weight):
    """Gradient of ``0.5 e^T P_f e`` over the raw terminal state, ``e`` with wrapped heading."""
    return np.asarray(weight, dtype=float) @ _terminal_error(state, goal)


def _objective_terms(prob, states, controls, slacks):
    err = _terminal_error(states[-1], prob.x_goal)
    value = 0.5 * err @ prob.terminal_weight @ err
    value += 0.5 * np.einsum("ki,ij,kj->", controls, prob.control_weight, controls)
    if len(slacks):
        value += prob.slack_weight * float(slacks @ slacks)
    return float(value)


def evaluate_objective(solution, problem):
    """Re-evaluate the cost of a returned solution from its states, controls and slacks."""
    states = np.array([pose.as_array() for pose in solution.states])
    slacks = solution.slacks if problem.view_barriers else np.zeros(0)
    return _objective_terms(problem, states, np.asarray(solution.controls), np.asarray(slacks))


def _pattern(*blocks):
    """Concatenated ``(rows, cols)`` of index blocks, each pair broadcast together."""
    pairs = [np.broadcast_arrays(rows, cols) for rows, cols in blocks]
    return (
        np.concatenate([rows.ravel() for rows, _ in pairs]),
        np.concatenate([cols.ravel() for _, cols in pairs]),
    )


def _build_nlp(prob, model, layout):
    dt = model.dt
    N = layout.N
    docking = layout.n_d > 0
    barriers = prob.obstacle_barriers + prob.view_barriers
    n_bars = len(barriers)
    times = dt * np.arange(N + 1)
    steps = np.arange(N)

    # decision-vector columns of x_k (N + 1, 3), u_k (N, 2) and delta_k (N,)
    x_cols = STATE_DIM * np.arange(N + 1)[:, None] + np.arange(STATE_DIM)
    u_cols = layout.n_x + CONTROL_DIM * steps[:, None] + np.arange(CONTROL_DIM)
    d_cols = layout.n_x + layout.n_u + steps
    # (theta_k, v_k) pairs carrying the curvature of the dynamics
    curved = np.stack([x_cols[:-1, 2], u_cols[:, 0]], axis=1)

    def objective(z):
        states, controls, slacks = layout.split(z)
        return _objective_terms(prob, states, controls, slacks)

    def gradient(z):
        states, controls, slacks = layout.split(z)
        grad = np.zeros(layout.size)
        grad[x_cols[N]] = terminal_cost_gradient(states[-1], prob.x_goal, prob.terminal_weight)
        grad[u_cols] = controls @ prob.control_weight
        if docking:
            grad[d_cols] = 2.0 * prob.slack_weight * slacks
        return grad

    objective_hessian = np.zeros((layout.size, layout.size))
    objective_hessian[x_cols[N][:, None], x_cols[N]] = prob.terminal_weight
    objective_hessian[u_cols[:, :, None], u_cols[:, None, :]] = prob.control_weight
    if docking:
        objective_hessian[d_cols, d_cols] = 2.0 * prob.slack_weight

    x_init = prob.x_init.as_array()
    n_eq = STATE_DIM * (N + 1)
    # row block of step k is the column block of x_{k+1}
    eq_rows = x_cols[1:]

    def eq_fun(z):
        states, controls, _ = layout.split(z)
        res = np.empty((N + 1, STATE_DIM))
        res[0] = states[0] - x_init
        res[1:] = states[1:] - dd_step_array(states[:-1], controls, dt)
        return res.reshape(-1)

    def eq_jac(z):
        states, controls, _ = layout.split(z)
        jac_x, jac_u = dd_step_jacobian(states[:-1], controls, dt)
        jac = np.zeros((n_eq, layout.size))
        jac[x_cols[0], x_cols[0]] = 1.0
        jac[eq_rows, eq_rows] = 1.0
        jac[eq_rows[:, :, None], x_cols[:-1, None, :]] = -jac_x
        jac[eq_rows[:, :, None], u_cols[:, None, :]] = -jac_u
        return jac

    def eq_hess(z, y):
        states, controls, _ = layout.split(z)
        weights = y[STATE_DIM:].reshape(N, STATE_DIM)
        hess = np.zeros((layout.size, layout.size))
        hess[curved[:, :, None], curved[:, None, :]] = -dd_step_hessian_contraction(states[:-1], controls, dt, weights)
        return hess

    eq_pattern = _pattern(
        (x_cols[0], x_cols[0]),
        (eq_rows, eq_rows),
        (eq_rows[:, :, None], x_cols[:-1, None, :]),
        (eq_rows[:, :, None], u_cols[:, None, :]),
    )

    # inequality row of (step k, barrier j) is k * n_bars + j: obstacles first, then the view
    def in_rows(j):
        return steps * n_bars + j

    def in_fun(z):
        states, _, slacks = layout.split(z)
        res = np.empty((N, n_bars))
        for j, bar in enumerate(barriers):
            h = bar.values(states, times)
            res[:, j] = h[1:] - (1.0 - bar.decay) * h[:-1]
            if bar.is_view:
                res[:, j] -= slacks
        return res.reshape(-1)

    def in_jac(z):
        states, _, _ = layout.split(z)
        jac = np.zeros((N * n_bars, layout.size))
        for j, bar in enumerate(barriers):
            grads = bar.gradients(states, times)
            rows = in_rows(j)[:, None]
            jac[rows, x_cols[1:]] = grads[1:]
            jac[rows, x_cols[:-1]] = -(1.0 - bar.decay) * grads[:-1]
            if bar.is_view:
                jac[in_rows(j), d_cols] = -1.0
        return jac

    def in_hess(z, y):
        states, _, _ = layout.split(z)
        y = y.reshape(N, n_bars)
        blocks = np.zeros((N + 1, STATE_DIM, STATE_DIM))
        for j, bar in enumerate(barriers):
            if not np.any(y[:, j]):
                continue
            hess_h = bar.hessians(states, times)
            blocks[1:] += y[:, j, None, None] * hess_h[1:]
            blocks[:-1] -= (1.0 - bar.decay) * y[:, j, None, None] * hess_h[:-1]
        hess = np.zeros((layout.size, layout.size))
        hess[x_cols[:, :, None], x_cols[:, None, :]] = blocks
        return hess

    in_blocks = []
    for j, bar in enumerate(barriers):
        rows = in_rows(j)[:, None]
        in_blocks += [(rows, x_cols[1:]), (rows, x_cols[:-1])]
        if bar.is_view:
            in_blocks.append((in_rows(j), d_cols))

    lower = np.full(layout.size, -np.inf)
    upper = np.full(layout.size, np.inf)
    lower[x_cols[1:]] = model.state_lower
    upper[x_cols[1:]] = model.state_upper
    lower[u_cols] = model.control_lower
    upper[u_cols] = model.control_upper

    return NlpProblem(
        objective=objective,
        gradient=gradient,
        hessian=lambda z: objective_hessian,
        lower=lower,
        upper=upper,
        equality=ConstraintBlock(eq_fun, eq_jac, eq_hess, pattern=eq_pattern),
        inequality=ConstraintBlock(in_fun, in_jac, in_hess, pattern=_pattern(*in_blocks)) if n_bars else None,
    )


def _initial_guess(prob, model, layout, warm_start):
    N = layout.N
    controls = np.zeros((N, CONTROL_DIM))
    if warm_start is not None:
        warm = np.asarray(warm_start, dtype=float).reshape(-1, CONTROL_DIM)[:N]
        controls[:len(warm)] = warm
        if 0 < len(warm) < N:
            controls[len(warm):] = warm[-1]
    controls = np.clip(controls, model.control_lower, model.control_upper)
    states = rollout(prob.x_init, controls, model.dt)

    slacks = np.zeros(layout.n_d)
    for bar in prob.view_barriers:
        h = bar.values(states, model.dt * np.arange(N + 1))
        slacks = np.minimum(0.0, h[1:] - (1.0 - bar.decay) * h[:-1])
    return np.concatenate([states.reshape(-1), controls.reshape(-1), slacks])


def _check_start(prob):
    for bar in prob.obstacle_barriers:
        value = h_obstacle(prob.x_init, bar.obstacle, bar.d_safe)
        if value <= 0:
            raise InfeasibleStart(
                f"Initial state ({prob.x_init.x:.3f}, {prob.x_init.y:.3f}) is inside the safe distance of the "
                f"obstacle at {np.round(bar.obstacle.center, 3).tolist()} (h={value:.4f})."
            )
    for bar in prob.view_barriers:
        bar.value(prob.x_init.as_array())


def _solve(prob, model, docking, warm_start, options):
    if not docking and prob.view_barriers:
        raise ValueError("The approach problem does not take view barriers; use plan_docking.")
    _check_start(prob)
    layout = _Layout(prob.horizon, docking)
    nlp = _build_nlp(prob, model, layout)
    z0 = _initial_guess(prob, model, layout, warm_start)

    start = time.perf_counter()
    result = solve_nlp(nlp, z0, options)
    solve_time = time.perf_counter() - start

    if result.best_feasible is not None:
        z_out, objective = result.best_feasible, result.best_objective
    else:
        logger.warning("No constraint-feasible iterate (status %s); commanding a stop.", result.status)
        stop = np.zeros((layout.N, CONTROL_DIM))
        z_out = np.concatenate([rollout(prob.x_init, stop, model.dt).reshape(-1), stop.reshape(-1), np.zeros(layout.n_d)])
        objective = nlp.objective(z_out)
    trajectory, controls, slacks = (part.copy() for part in layout.split(z_out))
    trajectory[0] = prob.x_init.as_array()
    slacks = slacks if docking else np.zeros(layout.N)

    solution = NmpcSolution(
        states=tuple(Pose2.from_array(state) for state in trajectory),
        controls=controls,
        slacks=slacks,
        status=result.status,
        solve_time=solve_time,
        objective=objective,
        iterations=result.iterations,
        kkt=result.kkt,
        trajectory=trajectory,
    )
    if result.status != "optimal":
        logger.info("NMPC status %s after %d iteration(s), KKT %.2e", result.status, result.iterations, result.kkt)
    return solution


def plan_approach(prob, model, warm_start=None, options=SqpOptions()):
    """Solve the approach problem: terminal cost, control cost and obstacle barriers.

    Parameters
    ----------
    prob: NmpcProblem
        Problem without view barriers.
    model: RobotModel
    warm_start: (N, 2) array, optional
        Initial control guess; zero controls when absent.
    options: SqpOptions

    Returns
    -------
    NmpcSolution
        The first control is the command to execute.

    Raises
    ------
    InfeasibleStart
        ``x_init`` lies inside an obstacle's safe distance.
    """
    return _solve(prob, model, False, warm_start, options)


def plan_docking(prob, model, warm_start=None, options=SqpOptions()):
    """Solve the docking problem, which adds the slack-relaxed view barrier.

    The view constraint is imposed as ``dh_view + mu h_view >= delta_k`` with free
    ``delta_k`` penalised by ``w delta_k^2``; a violated view cone therefore shows up
    as negative slacks.
    """
    return _solve(prob, model, True, warm_start, options)


class RecedingHorizonPlanner:
    """Closed-loop use of the NMPC: solve, execute the first control, shift the guess.

    Parameters
    ----------
    model: RobotModel
    options: SqpOptions
    """
    def __init__(self, model, options=SqpOptions()):
        self.model = model
        self.options = options

    def plan(self, prob, docking=False, warm_start=None):
        solve = plan_docking if docking else plan_approach
        return solve(prob, self.model, warm_start=warm_start, options=self.options)

    @staticmethod
    def warm_start_from(solution):
        """Previous controls shifted by one step, the last control repeated."""
        if solution is None:
            return None
        controls = np.asarray(solution.controls)
        return np.vstack([controls[1:], controls[-1:]])


def solution_to_json(solution, problem, dt, timing=True):
    """Plain-JSON form of a solution with the barriers it was planned against.

    ``timing=False`` leaves out ``solve_time`` so that the output only depends on the inputs.
    """
    obj = {
        "status": solution.status,
        "iterations": solution.iterations,
        "objective": solution.objective,
        "kkt": solution.kkt if np.isfinite(solution.kkt) else None,
        "dt": dt,
        "states": solution.trajectory.tolist(),
        "controls": np.asarray(solution.controls).tolist(),
        "slacks": np.asarray(solution.slacks).tolist(),
        "barriers": [bar.to_json() for bar in problem.barriers],
    }
    if timing:
        obj["solve_time"] = solution.solve_time
    return obj
