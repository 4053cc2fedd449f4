"""Differential-drive prediction model."""
from dataclasses import dataclass

import numpy as np

from trollector.geometry import Pose2


@dataclass(frozen=True)
class RobotModel:
    """Discretisation step, control bounds and the state box of the predicted states.

    ``state_box`` holds ``((x_min, x_max), (y_min, y_max), (theta_min, theta_max))``.
    Theta is not wrapped inside the planner, so its bounds default to unbounded.
    """
    dt: float = 0.1
    v_bounds: tuple = (-0.2, 0.8)
    w_bounds: tuple = (-1.0, 1.0)
    state_box: tuple = ((-np.inf, np.inf), (-np.inf, np.inf), (-np.inf, np.inf))

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, received {self.dt}")
        if self.v_bounds[0] > self.v_bounds[1] or self.w_bounds[0] > self.w_bounds[1]:
            raise ValueError(f"Control bounds are inverted: v {self.v_bounds}, w {self.w_bounds}")
        for low, high in self.state_box:
            if low > high:
                raise ValueError(f"State box is inverted: {self.state_box}")

    @property
    def control_lower(self):
        return np.array([self.v_bounds[0], self.w_bounds[0]])

    @property
    def control_upper(self):
        return np.array([self.v_bounds[1], self.w_bounds[1]])

    @property
    def state_lower(self):
        return np.array([low for low, _ in self.state_box])

    @property
    def state_upper(self):
        return np.array([high for _, high in self.state_box])

    @classmethod
    def from_settings(cls, settings):
        planner = settings.planner
        x_min, x_max, y_min, y_max = planner.workspace
        return cls(
            dt=settings.run.dt,
            v_bounds=tuple(planner.v_bounds),
            w_bounds=tuple(planner.w_bounds),
            state_box=((x_min, x_max), (y_min, y_max), (-np.inf, np.inf)),
        )


def dd_step_array(state, control, dt):
    """Forward-Euler unicycle update on raw ``[x, y, theta]`` arrays; theta is left unwrapped.

    Takes one state and control, or stacked ``(K, 3)`` states with ``(K, 2)`` controls.
    """
    state = np.asarray(state, dtype=float)
    control = np.asarray(control, dtype=float)
    theta, v = state[..., 2], control[..., 0]
    return np.stack([
        state[..., 0] + dt * v * np.cos(theta),
        state[..., 1] + dt * v * np.sin(theta),
        theta + dt * control[..., 1],
    ], axis=-1)


def dd_step(x, u, dt):
    """One forward-Euler step of the differential-drive model."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, received {dt}")
    return Pose2.from_array(dd_step_array(x.as_array(), u, dt))


def dd_step_jacobian(state, control, dt):
    """Jacobians ``(df/dx, df/du)`` of :func:`dd_step_array`, stacked like its inputs."""
    state = np.asarray(state, dtype=float)
    control = np.asarray(control, dtype=float)
    theta, v = state[..., 2], control[..., 0]
    cos, sin = np.cos(theta), np.sin(theta)

    jac_x = np.zeros(theta.shape + (3, 3))
    jac_x[..., [0, 1, 2], [0, 1, 2]] = 1.0
    jac_x[..., 0, 2] = -dt * v * sin
    jac_x[..., 1, 2] = dt * v * cos
    jac_u = np.zeros(theta.shape + (3, 2))
    jac_u[..., 0, 0] = dt * cos
    jac_u[..., 1, 0] = dt * sin
    jac_u[..., 2, 1] = dt
    return jac_x, jac_u


def dd_step_hessian_contraction(state, control, dt, weights):
    """Second derivatives of ``weights . f(x, u)`` over ``(theta, v)``.

    Returns the 2x2 block ``[[d2/dtheta2, d2/dtheta dv], [d2/dv dtheta, d2/dv2]]``
    (stacked for stacked inputs); every other second derivative of the model vanishes.
    """
    state = np.asarray(state, dtype=float)
    control = np.asarray(control, dtype=float)
    weights = np.asarray(weights, dtype=float)
    theta, v = state[..., 2], control[..., 0]
    cos, sin = np.cos(theta), np.sin(theta)
    wx, wy = weights[..., 0], weights[..., 1]

    block = np.zeros(theta.shape + (2, 2))
    block[..., 0, 0] = -dt * v * (wx * cos + wy * sin)
    block[..., 0, 1] = dt * (wy * cos - wx * sin)
    block[..., 1, 0] = block[..., 0, 1]
    return block


def rollout(x_init, controls, dt):
    """States ``x_0..x_N`` (unwrapped theta) of the control sequence from ``x_init``."""
    controls = np.asarray(controls, dtype=float).reshape(-1, 2)
    states = np.zeros((len(controls) + 1, 3))
    states[0] = x_init.as_array() if isinstance(x_init, Pose2) else x_init
    for k, control in enumerate(controls):
        states[k + 1] = dd_step_array(states[k], control, dt)
    return states
