"""Barrier functions of the planner and their derivatives.

``h_obstacle`` keeps the robot outside a disc around an obstacle, ``h_view``
keeps a target point inside a cone around the robot heading. The discrete-time
constraint between consecutive states is ``h(x_{k+1}) - (1 - decay) h(x_k) >= 0``.
"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from trollector.exceptions import TargetCoincident


COINCIDENT_EPS = 1e-6


@dataclass(frozen=True, eq=False)
class Obstacle:
    """Point obstacle with a constant velocity (zero for static ones) and a body radius."""
    center: np.ndarray
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(2))
    radius: float = 0.0

    def __post_init__(self):
        center = np.array(self.center, dtype=float).reshape(2)
        velocity = np.array(self.velocity, dtype=float).reshape(2)
        if not (np.isfinite(center).all() and np.isfinite(velocity).all() and np.isfinite(self.radius)):
            raise ValueError("Obstacle fields must be finite.")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "velocity", velocity)
        object.__setattr__(self, "radius", float(self.radius))

    def position_at(self, t):
        """Constant-velocity prediction ``t`` seconds ahead."""
        return self.center + t * self.velocity

    def to_json(self):
        return {"center": self.center.tolist(), "velocity": self.velocity.tolist(), "radius": self.radius}

    @classmethod
    def from_json(cls, obj):
        return cls(obj["center"], obj.get("velocity", [0.0, 0.0]), obj.get("radius", 0.0))


@dataclass(frozen=True, eq=False)
class BarrierSpec:
    """One barrier of an optimal control problem.

    kind 'obstacle' uses ``obstacle`` and ``d_safe``; kind 'view' uses ``target``
    and ``theta_max``. ``decay`` is the per-step decay rate in (0, 1].
    """
    kind: str
    decay: float
    d_safe: Optional[float] = None
    obstacle: Optional[Obstacle] = None
    theta_max: Optional[float] = None
    target: Optional[np.ndarray] = None

    def __post_init__(self):
        if not 0.0 < self.decay <= 1.0:
            raise ValueError(f"Barrier decay must be in (0, 1], received {self.decay}")
        if self.kind == "obstacle":
            if self.obstacle is None or self.d_safe is None or self.d_safe <= 0:
                raise ValueError("An obstacle barrier needs an obstacle and a positive d_safe.")
        elif self.kind == "view":
            if self.target is None or self.theta_max is None or not 0.0 < self.theta_max < np.pi:
                raise ValueError("A view barrier needs a target and theta_max in (0, pi).")
            object.__setattr__(self, "target", np.array(self.target, dtype=float).reshape(2))
        else:
            raise ValueError(f"Unknown barrier kind: {self.kind}")

    @classmethod
    def for_obstacle(cls, obstacle, d_safe, decay=0.3):
        return cls(kind="obstacle", decay=decay, d_safe=d_safe, obstacle=obstacle)

    @classmethod
    def for_view(cls, target, theta_max, decay=0.3):
        return cls(kind="view", decay=decay, theta_max=theta_max, target=target)

    @property
    def is_view(self):
        return self.kind == "view"

    def to_json(self):
        if self.is_view:
            return {"kind": "view", "decay": self.decay, "target": self.target.tolist(), "theta_max": self.theta_max}
        return {"kind": "obstacle", "decay": self.decay, "d_safe": self.d_safe, **self.obstacle.to_json()}

    @classmethod
    def from_json(cls, obj):
        if obj["kind"] == "view":
            return cls.for_view(obj["target"], obj["theta_max"], obj["decay"])
        return cls.for_obstacle(Obstacle.from_json(obj), obj["d_safe"], obj["decay"])

    def value(self, state, t=0.0):
        """Barrier value at a raw state, obstacles predicted ``t`` seconds ahead."""
        if self.is_view:
            return h_view(state, self.target, self.theta_max)
        return h_obstacle(state, Obstacle(self.obstacle.position_at(t)), self.d_safe)

    def gradient(self, state, t=0.0):
        if self.is_view:
            return h_view_gradient(state, self.target)
        return h_obstacle_gradient(state, self.obstacle.position_at(t))

    def hessian(self, state, t=0.0):  # pylint: disable=W0613
        if self.is_view:
            return h_view_hessian(state, self.target)
        return H_OBSTACLE

    def centers(self, times):
        """Predicted obstacle centres at each of ``times``, shape ``(K, 2)``."""
        return self.obstacle.center + np.asarray(times, dtype=float)[:, None] * self.obstacle.velocity

    def values(self, states, times):
        """Barrier values along stacked ``(K, 3)`` states, state ``k`` taken at ``times[k]``."""
        states = np.asarray(states, dtype=float)
        if self.is_view:
            return view_values(states, self.target, self.theta_max)
        diff = states[:, :2] - self.centers(times)
        return _dot(diff, diff) - self.d_safe**2

    def gradients(self, states, times):
        states = np.asarray(states, dtype=float)
        if self.is_view:
            return view_gradients(states, self.target)
        grads = np.zeros((len(states), 3))
        grads[:, :2] = 2.0 * (states[:, :2] - self.centers(times))
        return grads

    def hessians(self, states, times):  # pylint: disable=W0613
        if self.is_view:
            return view_hessians(states, self.target)
        return np.broadcast_to(H_OBSTACLE, (len(states), 3, 3))


def _as_state(x):
    if hasattr(x, "as_array"):
        return x.as_array()
    return np.asarray(x, dtype=float)


def h_obstacle(x, ob, d_safe):
    """``(x - x_ob)^2 + (y - y_ob)^2 - d_safe^2``."""
    state = _as_state(x)
    center = ob.center if isinstance(ob, Obstacle) else np.asarray(ob, dtype=float)
    return float((state[0] - center[0])**2 + (state[1] - center[1])**2 - d_safe**2)


def h_obstacle_gradient(x, center):
    state = _as_state(x)
    return np.array([2.0 * (state[0] - center[0]), 2.0 * (state[1] - center[1]), 0.0])


H_OBSTACLE = np.diag([2.0, 2.0, 0.0])


def _view_frames(states, p_tar):
    delta = np.asarray(p_tar, dtype=float)[:2] - states[:, :2]
    dist = np.linalg.norm(delta, axis=1)
    if np.any(dist <= COINCIDENT_EPS):
        where = int(np.argmax(dist <= COINCIDENT_EPS))
        raise TargetCoincident(f"Robot at {states[where, :2]} coincides with the view target.")
    e_t = delta / dist[:, None]
    e_r = np.stack([np.cos(states[:, 2]), np.sin(states[:, 2])], axis=1)
    e_r_dot = np.stack([-np.sin(states[:, 2]), np.cos(states[:, 2])], axis=1)
    return dist, e_t, e_r, e_r_dot


def _dot(a, b):
    return np.einsum("ki,ki->k", a, b)


def _outer(a, b):
    return np.einsum("ki,kj->kij", a, b)


def view_values(states, p_tar, theta_max):
    """``h_view`` along stacked ``(K, 3)`` states."""
    _, e_t, e_r, _ = _view_frames(np.asarray(states, dtype=float), p_tar)
    return _dot(e_t, e_r) - np.cos(theta_max)


def view_gradients(states, p_tar):
    dist, e_t, e_r, e_r_dot = _view_frames(np.asarray(states, dtype=float), p_tar)
    s = _dot(e_t, e_r)
    grads = np.empty((len(dist), 3))
    grads[:, :2] = (-e_r + s[:, None] * e_t) / dist[:, None]
    grads[:, 2] = _dot(e_t, e_r_dot)
    return grads


def view_hessians(states, p_tar):
    dist, e_t, e_r, e_r_dot = _view_frames(np.asarray(states, dtype=float), p_tar)
    s = _dot(e_t, e_r)
    q = _dot(e_t, e_r_dot)
    hess = np.zeros((len(dist), 3, 3))
    hess[:, :2, :2] = (
        -(_outer(e_t, e_r) + _outer(e_r, e_t)) + 3.0 * s[:, None, None] * _outer(e_t, e_t)
        - s[:, None, None] * np.eye(2)
    ) / (dist**2)[:, None, None]
    cross = (-e_r_dot + q[:, None] * e_t) / dist[:, None]
    hess[:, :2, 2] = cross
    hess[:, 2, :2] = cross
    hess[:, 2, 2] = -s
    return hess


def h_view(x, p_tar, theta_max):
    """``e_t . e_r - cos(theta_max)`` with e_t the unit vector robot -> target."""
    return float(view_values(_as_state(x)[None], p_tar, theta_max)[0])


def h_view_gradient(x, p_tar):
    return view_gradients(_as_state(x)[None], p_tar)[0]


def h_view_hessian(x, p_tar):
    return view_hessians(_as_state(x)[None], p_tar)[0]


def cbf_residual(h_now, h_next, decay):
    """``h_next - h_now + decay * h_now``; the constraint holds iff this is >= 0."""
    if not 0.0 < decay <= 1.0:
        raise ValueError(f"Barrier decay must be in (0, 1], received {decay}")
    return h_next - h_now + decay * h_now


def inflated_safe_distance(robot_radius, obstacle_radius, margin):
    return robot_radius + obstacle_radius + margin
