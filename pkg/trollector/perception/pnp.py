"""Keypoint based trolley pose: EPnP initialisation and reprojection refinement.

The EPnP solver follows the usual recipe: express the model points in
barycentric coordinates of four control points, recover the control points in
the camera frame from the null space of the projection system, and pick the
candidate (one, two or three null vectors) with the least reprojection error.
"""
# pylint: disable=C0103
from dataclasses import dataclass, field

import cv2
import numpy as np

from trollector.geometry import Pose3, PixelPoint, project_points_array
from trollector.exceptions import (
    NonPositiveDepth, DegenerateConfiguration, NoValidSolution, DivergedRefinement
)
from trollector.utils import get_logger


logger = get_logger("Pnp Pose")

# Pairs of control points, in the row order of the distance constraints.
CONTROL_PAIRS = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]

# Products beta_i * beta_j, in the column order of the 6x10 constraint matrix.
BETA_PRODUCTS = [(0, 0), (0, 1), (1, 1), (0, 2), (1, 2), (2, 2), (0, 3), (1, 3), (2, 3), (3, 3)]

DEGENERATE_RATIO = 1e-6

# Squared pixel residual at which the refinement counts as exact.
EXACT_COST = 1e-18


@dataclass(frozen=True, eq=False)
class KeypointSet:
    """Detected keypoints of one frame together with their model coordinates."""
    image_points: np.ndarray
    model_points: np.ndarray
    visibility: np.ndarray = field(default=None)

    def __post_init__(self):
        image = np.array(self.image_points, dtype=float).reshape(-1, 2)
        model = np.array(self.model_points, dtype=float).reshape(-1, 3)
        if len(image) != len(model):
            raise ValueError(f"Got {len(image)} image points for {len(model)} model points.")
        vis = np.ones(len(model), dtype=bool) if self.visibility is None \
            else np.array(self.visibility, dtype=bool).reshape(-1)
        if len(vis) != len(model):
            raise ValueError("Visibility flags do not match the number of keypoints.")
        diffs = np.linalg.norm(model[:, None, :] - model[None, :, :], axis=-1)
        if np.any(diffs[np.triu_indices(len(model), k=1)] < 1e-12):
            raise ValueError("Model points of a keypoint set must be pairwise distinct.")
        for arr in (image, model, vis):
            arr.setflags(write=False)
        object.__setattr__(self, "image_points", image)
        object.__setattr__(self, "model_points", model)
        object.__setattr__(self, "visibility", vis)

    @property
    def pixels(self):
        return [PixelPoint(u, v) for u, v in self.image_points]

    def visible(self):
        return self.model_points[self.visibility], self.image_points[self.visibility]


def reprojection_residual(pose, kps, K):
    """Sum of squared pixel residuals of the visible keypoints."""
    model, image = kps.visible()
    diff = project_points_array(K, pose, model) - image
    return float(np.sum(diff**2))


def _control_points(model):
    centroid = model.mean(axis=0)
    centered = model - centroid
    eig_val, eig_vec = np.linalg.eigh(centered.T @ centered)
    eig_val = np.clip(eig_val, 0, None)
    if np.sqrt(eig_val[0]) < DEGENERATE_RATIO * np.sqrt(eig_val[-1]):
        raise DegenerateConfiguration("Model points are coplanar or collinear.")
    scales = np.sqrt(eig_val / len(model))
    ctrl = [centroid] + [centroid + scales[idx] * eig_vec[:, idx] for idx in range(3)]
    return np.array(ctrl)


def _barycentric(model, ctrl):
    basis = (ctrl[1:] - ctrl[0]).T
    rest = np.linalg.solve(basis, (model - ctrl[0]).T).T
    return np.hstack([1.0 - rest.sum(axis=1, keepdims=True), rest])


def _projection_system(alphas, image, K):
    n_pts = len(alphas)
    mat = np.zeros((2 * n_pts, 12))
    for idx in range(n_pts):
        u, v = image[idx]
        for j in range(4):
            a = alphas[idx, j]
            mat[2 * idx, 3 * j:3 * j + 3] = [a * K.fx, 0.0, a * (K.cx - u)]
            mat[2 * idx + 1, 3 * j:3 * j + 3] = [0.0, a * K.fy, a * (K.cy - v)]
    return mat


def _distance_system(null_vecs):
    """Rows: control point pairs. Columns: products of betas (see BETA_PRODUCTS)."""
    vecs = null_vecs.reshape(4, 4, 3)
    mat = np.zeros((6, 10))
    for row, (a, b) in enumerate(CONTROL_PAIRS):
        dv = vecs[:, a, :] - vecs[:, b, :]
        for col, (i, j) in enumerate(BETA_PRODUCTS):
            mat[row, col] = dv[i] @ dv[j] * (1.0 if i == j else 2.0)
    return mat


def _beta_products(betas):
    return np.array([betas[i] * betas[j] for i, j in BETA_PRODUCTS])


def _beta_products_jacobian(betas):
    jac = np.zeros((10, 4))
    for col, (i, j) in enumerate(BETA_PRODUCTS):
        jac[col, i] += betas[j]
        jac[col, j] += betas[i]
    return jac


def _gauss_newton_betas(L, rho, betas, iterations=5):
    betas = np.array(betas, dtype=float)
    for _ in range(iterations):
        residual = rho - L @ _beta_products(betas)
        jac = L @ _beta_products_jacobian(betas)
        step, *_ = np.linalg.lstsq(jac, residual, rcond=None)
        betas = betas + step
    return betas


def _approx_betas(L, rho, dims):
    betas = np.zeros(4)
    if dims == 1:
        b4, *_ = np.linalg.lstsq(L[:, [0, 1, 3, 6]], rho, rcond=None)
        sign = -1.0 if b4[0] < 0 else 1.0
        betas[0] = np.sqrt(abs(b4[0]))
        if betas[0] > 0:
            betas[1:] = sign * b4[1:] / betas[0]
    elif dims == 2:
        b3, *_ = np.linalg.lstsq(L[:, [0, 1, 2]], rho, rcond=None)
        if b3[0] < 0:
            betas[0] = np.sqrt(-b3[0])
            betas[1] = np.sqrt(-b3[2]) if b3[2] < 0 else 0.0
        else:
            betas[0] = np.sqrt(b3[0])
            betas[1] = np.sqrt(b3[2]) if b3[2] > 0 else 0.0
        if b3[1] < 0:
            betas[0] = -betas[0]
    else:
        b5, *_ = np.linalg.lstsq(L[:, [0, 1, 2, 3, 4]], rho, rcond=None)
        if b5[0] < 0:
            betas[0] = np.sqrt(-b5[0])
            betas[1] = np.sqrt(-b5[2]) if b5[2] < 0 else 0.0
        else:
            betas[0] = np.sqrt(b5[0])
            betas[1] = np.sqrt(b5[2]) if b5[2] > 0 else 0.0
        if b5[1] < 0:
            betas[0] = -betas[0]
        betas[2] = b5[3] / betas[0] if betas[0] != 0 else 0.0
    return betas


def _absolute_orientation(model, cam_points):
    """Least-squares rigid transform mapping model points onto camera points."""
    model_c = model.mean(axis=0)
    cam_c = cam_points.mean(axis=0)
    cross = (cam_points - cam_c).T @ (model - model_c)
    u_mat, _, vt_mat = np.linalg.svd(cross)
    fix = np.diag([1.0, 1.0, np.sign(np.linalg.det(u_mat @ vt_mat))])
    rotation = u_mat @ fix @ vt_mat
    translation = cam_c - rotation @ model_c
    return Pose3(rotation, translation)


def solve_epnp(kps, K):
    """Estimate the trolley pose from the visible keypoints with EPnP.

    Parameters
    ----------
    kps: KeypointSet
        Keypoints with at least four visible, non-coplanar model points.
    K: CameraIntrinsics
        Camera intrinsics.

    Returns
    -------
    Pose3
        Transform from the trolley frame into the camera frame.

    Raises
    ------
    DegenerateConfiguration
        Fewer than four visible points, or coplanar/collinear model points.
    NoValidSolution
        Every candidate places some point at non-positive depth.
    """
    model, image = kps.visible()
    if len(model) < 4:
        raise DegenerateConfiguration(f"At least 4 visible keypoints are required, got {len(model)}.")

    ctrl = _control_points(model)
    alphas = _barycentric(model, ctrl)
    proj = _projection_system(alphas, image, K)
    _, _, vt_mat = np.linalg.svd(proj, full_matrices=True)
    # Rows ordered from the smallest singular value.
    null_vecs = vt_mat[::-1][:4]

    L = _distance_system(null_vecs)
    rho = np.array([np.sum((ctrl[a] - ctrl[b])**2) for a, b in CONTROL_PAIRS])

    best_pose, best_err = None, np.inf
    for dims in (1, 2, 3):
        betas = _gauss_newton_betas(L, rho, _approx_betas(L, rho, dims))
        ctrl_cam = (betas @ null_vecs).reshape(4, 3)
        cam_points = alphas @ ctrl_cam
        if np.mean(cam_points[:, 2]) < 0:
            cam_points = -cam_points
        try:
            pose = _absolute_orientation(model, cam_points)
            err = reprojection_residual(pose, kps, K)
        except (NonPositiveDepth, ValueError, np.linalg.LinAlgError):
            continue
        logger.debug("EPnP candidate with %d null vector(s): residual %.3e", dims, err)
        if err < best_err:
            best_pose, best_err = pose, err

    if best_pose is None:
        raise NoValidSolution("All EPnP candidates place keypoints behind the camera.")
    return best_pose


def _skew(vec):
    return np.array([[0.0, -vec[2], vec[1]], [vec[2], 0.0, -vec[0]], [-vec[1], vec[0], 0.0]])


def _residual_and_jacobian(pose, model, image, K):
    rotated = model @ pose.rotation.T
    cam = rotated + pose.translation
    X, Y, Z = cam[:, 0], cam[:, 1], cam[:, 2]
    if np.any(Z <= 0):
        raise NonPositiveDepth("Refinement step moved a keypoint behind the camera.")
    pred = np.stack([K.fx * X / Z + K.cx, K.fy * Y / Z + K.cy], axis=1)
    residual = (pred - image).reshape(-1)

    jac = np.zeros((2 * len(model), 6))
    for idx in range(len(model)):
        d_proj = np.array([
            [K.fx / Z[idx], 0.0, -K.fx * X[idx] / Z[idx]**2],
            [0.0, K.fy / Z[idx], -K.fy * Y[idx] / Z[idx]**2],
        ])
        d_point = np.hstack([-_skew(rotated[idx]), np.eye(3)])
        jac[2 * idx:2 * idx + 2] = d_proj @ d_point
    return residual, jac


def _apply_step(pose, step):
    rot_delta, _ = cv2.Rodrigues(np.asarray(step[:3], dtype=np.float64).reshape(3, 1))
    rotation = rot_delta @ pose.rotation
    # Re-orthonormalise to keep Pose3's invariant under accumulated rounding.
    u_mat, _, vt_mat = np.linalg.svd(rotation)
    return Pose3(u_mat @ vt_mat, pose.translation + step[3:])


def refine_reprojection(initial, kps, K, max_iters=20, tol=1e-10):
    """Refine a pose by damped Gauss-Newton on the reprojection error.

    The update is a left perturbation ``R <- exp(w) R``, ``T <- T + t`` on the
    six parameters ``(w, t)``. A step is accepted only when it lowers the residual,
    so the returned pose is never worse than ``initial``.

    Parameters
    ----------
    initial: Pose3
        Starting pose; every visible point must have positive depth.
    kps: KeypointSet
    K: CameraIntrinsics
    max_iters: int
        Largest number of linearisations.
    tol: float
        Stop once the accepted step norm falls below this value.

    Raises
    ------
    DivergedRefinement
        Three consecutive damped steps increased the residual.
    """
    model, image = kps.visible()
    pose = initial
    residual, jac = _residual_and_jacobian(pose, model, image, K)
    cost = float(residual @ residual)
    damping = 1e-3
    rejected = 0

    for it in range(max_iters):
        grad = jac.T @ residual
        if cost <= EXACT_COST or np.max(np.abs(grad)) <= 1e-12 * (1.0 + cost):
            break

        hess = jac.T @ jac
        damped = hess + damping * (np.diag(np.diag(hess)) + 1e-12 * np.eye(6))
        step = -np.linalg.solve(damped, grad)
        predicted = -(grad @ step) - 0.5 * step @ hess @ step
        if predicted <= 1e-12 * cost:
            break

        try:
            candidate = _apply_step(pose, step)
            cand_res, cand_jac = _residual_and_jacobian(candidate, model, image, K)
            cand_cost = float(cand_res @ cand_res)
        except NonPositiveDepth:
            cand_cost = np.inf

        if cand_cost < cost:
            pose, residual, jac, cost = candidate, cand_res, cand_jac, cand_cost
            damping = max(damping / 10.0, 1e-12)
            rejected = 0
            logger.debug("Refinement iteration %d: residual %.3e", it, cost)
            if np.linalg.norm(step) < tol:
                break
        elif cand_cost <= cost * (1.0 + 1e-12):
            # Flat to machine precision.
            break
        else:
            rejected += 1
            damping *= 10.0
            if rejected >= 3:
                raise DivergedRefinement(f"Residual increased on {rejected} consecutive damped steps.")

    return pose
