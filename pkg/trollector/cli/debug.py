"""Single-algorithm sub-commands for offline checks.

Each command wraps one operation and is deterministic given its inputs and
``--seed``.
"""
import click
import numpy as np

from trollector.cli import load_scenario, echo_json
from trollector.cli.common_options import add_common_options, COMMON_OUTPUT_OPTIONS
from trollector.utils import LazyLoader


file_io = LazyLoader("file_io", globals(), "trollector.io")
plane = LazyLoader("plane", globals(), "trollector.perception.plane")
pnp_lib = LazyLoader("pnp_lib", globals(), "trollector.perception.pnp")
nmpc = LazyLoader("nmpc", globals(), "trollector.planner.nmpc")


def problem_from_json(obj, settings):
    """Build ``(problem, model, docking)`` from a problem JSON.

    Keys not given in the JSON fall back to the planner section of the settings.
    Obstacles take ``center``, ``velocity`` and ``radius``; ``d_safe`` defaults to
    the inflated safe distance of the settings.
    """
    # pylint: disable=C0415
    from trollector.geometry import Pose2
    from trollector.planner.model import RobotModel
    from trollector.planner.barriers import BarrierSpec, Obstacle, inflated_safe_distance

    planner = settings.planner
    mode = obj.get("mode", "approach")
    if mode not in ("approach", "docking"):
        raise click.BadParameter(f"Unknown mode: {mode}", param_hint="problem_json")

    x_min, x_max, y_min, y_max = obj.get("workspace", planner.workspace)
    model = RobotModel(
        dt=obj.get("dt", settings.run.dt),
        v_bounds=tuple(obj.get("v_bounds", planner.v_bounds)),
        w_bounds=tuple(obj.get("w_bounds", planner.w_bounds)),
        state_box=((x_min, x_max), (y_min, y_max), (-np.inf, np.inf)),
    )

    decay = obj.get("obstacle_decay", planner.obstacle_decay)
    barriers = []
    for item in obj.get("obstacles", []):
        obstacle = Obstacle.from_json(item)
        d_safe = item.get("d_safe", inflated_safe_distance(planner.robot_radius, obstacle.radius, planner.margin))
        barriers.append(BarrierSpec.for_obstacle(obstacle, d_safe, decay))
    docking = mode == "docking"
    if docking:
        barriers.append(BarrierSpec.for_view(
            obj["target"], obj.get("theta_max", planner.theta_max), obj.get("view_decay", planner.view_decay)
        ))

    problem = nmpc.NmpcProblem(
        horizon=obj.get("horizon", planner.horizon),
        x_init=Pose2(*obj["x_init"]),
        x_goal=Pose2(*obj["x_goal"]),
        terminal_weight=np.diag(obj.get("terminal_weight", planner.terminal_weight)),
        control_weight=np.diag(obj.get("control_weight", planner.control_weight)),
        barriers=barriers,
        slack_weight=obj.get("slack_weight", planner.slack_weight) if docking else None,
    )
    return problem, model, docking


@click.command("solve-once")
@click.argument("problem_json", type=click.Path(exists=True, dir_okay=False))
@add_common_options(COMMON_OUTPUT_OPTIONS)
@click.option("-s", "--scenario", help="Scenario whose planner settings fill the missing keys.")
def solve_once(problem_json, output, scenario):
    """Solve one approach or docking problem and print the solution JSON.

    The solution leaves out the solve time, so the same input gives the same output.
    """
    # pylint: disable=C0415
    from trollector.exceptions import TrollectorError
    from trollector.planner.nlp import SqpOptions

    settings = load_scenario(scenario)
    problem, model, docking = problem_from_json(file_io.load_json(problem_json), settings)
    options = SqpOptions(max_iter=settings.planner.max_iter, kkt_tol=settings.planner.kkt_tol)
    solve = nmpc.plan_docking if docking else nmpc.plan_approach
    try:
        solution = solve(problem, model, options=options)
    except TrollectorError as err:
        raise click.ClickException(f"{type(err).__name__}: {err}") from err
    echo_json(nmpc.solution_to_json(solution, problem, model.dt, timing=False), output)


@click.command("fit-plane")
@click.argument("xyz_path", type=click.Path(exists=True, dir_okay=False))
@add_common_options(COMMON_OUTPUT_OPTIONS)
@click.option("-i", "--iterations", help="Number of RANSAC hypotheses.", type=int, default=200, show_default=True)
@click.option("--tol", help="Inlier distance in meters.", type=float, default=0.005, show_default=True)
@click.option("--seed", help="Seed of the hypothesis sampling.", type=int, default=0, show_default=True)
def fit_plane(xyz_path, output, iterations, tol, seed):
    """Fit the dominant plane of an XYZ point file with RANSAC."""
    # pylint: disable=C0415
    from trollector.exceptions import TrollectorError

    cloud = plane.PointCloud(file_io.load_xyz(xyz_path))
    try:
        model = plane.ransac_plane(cloud, iterations=iterations, inlier_tol_m=tol, seed=seed)
    except TrollectorError as err:
        raise click.ClickException(f"{type(err).__name__}: {err}") from err
    result = {
        "a": model.a,
        "b": model.b,
        "c": model.c,
        "d": model.d,
        "inliers": len(model.inlier_indices),
        "points": len(cloud),
    }
    try:
        result["pose"] = plane.plane_to_pose(model, cloud).as_array()
    except TrollectorError:
        result["pose"] = None
    echo_json(result, output)


@click.command()
@click.argument("keypoints_json", type=click.Path(exists=True, dir_okay=False))
@add_common_options(COMMON_OUTPUT_OPTIONS)
@click.option("--refine/--no-refine", help="Refine the EPnP pose on the reprojection error.", default=True,
              show_default=True)
def pnp(keypoints_json, output, refine):
    """Estimate the camera-frame pose of a keypoint set with EPnP.

    The input holds ``intrinsics`` (fx, fy, cx, cy), ``model_points``,
    ``image_points`` and optionally ``visibility``.
    """
    # pylint: disable=C0415
    from trollector.geometry import CameraIntrinsics
    from trollector.exceptions import TrollectorError, DivergedRefinement

    obj = file_io.load_json(keypoints_json)
    K = CameraIntrinsics(**obj["intrinsics"])  # pylint: disable=C0103
    kps = pnp_lib.KeypointSet(obj["image_points"], obj["model_points"], obj.get("visibility"))
    try:
        pose = pnp_lib.solve_epnp(kps, K)
    except TrollectorError as err:
        raise click.ClickException(f"{type(err).__name__}: {err}") from err
    if refine:
        try:
            pose = pnp_lib.refine_reprojection(pose, kps, K)
        except DivergedRefinement as err:
            click.echo(f"Keeping the EPnP pose: {err}", err=True)
    echo_json({
        "rotation": pose.rotation,
        "translation": pose.translation,
        "residual": pnp_lib.reprojection_residual(pose, kps, K),
        "refined": refine,
    }, output)
