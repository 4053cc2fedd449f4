"""Re-evaluate barrier constraints on logged runs and saved solutions.

Nothing here trusts the values the planner reported: every barrier value is
recomputed from the logged states and obstacle tracks.
"""
import os
from dataclasses import dataclass, field

from trollector.io import load_json, load_jsonl
from trollector.geometry import Pose2
from trollector.planner.barriers import BarrierSpec, Obstacle, h_obstacle
from trollector.utils import get_logger


logger = get_logger("Verify")

TOLERANCE = 1e-6


@dataclass
class VerifyReport:
    source: str
    checked_ticks: int = 0
    checked_steps: int = 0
    violations: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations

    def to_json(self):
        return {
            "source": self.source,
            "checked_ticks": self.checked_ticks,
            "checked_steps": self.checked_steps,
            "violations": self.violations,
            "ok": self.ok,
        }


def check_planned(states, barriers, dt, slacks=None, tol=TOLERANCE):
    """Check ``h(x_k) >= 0`` for obstacles and ``h(x_{k+1}) >= (1 - decay) h(x_k)`` along a planned trajectory.

    View barriers are checked against the decay bound minus their slack.

    Returns
    -------
    (violations, steps)
        List of violation records and the number of checked steps.
    """
    violations = []
    steps = 0
    for idx, bar in enumerate(barriers):
        values = [bar.value(state, k * dt) for k, state in enumerate(states)]
        if not bar.is_view:
            for k, value in enumerate(values):
                if value < -tol:
                    violations.append({"check": "barrier", "barrier": idx, "step": k, "value": value})
        for k in range(len(values) - 1):
            residual = values[k + 1] - (1.0 - bar.decay) * values[k]
            if bar.is_view and slacks is not None:
                residual -= slacks[k]
            steps += 1
            if residual < -tol and not (bar.is_view and slacks is None):
                violations.append({"check": "decay", "barrier": idx, "step": k, "value": residual})
    return violations, steps


def check_plan_record(plan, tol=TOLERANCE):
    states = [Pose2.from_array(state) for state in plan["states"]]
    barriers = [BarrierSpec.from_json(obj) for obj in plan["barriers"]]
    return check_planned(states, barriers, plan["dt"], plan.get("slacks"), tol)


def verify_solution(obj, source="<solution>", tol=TOLERANCE):
    report = VerifyReport(source)
    violations, steps = check_plan_record(obj, tol)
    report.violations.extend(violations)
    report.checked_steps += steps
    return report


def verify_run(run_dir, tol=TOLERANCE):
    """Check every executed state and every planned trajectory of a run directory."""
    report = VerifyReport(run_dir)
    for record in load_jsonl(os.path.join(run_dir, "ticks.jsonl")):
        report.checked_ticks += 1
        robot = Pose2.from_array(record["robot"])
        for obj in record["obstacles"]:
            value = h_obstacle(robot, Obstacle.from_json(obj), obj["d_safe"])
            if value < -tol:
                report.violations.append({"check": "executed", "tick": record["tick"], "value": value})
        plan = record.get("plan")
        if plan is not None:
            violations, steps = check_plan_record(plan, tol)
            for violation in violations:
                violation["tick"] = record["tick"]
            report.violations.extend(violations)
            report.checked_steps += steps
    return report


def verify(path, tol=TOLERANCE):
    """Verify a run directory or a solution JSON file written by ``solve-once``."""
    if os.path.isdir(path):
        report = verify_run(path, tol)
    else:
        report = verify_solution(load_json(path), source=path, tol=tol)
    if report.ok:
        logger.info("Verified %s: %d ticks, %d planned steps, no violation", path, report.checked_ticks,
                    report.checked_steps)
    else:
        logger.warning("%s has %d barrier violation(s)", path, len(report.violations))
    return report
