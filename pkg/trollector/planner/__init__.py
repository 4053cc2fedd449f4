"""Safety-critical NMPC planner.

The robot is a forward-Euler differential-drive model. Obstacles enter as
discrete-time control barrier constraints ``h(x_{k+1}) >= (1 - lambda) h(x_k)``
on ``h_ob = |p - p_ob|^2 - d_safe^2``; docking additionally keeps the trolley in
the camera's view cone through a slack-relaxed ``h_view`` constraint.

The optimal control problems are transcribed by direct multiple shooting and
solved by the SQP routine of :mod:`trollector.planner.nlp`, whose QP
subproblems go to OSQP.
"""

from trollector.planner.model import RobotModel
from trollector.planner.barriers import Obstacle, BarrierSpec
from trollector.planner.nmpc import NmpcProblem, NmpcSolution, plan_approach, plan_docking, RecedingHorizonPlanner
