"""Mission state machine and fork manipulator.

A mission runs Approach -> Dock -> Capture -> Return -> Done, or ends in
Aborted. :func:`trollector.mission.app.step_mission` is called once per tick
with the latest sensor bundle and returns the next mission state with the
velocity and fork command to execute.
"""

from trollector.mission.manipulator import ManipulatorParams, ManipulatorState, manipulator_update
from trollector.mission.app import Stage, Command, MissionParams, MissionState, step_mission
