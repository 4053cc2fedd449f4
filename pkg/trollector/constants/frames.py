"""Fixed frame conventions.

Robot body and LiDAR frames: x forward, y left, z up.
Camera optical frame: x right, y down, z forward.
Trolley frame: origin at the backplane centre, x pointing from the backplane into
the trolley, z up.
"""
import numpy as np


# Rotation taking body-frame coordinates (x fwd, y left, z up) into the optical frame.
OPTICAL_FROM_BODY = np.array([
    [0.0, -1.0, 0.0],
    [0.0, 0.0, -1.0],
    [1.0, 0.0, 0.0],
])

# Column layout of planar states inside the planner.
STATE_DIM = 3
CONTROL_DIM = 2

# Stream ids of the counter-based noise generators of the simulator.
CAMERA_STREAM = 1
LIDAR_STREAM = 2
POSE_STREAM = 3

# Columns of the trajectory CSV, in order.
TRAJECTORY_COLUMNS = ["t", "x", "y", "theta", "v_cmd", "w_cmd", "stage", "min_h_ob", "h_view", "slack_max"]
