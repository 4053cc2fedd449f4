"""Trolley pose estimation.

Two pipelines estimate the world-frame trolley pose every tick:

* **Camera** (long range): six 2D keypoints of the trolley are lifted to a 3D
  pose by EPnP, refined by minimising the reprojection error and reduced to a
  planar pose. The result is smoothed by a gate-then-blend filter which holds
  the last estimate while the trolley is out of the field of view.
* **LiDAR** (short range, roughly 0.3 m to 2 m): the backplane points are
  cropped from the cloud, a plane is fitted by RANSAC and the plane normal and
  inlier centroid give the planar pose.

Both pipelines derive from :class:`trollector.base.BasePoseEstimator` and
report a failed solve as "no measurement".
"""

from trollector.perception.camera import CameraRig, CameraPoseEstimator
from trollector.perception.lidar import LidarRig, LidarPoseEstimator
