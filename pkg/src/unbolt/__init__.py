"""Planning-and-control toolkit for robotic EV-battery disassembly."""

from .kinematics import JointConfig, KinematicModel, forward_kinematics
from .se3 import Pose, Transform, UnitQuaternion

__version__ = "1.0.0"

__all__ = [
    "JointConfig",
    "KinematicModel",
    "Pose",
    "Transform",
    "UnitQuaternion",
    "forward_kinematics",
    "__version__",
]
