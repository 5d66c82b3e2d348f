"""Input checks shared by the estimator and the CLI."""
from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array

from .geometry import DepthImage, PointCloud, RigidTransform
from .pipeline import MeasurementFrame


def check_points(X, name: str = "X") -> np.ndarray:
    """Finite ``(n, 3)`` float array; a single 3-vector is promoted to ``(1, 3)``."""
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1 and arr.size == 3:
        arr = arr[None, :]
    arr = check_array(arr, dtype=np.float64, ensure_min_samples=0, input_name=name)
    if arr.shape[1] != 3:
        raise ValueError(f"{name} must have 3 columns, got {arr.shape[1]}")
    return arr


def check_pose(pose) -> RigidTransform:
    if isinstance(pose, RigidTransform):
        return pose
    m = np.asarray(pose, dtype=float)
    if m.shape != (4, 4):
        raise ValueError(f"pose must be a RigidTransform or a 4x4 matrix, got shape {m.shape}")
    return RigidTransform.from_matrix(m)


def check_frame(item, index: int = 0) -> MeasurementFrame:
    """Accept a ``MeasurementFrame`` or a ``(data, pose)`` pair.

    ``data`` may be a ``PointCloud``, a ``DepthImage``, an ``(n, 3)`` array of
    camera-frame points, or a 2D depth array.
    """
    if isinstance(item, MeasurementFrame):
        return item
    try:
        data, pose = item
    except (TypeError, ValueError):
        raise TypeError(
            f"frame {index}: expected MeasurementFrame or (data, pose), got {type(item).__name__}"
        ) from None
    pose = check_pose(pose)
    if isinstance(data, PointCloud):
        return MeasurementFrame(pose, cloud=data, timestamp=float(index))
    if isinstance(data, DepthImage):
        return MeasurementFrame(pose, image=data, timestamp=float(index))
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 2 and arr.shape[1] == 3 and arr.shape[0] != 3:
        return MeasurementFrame(pose, cloud=PointCloud(arr), timestamp=float(index))
    if arr.ndim == 2:
        return MeasurementFrame(pose, image=DepthImage.from_array(arr), timestamp=float(index))
    raise ValueError(f"frame {index}: cannot interpret data of shape {arr.shape}")


def check_frames(X) -> list[MeasurementFrame]:
    if isinstance(X, MeasurementFrame):
        X = [X]
    return [check_frame(item, i) for i, item in enumerate(X)]
