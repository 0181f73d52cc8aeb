"""RF through-obstruction pose workbench bindings."""

from rfpose._core import (
    __version__,
    angular_resolution,
    beat_to_delay,
    cartesian_to_spherical,
    cls_weight,
    delay_to_range,
    joint_loss,
    keypoint_names,
    ks,
    materials,
    medium_attenuation,
    motion_keypoints,
    oks,
    project_heatmaps,
    range_resolution,
    simulate_heatmaps,
    spherical_to_cartesian,
)

__all__ = [
    "__version__",
    "angular_resolution",
    "beat_to_delay",
    "cartesian_to_spherical",
    "cls_weight",
    "delay_to_range",
    "joint_loss",
    "keypoint_names",
    "ks",
    "materials",
    "medium_attenuation",
    "motion_keypoints",
    "oks",
    "project_heatmaps",
    "range_resolution",
    "simulate_heatmaps",
    "spherical_to_cartesian",
]
