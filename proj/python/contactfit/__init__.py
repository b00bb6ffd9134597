"""Grasp refinement against target contact maps."""

from contactfit._core import (
    CapsuleConfig,
    GradScale,
    HandModel,
    HandParams,
    LossConfig,
    MetricsConfig,
    OptimConfig,
    OptimResult,
    PerturbConfig,
    TriMesh,
    contact_coverage,
    contact_maps,
    contact_precision_recall,
    intersection_volume,
    is_watertight,
    load_hand_model,
    load_hand_params,
    load_mesh,
    make_box,
    make_cylinder,
    make_icosphere,
    make_synthetic_hand,
    mpjpe,
    optimize,
    perturb,
    pose_hand,
    save_hand_model,
    save_hand_params,
    save_mesh,
    signed_distance,
)

__all__ = [
    "CapsuleConfig",
    "GradScale",
    "HandModel",
    "HandParams",
    "LossConfig",
    "MetricsConfig",
    "OptimConfig",
    "OptimResult",
    "PerturbConfig",
    "TriMesh",
    "contact_coverage",
    "contact_maps",
    "contact_precision_recall",
    "intersection_volume",
    "is_watertight",
    "load_hand_model",
    "load_hand_params",
    "load_mesh",
    "make_box",
    "make_cylinder",
    "make_icosphere",
    "make_synthetic_hand",
    "mpjpe",
    "optimize",
    "perturb",
    "pose_hand",
    "save_hand_model",
    "save_hand_params",
    "save_mesh",
    "signed_distance",
]
