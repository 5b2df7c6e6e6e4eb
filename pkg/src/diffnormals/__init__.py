"""Difference of Normals filtering for unorganized point clouds.

Normals are estimated by PCA over fixed-radius neighbourhoods at a small and
a large support radius; half their difference is a per-point vector whose
magnitude picks out structure between the two scales.
"""

from ._backend import available as available_backends
from ._backend import default_backend
from .cloud import PointCloud, VoxelGridSpec, voxel_downsample
from .clustering import Cluster, ClusterParams, euclidean_clusters
from .don import (
    DoNField,
    DoNParams,
    compute_don_field,
    don_pair,
    filter_by_component,
    filter_by_magnitude,
)
from .evaluation import (
    EvalConfig,
    EvalRecord,
    GroundTruthBox,
    evaluate_sequence,
    match_cluster,
    points_in_box,
    precision_recall,
)
from .index import SpatialIndex, build_index, radius_search
from .io import load_cloud, save_cloud
from .normals import (
    DecimationSpec,
    NormalMap,
    UnitNormal,
    estimate_normal,
    estimate_normal_map,
    orient_to_viewpoint,
)
from .paramselect import (
    PRESETS,
    ClassSample,
    ClassStats,
    ParamGrid,
    class_response_stats,
    select_params,
)

__version__ = "0.1.0"

__all__ = [
    "PRESETS",
    "ClassSample",
    "ClassStats",
    "Cluster",
    "ClusterParams",
    "DecimationSpec",
    "DoNField",
    "DoNParams",
    "EvalConfig",
    "EvalRecord",
    "GroundTruthBox",
    "NormalMap",
    "ParamGrid",
    "PointCloud",
    "SpatialIndex",
    "UnitNormal",
    "VoxelGridSpec",
    "available_backends",
    "build_index",
    "class_response_stats",
    "compute_don_field",
    "default_backend",
    "don_pair",
    "estimate_normal",
    "estimate_normal_map",
    "euclidean_clusters",
    "evaluate_sequence",
    "filter_by_component",
    "filter_by_magnitude",
    "load_cloud",
    "match_cluster",
    "orient_to_viewpoint",
    "points_in_box",
    "precision_recall",
    "radius_search",
    "save_cloud",
    "select_params",
    "voxel_downsample",
]
