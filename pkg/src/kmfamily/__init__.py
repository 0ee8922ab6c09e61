"""K-means family: Lloyd K-means, Incremental and Divisive K-means, Two-Phase K-means."""
from .core import (
    Centroid,
    ClusteringError,
    ClusterSet,
    DataError,
    Dataset,
    DimensionError,
    InfeasibleKError,
    RunReport,
    TerminationConfig,
    WeightedPoint,
    nearest_center,
    squared_distance,
    total_distortion,
)
from .dkm import compute_margin, run_dkm, split_cluster
from .ikm import insert_into_largest, run_ikm
from .ingest import CsvOptions, CsvSegmentReader, enlarge_with_noise, load_csv
from .lloyd import assign_step, kmeans_learn, repair_empty_cluster, run_km, update_step
from .twophase import (
    IntermediateResult,
    SegmentError,
    phase1_map,
    phase2_reduce,
    plan_segments,
    run_2pk_sequential,
    run_par2pk,
)

__version__ = "0.1.0"
