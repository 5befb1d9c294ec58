"""Semi-supervised encrypted traffic classification from sampled packet windows."""

from ._semitc import (
    ConfigError,
    DataError,
    Flow,
    Model,
    ParseError,
    SemitcError,
    ShapeError,
    TruncatedCaptureError,
    UnsupportedFormatError,
    VersionError,
    classify,
    default_config,
    evaluate,
    gradcheck,
    ingest_pcap,
    knn_evaluate,
    knn_leave_one_out,
    label_set,
    load_model,
    pretrain,
    read_flows,
    retrain,
    sample_indices,
    split_per_class,
    stat_feature_names,
    stat_features,
    synthesize,
    train_baseline,
    write_flows,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
