"""Dual-stage sEMG grasp classification."""

from ._emgds import (
    Corpus,
    EmgdsError,
    FeatureTable,
    Model,
    PcaModel,
    Recording,
    ar_coeffs,
    dendrogram,
    extract,
    fit_pca,
    ingest_csv,
    kurtosis,
    load_model,
    mav,
    read_features_csv,
    rms,
    skewness,
    ssc,
    std_dev,
    synth_corpus,
    train,
    waveform_length,
    write_csv,
    write_features_csv,
)

__all__ = [
    "Corpus",
    "EmgdsError",
    "FeatureTable",
    "Model",
    "PcaModel",
    "Recording",
    "ar_coeffs",
    "dendrogram",
    "extract",
    "fit_pca",
    "ingest_csv",
    "kurtosis",
    "load_model",
    "mav",
    "read_features_csv",
    "rms",
    "skewness",
    "ssc",
    "std_dev",
    "synth_corpus",
    "train",
    "waveform_length",
    "write_csv",
    "write_features_csv",
]
