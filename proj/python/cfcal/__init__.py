"""Coarse-to-fine calibration workbench for a simulated cable-driven arm."""

from ._core import (
    CombinedPredictor,
    ConfigError,
    DegenerateInput,
    Error,
    FormatError,
    InvalidArgument,
    MissingArtifact,
    Mlp,
    NumericFailure,
    PerYawRigid,
    StereoRig,
    __version__,
    config_text,
    fit_rbt,
    load_coarse_dataset,
    load_combined,
    load_mlp,
    load_rigid,
    run,
    snap_yaw,
)

__all__ = [
    "CombinedPredictor",
    "ConfigError",
    "DegenerateInput",
    "Error",
    "FormatError",
    "InvalidArgument",
    "MissingArtifact",
    "Mlp",
    "NumericFailure",
    "PerYawRigid",
    "StereoRig",
    "__version__",
    "config_text",
    "fit_rbt",
    "load_coarse_dataset",
    "load_combined",
    "load_mlp",
    "load_rigid",
    "run",
    "snap_yaw",
]
