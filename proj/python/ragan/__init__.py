"""End-to-end learned links trained with optimal, GAN, RA-GAN or RL schemes."""

from ._core import (
    ConfigError,
    IoError,
    LoadError,
    TrainedLink,
    TrainingAbort,
    awgn,
    bler,
    ebn0_to_noise_var,
    normalize_power,
    one_hot,
    parse_config,
    run_experiment,
    train,
)

__all__ = [
    "ConfigError",
    "IoError",
    "LoadError",
    "TrainedLink",
    "TrainingAbort",
    "awgn",
    "bler",
    "ebn0_to_noise_var",
    "normalize_power",
    "one_hot",
    "parse_config",
    "run_experiment",
    "train",
]
