"""Gated-GAN multi-collection style transfer."""

from ._gatedgan import (
    ArgumentError,
    ChecksumError,
    ConfigError,
    DatasetError,
    DecodeError,
    FormatError,
    GatedGanError,
    IndexError,
    IoError,
    Model,
    NumericError,
    ShapeError,
    VersionError,
    fid,
    fid_between,
    load_image,
    make_texture,
    matrix_sqrt_psd,
    probe_receptive_field,
    receptive_field,
    save_image,
    train_textures,
)

__version__ = "0.1.0"
