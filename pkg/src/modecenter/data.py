"""Bundled datasets."""

import zlib

import numpy as np

__all__ = ["NEWCOMB_COUNTS", "newcomb", "newcomb_checksum", "SYNTHETIC_EXAMPLE"]

# Newcomb's 1882 speed-of-light measurements, as deviations from 24,800 ns:
# (value, number of repetitions)
NEWCOMB_COUNTS = (
    (-44, 1), (-2, 1), (16, 2), (19, 1), (20, 1), (21, 2), (22, 2), (23, 3),
    (24, 5), (25, 5), (26, 5), (27, 6), (28, 7), (29, 5), (30, 3), (31, 2),
    (32, 5), (33, 2), (34, 1), (36, 4), (37, 1), (39, 1), (40, 1),
)

# small two-cluster sample used as a worked example
SYNTHETIC_EXAMPLE = (-2.0, -1.0, 0.0, 1.0, 2.0, 10.0, 11.0)


def newcomb():
    """The 66 measurements, sorted ascending, as floats."""
    values, counts = zip(*NEWCOMB_COUNTS)
    return np.repeat(np.array(values, dtype=float), counts)


def newcomb_checksum():
    """CRC-32 of the expanded sample as little-endian int64 values."""
    return zlib.crc32(newcomb().astype("<i8").tobytes())
