"""Python access to the wavegraphnet core (preparation, metrics, reports).

Training runs through the ``wgn`` executable; this package reads what it writes.
"""

from ._core import (
    NO_DAMAGE_TARGET,
    WgnError,
    build_report,
    enumerate_paths,
    forward_paths,
    fpr,
    generate_synthetic,
    is_damaged,
    mae,
    prepare,
    transducers,
)

__all__ = [
    "NO_DAMAGE_TARGET",
    "WgnError",
    "build_report",
    "enumerate_paths",
    "forward_paths",
    "fpr",
    "generate_synthetic",
    "is_damaged",
    "mae",
    "prepare",
    "transducers",
]
