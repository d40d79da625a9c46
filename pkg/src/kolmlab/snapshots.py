"""Field snapshot files.

One snapshot is a NumPy ``.npz`` archive with these entries:

======================  =======================================================
``format_name``         fixed string ``kolmlab-field``
``format_version``      integer, currently 1
``kind``                ``phase`` | ``spectral`` | ``mask``
``d``                   spatial dimension (grid covers 2d axes)
``points_per_axis``     samples per axis
``half_width``          box half width L
``values``              the sample array (complex for fields, uint8 for masks)
======================  =======================================================

Spectral snapshots store values in FFT frequency order, exactly as the
in-memory type does.  The writer is deterministic: identical inputs
produce identical bytes.
"""

from __future__ import annotations

from zipfile import BadZipFile

import numpy as np

from .errors import DataError
from .grid import PhaseField, PhaseGrid, SpectralField
from .thickness import GridMask

FORMAT_NAME = "kolmlab-field"
FORMAT_VERSION = 1

_KINDS = {
    PhaseField: "phase",
    SpectralField: "spectral",
    GridMask: "mask",
}


def save_field(path, obj) -> None:
    """Write a PhaseField, SpectralField, or GridMask snapshot."""
    kind = _KINDS.get(type(obj))
    if kind is None:
        raise DataError(f"cannot snapshot objects of type {type(obj).__name__}")
    values = obj.values.astype(np.uint8) if kind == "mask" else obj.values
    np.savez(
        path,
        format_name=FORMAT_NAME,
        format_version=FORMAT_VERSION,
        kind=kind,
        d=obj.grid.d,
        points_per_axis=obj.grid.points_per_axis,
        half_width=obj.grid.half_width,
        values=values,
    )


def load_field(path):
    """Read a snapshot back into its in-memory type."""
    try:
        with np.load(path) as data:
            if str(data["format_name"]) != FORMAT_NAME:
                raise DataError(f"{path}: not a {FORMAT_NAME} snapshot")
            version = int(data["format_version"])
            if version != FORMAT_VERSION:
                raise DataError(f"{path}: unsupported snapshot version {version}")
            kind = str(data["kind"])
            grid = PhaseGrid(
                d=int(data["d"]),
                points_per_axis=int(data["points_per_axis"]),
                half_width=float(data["half_width"]),
            )
            values = data["values"]
    except (OSError, BadZipFile, KeyError, ValueError) as exc:
        raise DataError(f"unreadable snapshot {path}: {exc}") from exc
    if kind == "phase":
        return PhaseField(grid, values)
    if kind == "spectral":
        return SpectralField(grid, values)
    if kind == "mask":
        return GridMask(grid, values.astype(bool))
    raise DataError(f"{path}: unknown snapshot kind {kind!r}")
