"""State snapshot files: raw binary and CSV.

Binary layout: 8-byte magic ``GPLAB001``, u32 dim, u32 points_per_axis,
f64 box_length (all little-endian), then the complex64 field in row-major
order.  CSV layout: header ``index,x[,y,z],re,im``, one row per grid point
in row-major order.
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .grids import GridSpec, WaveFunction

MAGIC = b"GPLAB001"
_HEADER = struct.Struct("<II d")


def write_state_binary(path: str | Path, phi: WaveFunction) -> Path:
    path = Path(path)
    with path.open("wb") as handle:
        handle.write(MAGIC)
        handle.write(_HEADER.pack(phi.grid.dim, phi.grid.points_per_axis, phi.grid.box_length))
        handle.write(np.ascontiguousarray(phi.values, dtype="<c8").tobytes())
    return path


def read_state_binary(path: str | Path) -> WaveFunction:
    path = Path(path)
    raw = path.read_bytes()
    if raw[: len(MAGIC)] != MAGIC:
        raise ConfigurationError(f"{path}: bad magic, not a state snapshot")
    dim, m, box = _HEADER.unpack_from(raw, len(MAGIC))
    grid = GridSpec(dim, m, box)
    data = np.frombuffer(raw, dtype="<c8", offset=len(MAGIC) + _HEADER.size)
    if data.size != grid.size:
        raise ConfigurationError(f"{path}: payload size does not match the header")
    return WaveFunction(grid, data.reshape(grid.shape).astype(complex))


def write_marginal_binary(path: str | Path, dm) -> Path:
    """Dump a k-particle marginal kernel under the same header scheme.

    The header describes the per-particle grid; the payload is the full
    (M^(d k))^2 kernel in row-major order, so the level k is implied by the
    payload size.
    """
    path = Path(path)
    with path.open("wb") as handle:
        handle.write(MAGIC)
        handle.write(_HEADER.pack(dm.grid.dim, dm.grid.points_per_axis, dm.grid.box_length))
        handle.write(np.ascontiguousarray(dm.kernel, dtype="<c8").tobytes())
    return path


def read_marginal_binary(path: str | Path):
    from .manybody import DensityMatrix

    path = Path(path)
    raw = path.read_bytes()
    if raw[: len(MAGIC)] != MAGIC:
        raise ConfigurationError(f"{path}: bad magic, not a marginal snapshot")
    dim, m, box = _HEADER.unpack_from(raw, len(MAGIC))
    grid = GridSpec(dim, m, box)
    data = np.frombuffer(raw, dtype="<c8", offset=len(MAGIC) + _HEADER.size)
    k = 1
    while (grid.size**k) ** 2 < data.size:
        k += 1
    rows = grid.size**k
    if rows * rows != data.size:
        raise ConfigurationError(f"{path}: payload is not a square kernel on this grid")
    return DensityMatrix(grid, k, data.reshape(rows, rows).astype(complex))


def write_state_csv(path: str | Path, phi: WaveFunction) -> Path:
    path = Path(path)
    grid = phi.grid
    mesh = [c.ravel() for c in grid.coordinate_mesh()]
    flat = phi.values.ravel()
    header = ["index"] + ["x", "y", "z"][: grid.dim] + ["re", "im"]
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for idx in range(flat.size):
            row = [idx]
            row += [f"{c[idx]:.17g}" for c in mesh]
            row += [f"{flat[idx].real:.17g}", f"{flat[idx].imag:.17g}"]
            writer.writerow(row)
    return path
