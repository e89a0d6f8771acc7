"""Reproducible Wiener increments on uniform grids.

Every Monte Carlo path owns an independent stream, addressed by
``(master_seed, path_index)``:

1. ``key = splitmix64(splitmix64(master_seed) XOR path_index)`` (64-bit).
2. A Philox-4x64-10 counter generator keyed with ``key`` (counter starting at 0)
   emits raw 64-bit words ``r``; each becomes a uniform
   ``u = (r >> 11) * 2**-53 + 2**-54`` in the open interval (0, 1).
3. Consecutive uniforms ``(u1, u2)`` give two standard normals by the
   Box-Muller transform: ``sqrt(-2 ln u1) * (cos(2 pi u2), sin(2 pi u2))``.
4. Normals are scaled by ``sqrt(dt)`` and snapped to the dyadic lattice
   ``q * Z`` with ``q = 2**(e - 52)``, ``2**e`` the smallest power of two above
   the sum of absolute increments. On that lattice every partial sum of the
   path is exact in float64, so coarsening is exactly additive and nested
   coarsenings agree bit for bit. The snap moves each increment by at most
   ``n_steps * 2**-52`` times the path's mean absolute increment.

Paths never share a sequential stream, so they can be generated in any order
or in parallel.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = [
    "ArgumentError",
    "WienerGrid",
    "coarsen",
    "coarsen_increments",
    "dump",
    "generate",
    "generate_increments",
    "load",
    "path_key",
    "splitmix64",
    "standard_normals",
]

_MASK64 = (1 << 64) - 1

MAGIC = b"WGRD"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHHIIdQ")  # magic, version, reserved, n_steps, path_index, dt, master_seed
assert _HEADER.size == 32


class ArgumentError(ValueError):
    """Invalid grid or experiment arguments."""


def splitmix64(x: int) -> int:
    """SplitMix64 output function applied to ``x`` (a bijection on 64-bit words)."""
    z = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def path_key(master_seed: int, path_index: int) -> int:
    """64-bit Philox key of one path; injective in ``path_index`` for a fixed master seed."""
    _check_seed(master_seed, path_index)
    return splitmix64(splitmix64(master_seed) ^ path_index)


def _check_seed(master_seed, path_index):
    if not (0 <= int(master_seed) <= _MASK64):
        raise ArgumentError(f"master_seed must be a 64-bit unsigned integer, got {master_seed}")
    if not (0 <= int(path_index) < 2 ** 32):
        raise ArgumentError(f"path_index must be in [0, 2**32), got {path_index}")


def standard_normals(master_seed: int, path_index: int, n: int) -> np.ndarray:
    """First ``n`` standard normal draws of a path's stream (Box-Muller over Philox)."""
    bitgen = np.random.Philox(key=path_key(master_seed, path_index))
    n_pairs = (n + 1) // 2
    raw = bitgen.random_raw(2 * n_pairs)
    u = (raw >> np.uint64(11)).astype(np.float64) * 2.0 ** -53 + 2.0 ** -54
    radius = np.sqrt(-2.0 * np.log(u[0::2]))
    angle = 2.0 * np.pi * u[1::2]
    z = np.empty(2 * n_pairs)
    z[0::2] = radius * np.cos(angle)
    z[1::2] = radius * np.sin(angle)
    return z[:n]


def _snap(increments: np.ndarray) -> np.ndarray:
    l1 = float(np.sum(np.abs(increments)))
    if l1 == 0.0:
        return increments
    _, e = math.frexp(l1)  # l1 < 2**e
    q = math.ldexp(1.0, e - 52)
    return np.rint(increments / q) * q


@dataclass(frozen=True, eq=False)
class WienerGrid:
    """Brownian increments on a uniform grid ``t_j = j*dt``, ``j = 0..n_steps``."""

    dt: float
    increments: np.ndarray
    master_seed: int = 0
    path_index: int = 0
    factor: int = 1  # coarsening factor relative to the generated grid

    def __post_init__(self):
        inc = np.array(self.increments, dtype=np.float64)
        inc.setflags(write=False)
        object.__setattr__(self, "increments", inc)
        if inc.ndim != 1 or inc.size < 1:
            raise ArgumentError("a grid needs at least one increment")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ArgumentError(f"dt must be positive and finite, got {self.dt}")

    @property
    def n_steps(self) -> int:
        return self.increments.size

    @property
    def T(self) -> float:
        return self.n_steps * self.dt

    @property
    def seed_info(self) -> tuple[int, int]:
        return (self.master_seed, self.path_index)

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_steps + 1, dtype=np.float64)

    def path(self) -> np.ndarray:
        """Brownian values ``W(t_j)`` with ``W(0) = 0`` (exact partial sums)."""
        return np.concatenate(([0.0], np.cumsum(self.increments)))

    def coarsen(self, m: int) -> "WienerGrid":
        return coarsen(self, m)


def generate_increments(master_seed: int, path_indices: Sequence[int], n_steps: int, dt: float) -> np.ndarray:
    """Increments of several paths stacked as an ``(len(path_indices), n_steps)`` array."""
    if int(n_steps) < 1:
        raise ArgumentError(f"n_steps must be >= 1, got {n_steps}")
    if not (dt > 0 and math.isfinite(dt)):
        raise ArgumentError(f"dt must be positive and finite, got {dt}")
    out = np.empty((len(path_indices), int(n_steps)))
    sqrt_dt = math.sqrt(dt)
    for row, idx in enumerate(path_indices):
        out[row] = _snap(sqrt_dt * standard_normals(master_seed, int(idx), int(n_steps)))
    return out


def generate(master_seed: int, path_index: int, n_steps: int, dt: float) -> WienerGrid:
    """i.i.d. N(0, dt) increments for path ``path_index`` of experiment ``master_seed``."""
    inc = generate_increments(master_seed, [path_index], n_steps, dt)[0]
    return WienerGrid(dt=float(dt), increments=inc, master_seed=int(master_seed), path_index=int(path_index))


def coarsen_increments(increments: np.ndarray, m: int) -> np.ndarray:
    """Sum consecutive blocks of ``m`` increments along the last axis, left to right."""
    increments = np.asarray(increments, dtype=np.float64)
    n = increments.shape[-1]
    if isinstance(m, bool) or int(m) != m or m < 1:
        raise ArgumentError(f"coarsening factor must be a positive integer, got {m}")
    m = int(m)
    if n % m:
        raise ArgumentError(f"coarsening factor {m} does not divide n_steps={n}")
    blocks = increments.reshape(increments.shape[:-1] + (n // m, m))
    acc = blocks[..., 0].copy()
    for k in range(1, m):
        acc += blocks[..., k]
    return acc


def coarsen(grid: WienerGrid, m: int) -> WienerGrid:
    """Grid with step ``m*dt`` whose increments are block sums of ``grid``'s increments."""
    inc = coarsen_increments(grid.increments, m)
    return WienerGrid(dt=grid.dt * m, increments=inc, master_seed=grid.master_seed,
                      path_index=grid.path_index, factor=grid.factor * int(m))


def dump(grid: WienerGrid, path: str | Path) -> None:
    """Write a grid as a 32-byte header followed by little-endian float64 increments."""
    if grid.n_steps >= 2 ** 32:
        raise ArgumentError("n_steps does not fit the 32-bit header field")
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, 0, grid.n_steps, grid.path_index,
                          grid.dt, grid.master_seed)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(grid.increments.astype("<f8").tobytes())


def load(path: str | Path) -> WienerGrid:
    """Inverse of :func:`dump`."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _HEADER.size:
        raise ArgumentError("file too short for a grid header")
    magic, version, _, n_steps, path_index, dt, master_seed = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ArgumentError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise ArgumentError(f"unsupported grid format version {version}")
    body = data[_HEADER.size:]
    if len(body) != 8 * n_steps:
        raise ArgumentError(f"expected {n_steps} increments, found {len(body) / 8:g}")
    inc = np.frombuffer(body, dtype="<f8").astype(np.float64)
    return WienerGrid(dt=dt, increments=inc, master_seed=master_seed, path_index=path_index)
