"""Joint-space grids, voxelized fingertip workspaces and their overlaps."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .errors import DomainError
from .kinematics import KinematicChain, fingertip_positions

DEFAULT_RESOLUTION = math.pi / 36
DEFAULT_VOXEL_SIZE = 0.05

# Tolerance (in units of the resolution) for treating a range as an exact multiple.
_MULTIPLE_TOL = 1e-9


@dataclass(frozen=True)
class JointGrid:
    """Cartesian product of per-joint sample axes, enumerated lexicographically."""

    axes: tuple[np.ndarray, ...]
    resolution: float

    @property
    def dimension(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.axes)

    @property
    def size(self) -> int:
        return math.prod(self.shape) if self.axes else 0

    def chunks(self, chunk_size: int = 65536) -> Iterator[np.ndarray]:
        """Yield ``(m, dimension)`` blocks of configurations in lexicographic order."""
        total = self.size
        for start in range(0, total, chunk_size):
            idx = np.unravel_index(np.arange(start, min(start + chunk_size, total)), self.shape)
            yield np.stack([axis[i] for axis, i in zip(self.axes, idx)], axis=1)

    def configurations(self) -> np.ndarray:
        if self.size == 0:
            return np.empty((0, self.dimension))
        return np.concatenate(list(self.chunks(self.size)))


def _axis_samples(lo: float, hi: float, resolution: float) -> np.ndarray:
    if lo == hi:
        return np.array([lo])
    steps = (hi - lo) / resolution
    n = round(steps)
    if abs(steps - n) <= _MULTIPLE_TOL * max(1.0, steps):
        # lo + span * (k / n) keeps coarse samples bitwise inside finer grids
        # whose step divides this one.
        samples = lo + (hi - lo) * (np.arange(n + 1) / n)
    else:
        samples = np.append(lo + resolution * np.arange(math.floor(steps) + 1), hi)
    samples[-1] = hi
    return samples


def sample_joint_grid(limits: Sequence[tuple[float, float]], resolution: float) -> JointGrid:
    if not resolution > 0 or not math.isfinite(resolution):
        raise DomainError(f"resolution must be positive, got {resolution!r}")
    axes = []
    for k, (lo, hi) in enumerate(limits):
        if not lo <= hi:
            raise DomainError(f"joint {k} has min {lo} > max {hi}")
        axes.append(_axis_samples(float(lo), float(hi), resolution))
    return JointGrid(tuple(axes), float(resolution))


def chain_grid(chain: KinematicChain, resolution: float = DEFAULT_RESOLUTION) -> JointGrid:
    return sample_joint_grid(chain.joint_limits, resolution)


@dataclass(frozen=True)
class VoxelSet:
    voxel_size: float
    cells: frozenset

    def __post_init__(self):
        if not self.voxel_size > 0:
            raise DomainError(f"voxel size must be positive, got {self.voxel_size!r}")
        object.__setattr__(self, "cells", frozenset(self.cells))

    def __len__(self) -> int:
        return len(self.cells)

    def as_array(self) -> np.ndarray:
        """Cells as a lexicographically sorted ``(k, 3)`` integer array."""
        if not self.cells:
            return np.empty((0, 3), dtype=np.int64)
        return np.array(sorted(self.cells), dtype=np.int64)


def voxel_indices(points: np.ndarray, voxel_size: float) -> np.ndarray:
    """Floor-divide world coordinates into integer cells anchored at the origin."""
    return np.floor(np.asarray(points) / voxel_size).astype(np.int64)


def fingertip_cloud(chain: KinematicChain, grid: JointGrid, chunk_size: int = 65536) -> np.ndarray:
    _check_grid(chain, grid)
    return np.concatenate([fingertip_positions(chain, qs) for qs in grid.chunks(chunk_size)])


def reachable_voxels(
    chain: KinematicChain,
    grid: JointGrid,
    voxel_size: float = DEFAULT_VOXEL_SIZE,
    chunk_size: int = 65536,
) -> VoxelSet:
    if not voxel_size > 0:
        raise DomainError(f"voxel size must be positive, got {voxel_size!r}")
    _check_grid(chain, grid)
    blocks = []
    for qs in grid.chunks(chunk_size):
        cells = voxel_indices(fingertip_positions(chain, qs), voxel_size)
        blocks.append(np.unique(cells, axis=0))
    unique = np.unique(np.concatenate(blocks), axis=0)
    return VoxelSet(voxel_size, frozenset(map(tuple, unique.tolist())))


def overlap_volume(a: VoxelSet, b: VoxelSet) -> int:
    """Number of voxels reachable by both sets."""
    if a.voxel_size != b.voxel_size:
        raise DomainError(
            f"voxel sizes differ ({a.voxel_size!r} vs {b.voxel_size!r}); volumes are incomparable"
        )
    small, large = (a.cells, b.cells) if len(a.cells) <= len(b.cells) else (b.cells, a.cells)
    return sum(1 for c in small if c in large)


def _check_grid(chain: KinematicChain, grid: JointGrid) -> None:
    if grid.dimension != chain.joint_count:
        raise DomainError(
            f"grid has {grid.dimension} axes but the chain has {chain.joint_count} joints"
        )


def write_voxel_csv(path, voxels: VoxelSet) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerows(voxels.as_array().tolist())


def read_voxel_csv(path, voxel_size: float = DEFAULT_VOXEL_SIZE) -> VoxelSet:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return VoxelSet(voxel_size, frozenset(tuple(int(v) for v in row) for row in rows if row))


def write_points_csv(path, points: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for p in np.asarray(points):
            writer.writerow([repr(float(v)) for v in p])


def read_points_csv(path) -> np.ndarray:
    return np.loadtxt(Path(path), delimiter=",", ndmin=2)
